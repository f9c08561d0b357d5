"""Moteur d'exécution: stratégies SPU, DPU et MPU."""

from nxcore.engine.runner import Engine, IterationStats, RunResult
from nxcore.engine.strategy import StrategyPlan, plan_for, select_strategy

__all__ = ["Engine", "IterationStats", "RunResult", "StrategyPlan", "plan_for", "select_strategy"]
