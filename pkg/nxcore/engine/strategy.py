"""Choix de la stratégie de mise à jour (SPU / DPU / MPU) selon le budget mémoire."""

from typing import Literal

from pydantic import BaseModel, Field, model_validator

from nxcore.core.config import settings
from nxcore.core.errors import InfeasibleBudgetError
from nxcore.core.formats import VERTEX_DTYPE
from nxcore.core.logger import setup_logger
from nxcore.core.models import GraphManifest
from nxcore.engine.sync import SyncMode

logger = setup_logger(__name__)

StrategyKind = Literal["SPU", "DPU", "MPU"]
StrategyChoice = Literal["auto", "spu", "dpu", "mpu"]


class StrategyPlan(BaseModel):
    """
    Stratégie retenue pour un run.

    Les Q premiers intervalles restent en mémoire (paires ping-pong); les P - Q
    autres vivent sur disque et échangent leurs contributions par les hubs.
    """

    kind: StrategyKind = Field(..., description="SPU, DPU ou MPU")
    resident: int = Field(..., ge=0, description="Q, nombre d'intervalles résidents")
    partitions: int = Field(..., ge=1, description="P")
    sync_mode: SyncMode = Field(default="callback", description="callback ou lock")
    cache_budget: int = Field(
        default=0,
        ge=0,
        description="Octets de budget restants pour le cache de sous-shards (SPU)",
    )

    @model_validator(mode="after")
    def _check_kind(self) -> "StrategyPlan":
        if self.resident > self.partitions:
            raise ValueError(f"Q={self.resident} exceeds P={self.partitions}")
        expected = kind_for(self.resident, self.partitions)
        if self.kind != expected:
            raise ValueError(
                f"Q={self.resident} of P={self.partitions} is {expected}, not {self.kind}"
            )
        return self

    @property
    def label(self) -> str:
        return f"MPU({self.resident})" if self.kind == "MPU" else self.kind


def kind_for(resident: int, partitions: int) -> StrategyKind:
    if resident == partitions:
        return "SPU"
    if resident == 0:
        return "DPU"
    return "MPU"


def budget_floor(max_interval: int, attr_width: int) -> int:
    """Plus petit budget exécutable: un intervalle hors mémoire et un tampon de flux."""
    return max_interval * attr_width + settings.STREAM_BUFFER_BYTES


def cache_charge(edge_count: int) -> int:
    """Octets imputés au cache SPU pour un sous-shard: B_e par arête."""
    return edge_count * VERTEX_DTYPE.itemsize


def resident_count(n: int, partitions: int, attr_width: int, budget: int) -> int:
    """Q = floor(B_M / (2 n B_a) * P), borné à P."""
    return min(partitions, (budget * partitions) // (2 * n * attr_width))


def select_strategy(
    manifest: GraphManifest,
    budget: int,
    attr_width: int,
    sync_mode: SyncMode = "callback",
) -> StrategyPlan:
    """
    Choisit la stratégie pour un budget mémoire.

    Si B_M >= 2 n B_a: SPU, le reste du budget sert au cache de sous-shards.
    Sinon Q = floor(B_M / (2 n B_a) * P); Q = 0 donne DPU, sinon MPU(Q).

    Args:
        manifest: Manifeste du graphe
        budget: B_M en octets
        attr_width: B_a du noyau
        sync_mode: Mécanisme d'ordonnancement

    Raises:
        InfeasibleBudgetError: Si le budget est sous le plancher exécutable
    """
    n, partitions = manifest.n, manifest.partitions
    floor = budget_floor(manifest.max_interval_size, attr_width)
    if budget <= 0 or budget < floor:
        raise InfeasibleBudgetError(
            f"infeasible-budget: {budget} bytes is below the {floor}-byte floor "
            f"(one interval of {manifest.max_interval_size} x {attr_width} B plus one "
            f"{settings.STREAM_BUFFER_BYTES}-byte stream buffer)"
        )

    vertex_bytes = 2 * n * attr_width
    if budget >= vertex_bytes:
        plan = StrategyPlan(
            kind="SPU",
            resident=partitions,
            partitions=partitions,
            sync_mode=sync_mode,
            cache_budget=budget - vertex_bytes,
        )
    else:
        resident = resident_count(n, partitions, attr_width, budget)
        plan = StrategyPlan(
            kind=kind_for(resident, partitions),
            resident=resident,
            partitions=partitions,
            sync_mode=sync_mode,
        )
    logger.info(f"[ENGINE] Budget {budget} B -> {plan.label}")
    return plan


def plan_for(
    manifest: GraphManifest,
    attr_width: int,
    choice: StrategyChoice = "auto",
    budget: int | None = None,
    resident: int | None = None,
    sync_mode: SyncMode = "callback",
) -> StrategyPlan:
    """
    Construit un plan à partir des options de la CLI.

    `auto` délègue à select_strategy (budget obligatoire). Une stratégie
    explicite est validée contre le manifeste et, si un budget est donné,
    contre ce budget. Sans budget, aucun cache n'est alloué.

    Raises:
        InfeasibleBudgetError: Stratégie ou Q incompatible avec le budget
        ValueError: Q invalide pour la stratégie demandée
    """
    partitions = manifest.partitions
    vertex_bytes = 2 * manifest.n * attr_width

    if choice == "auto":
        if resident is not None:
            return plan_for(manifest, attr_width, "mpu", budget, resident, sync_mode)
        if budget is None:
            return StrategyPlan(
                kind="SPU", resident=partitions, partitions=partitions, sync_mode=sync_mode
            )
        return select_strategy(manifest, budget, attr_width, sync_mode)

    if budget is not None:
        floor = budget_floor(manifest.max_interval_size, attr_width)
        if budget < floor:
            raise InfeasibleBudgetError(
                f"infeasible-budget: {budget} bytes is below the {floor}-byte floor"
            )

    if choice == "spu":
        if budget is not None and budget < vertex_bytes:
            raise InfeasibleBudgetError(
                f"infeasible-budget: SPU needs {vertex_bytes} bytes for ping-pong intervals"
            )
        cache = 0 if budget is None else budget - vertex_bytes
        return StrategyPlan(
            kind="SPU",
            resident=partitions,
            partitions=partitions,
            sync_mode=sync_mode,
            cache_budget=cache,
        )

    if choice == "dpu":
        return StrategyPlan(kind="DPU", resident=0, partitions=partitions, sync_mode=sync_mode)

    if resident is None:
        if budget is None:
            raise ValueError("MPU needs --resident or --budget")
        resident = resident_count(manifest.n, partitions, attr_width, budget)
    if resident < 0 or resident > partitions:
        raise ValueError(f"Q={resident} must satisfy 0 <= Q <= P={partitions}")
    if budget is not None and resident * vertex_bytes > budget * partitions:
        raise InfeasibleBudgetError(
            f"infeasible-budget: Q={resident} resident intervals exceed {budget} bytes"
        )
    return StrategyPlan(
        kind=kind_for(resident, partitions),
        resident=resident,
        partitions=partitions,
        sync_mode=sync_mode,
    )
