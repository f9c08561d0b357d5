"""État du moteur entre deux itérations: intervalles ping-pong, activité, cache."""

from dataclasses import dataclass, field

import numpy as np

from nxcore.core.formats import Interval, SubShardBlock, load_interval, save_interval
from nxcore.core.graph_model import IntervalRange
from nxcore.core.logger import setup_logger
from nxcore.core.storage import GraphStore
from nxcore.engine.strategy import StrategyPlan, cache_charge
from nxcore.kernels.base import Kernel

logger = setup_logger(__name__)


@dataclass
class IntervalSlot:
    """
    Un intervalle vu par le moteur.

    Un intervalle résident garde deux tampons: `prev` (valeurs validées à
    l'itération précédente, en lecture seule pendant l'itération) et `cur`
    (valeurs en construction). Un intervalle non résident vit dans
    intervals/iv_<j>.nxiv.
    """

    range: IntervalRange
    resident: bool
    active: bool = False
    prev: np.ndarray | None = None
    cur: np.ndarray | None = None


@dataclass
class EngineState:
    """
    État complet d'un run.

    Attributes:
        slots: Un IntervalSlot par intervalle
        iteration: Numéro de la dernière itération terminée
        cache: Sous-shards gardés en mémoire (SPU), par (i, j)
        cache_bytes: Octets de cache consommés (B_e par arête en cache)
        out_degree: Degrés sortants (noyaux qui en ont besoin)
    """

    store: GraphStore
    kernel: Kernel
    plan: StrategyPlan
    slots: list[IntervalSlot] = field(default_factory=list)
    iteration: int = 0
    cache: dict[tuple[int, int], SubShardBlock] = field(default_factory=dict)
    cache_bytes: int = 0
    out_degree: np.ndarray | None = None

    @classmethod
    def create(cls, store: GraphStore, kernel: Kernel, plan: StrategyPlan) -> "EngineState":
        ranges = store.ranges()
        slots = [IntervalSlot(range=r, resident=r.index < plan.resident) for r in ranges]
        return cls(store=store, kernel=kernel, plan=plan, slots=slots)

    @property
    def partitions(self) -> int:
        return len(self.slots)

    def active_set(self) -> list[int]:
        return [slot.range.index for slot in self.slots if slot.active]

    def any_active(self) -> bool:
        return any(slot.active for slot in self.slots)

    def initialize(self) -> None:
        """Valeurs initiales: en mémoire pour les résidents, sur disque pour les autres."""
        if self.kernel.needs_out_degree:
            self.out_degree = self.store.read_out_degrees()

        for slot in self.slots:
            values = np.ascontiguousarray(
                self.kernel.initial_values(slot.range), dtype=self.kernel.dtype
            )
            slot.active = self.kernel.initially_active(slot.range)
            if slot.resident:
                values.flags.writeable = False
                slot.prev = values
            else:
                save_interval(
                    self.store.interval_path(slot.range.index),
                    Interval(first=slot.range.first, values=values),
                    self.store.counters,
                )

    def warm_cache(self) -> None:
        """
        Charge en mémoire les sous-shards que le budget restant permet (SPU).

        Parcours ligne par ligne; le chargement s'arrête au premier sous-shard
        qui ne tient plus dans le budget.
        """
        if self.plan.kind != "SPU" or self.plan.cache_budget <= 0:
            return

        shard_set = self.kernel.shard_set
        for i in range(self.partitions):
            for j in range(self.partitions):
                edges = self.store.subshard_edge_count(i, j, shard_set)
                if edges == 0:
                    continue
                size = cache_charge(edges)
                if self.cache_bytes + size > self.plan.cache_budget:
                    logger.info(
                        f"[ENGINE] Sub-shard cache full at SS({i},{j}): "
                        f"{len(self.cache)} blocks, {self.cache_bytes} bytes"
                    )
                    return
                self.cache[(i, j)] = self.store.read_subshard(i, j, shard_set)
                self.cache_bytes += size
        logger.info(f"[ENGINE] All {len(self.cache)} non-empty sub-shards cached")

    def begin_iteration(self) -> None:
        for slot in self.slots:
            if slot.resident:
                assert slot.prev is not None
                slot.cur = self.kernel.seed(slot.prev)

    def swap(self) -> None:
        """Échange ping-pong: les valeurs courantes deviennent les valeurs validées."""
        for slot in self.slots:
            if slot.resident and slot.cur is not None:
                slot.prev = slot.cur
                slot.prev.flags.writeable = False
                slot.cur = None

    def load_source(self, index: int) -> np.ndarray:
        """Valeurs validées d'un intervalle non résident (une lecture de fichier)."""
        slot = self.slots[index]
        interval = load_interval(
            self.store.interval_path(index),
            self.kernel.dtype,
            expected=slot.range,
            counters=self.store.counters,
        )
        interval.values.flags.writeable = False
        return interval.values

    def values(self) -> np.ndarray:
        """Valeurs finales de tous les sommets, par identifiant dense."""
        parts = []
        for slot in self.slots:
            if slot.resident:
                assert slot.prev is not None
                parts.append(np.asarray(slot.prev))
            else:
                parts.append(self.load_source(slot.range.index))
        return np.concatenate(parts)
