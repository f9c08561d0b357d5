"""
Pilote d'itérations: ordonnancements SPU, DPU et MPU.

Les trois stratégies partagent un seul ordonnancement paramétré par Q, le
nombre d'intervalles résidents:

1. Bloc résident Q x Q: mise à jour directe (chemin SPU), ligne par ligne.
2. Lignes Q..P-1: chaque intervalle source actif est chargé une fois; ses
   sous-shards vers une destination résidente suivent le chemin SPU, ceux vers
   une destination hors mémoire produisent un hub (ToHub).
3. Colonnes Q..P-1: la destination est amorcée, reçoit les contributions des
   sources résidentes puis les hubs par source croissante (FromHub), et est
   écrite une fois.

Q = P donne SPU (étapes 2 et 3 vides), Q = 0 donne DPU (étape 1 vide).
Pour toute destination, les contributions de SS(i, j) s'appliquent par i
croissant: les trois stratégies produisent des résultats identiques bit à bit.
"""

import time
from concurrent.futures import Future, ThreadPoolExecutor, wait
from dataclasses import dataclass, field
from functools import partial
from pathlib import Path

import numpy as np
from pydantic import BaseModel, Field

from nxcore.core.config import settings
from nxcore.core.errors import HubMissingError, KernelContractError
from nxcore.core.formats import (
    Interval,
    SubShardBlock,
    iter_interval_chunks,
    load_interval,
    read_hub,
    save_interval,
    write_hub,
)
from nxcore.core.graph_model import IntervalRange, SubShardId
from nxcore.core.io_counters import IoCounters, IoSnapshot
from nxcore.core.logger import setup_logger
from nxcore.core.storage import GraphStore
from nxcore.engine.state import EngineState
from nxcore.engine.strategy import StrategyPlan
from nxcore.engine.sync import RowOrderedSync
from nxcore.engine.work import partition_work, target_unit_count, unit_contributions
from nxcore.kernels.base import Kernel, KernelOutput

logger = setup_logger(__name__)


class IterationStats(BaseModel):
    """Statistiques d'une itération (une ligne de la sortie de stats)."""

    iteration: int = Field(..., ge=1)
    strategy: str = Field(..., description="SPU, DPU ou MPU(Q)")
    active_intervals: int = Field(..., description="Intervalles actifs après l'itération")
    active_set: list[int] = Field(default_factory=list, description="Ordinaux actifs")
    changed_vertices: int = 0
    bytes_read: int = 0
    bytes_written: int = 0
    wall_ms: float = 0.0
    subshard_visits: int = 0
    subshard_opens: int = 0
    hub_records: int = 0
    interval_loads: int = 0
    interval_saves: int = 0
    edges: int = Field(default=0, description="Arêtes parcourues")
    io: IoSnapshot = Field(default_factory=IoSnapshot, description="E/S de l'itération")

    @property
    def mteps(self) -> float:
        """Millions d'arêtes parcourues par seconde."""
        if self.wall_ms <= 0:
            return 0.0
        return self.edges / (self.wall_ms * 1000.0)

    def stats_line(self) -> str:
        return (
            f"iter={self.iteration} strategy={self.strategy} "
            f"active_intervals={self.active_intervals} "
            f"changed_vertices={self.changed_vertices} "
            f"bytes_read={self.bytes_read} bytes_written={self.bytes_written} "
            f"wall_ms={self.wall_ms:.3f} subshard_visits={self.subshard_visits} "
            f"subshard_opens={self.subshard_opens} hub_records={self.hub_records} "
            f"interval_loads={self.interval_loads} interval_saves={self.interval_saves} "
            f"mteps={self.mteps:.3f}"
        )


@dataclass
class RunResult:
    """
    Résultat d'un run.

    Attributes:
        values: Attribut final de chaque sommet, par identifiant dense
        iterations: Statistiques par itération
        plan: Stratégie exécutée
        output: Résumé produit par le noyau
        warmup: E/S avant la première itération (initialisation, cache)
    """

    values: np.ndarray
    iterations: list[IterationStats]
    plan: StrategyPlan
    output: KernelOutput
    warmup: IoSnapshot = field(default_factory=IoSnapshot)

    @property
    def iteration_count(self) -> int:
        return len(self.iterations)


@dataclass
class _Tally:
    visits: int = 0
    hub_records: int = 0
    loads: int = 0
    saves: int = 0
    edges: int = 0


class Engine:
    """
    Exécute un noyau sur un graphe prétraité selon un plan.

    Example:
        >>> engine = Engine(GraphStore("graph/"), bfs_kernel(0), plan, threads=4)
        >>> result = engine.run(max_iters=100)
    """

    def __init__(
        self,
        store: GraphStore,
        kernel: Kernel,
        plan: StrategyPlan,
        threads: int = settings.DEFAULT_THREADS,
    ) -> None:
        """
        Initialise le moteur.

        Args:
            store: Graphe prétraité
            kernel: Noyau à exécuter
            plan: Stratégie (Q résidents)
            threads: Taille du pool de travail

        Raises:
            ConfigurationError: Si l'ensemble de sous-shards du noyau manque
        """
        if plan.partitions != store.manifest.partitions:
            raise KernelContractError(
                f"plan built for P={plan.partitions}, graph has P={store.manifest.partitions}"
            )
        store.require_set(kernel.shard_set)
        self.store = store
        self.kernel = kernel
        self.plan = plan
        self.threads = max(1, threads)
        self.state = EngineState.create(store, kernel, plan)
        self._hub_counts: dict[tuple[int, int], int] = {}

    @property
    def counters(self) -> IoCounters:
        return self.store.counters

    # ------------------------------------------------------------------
    # Run complet
    # ------------------------------------------------------------------

    def run(self, max_iters: int) -> RunResult:
        """
        Itère jusqu'à ce que tous les intervalles soient inactifs ou max_iters atteint.

        Returns:
            Valeurs finales, statistiques par itération et résumé du noyau
        """
        started = self.counters.snapshot()
        self.store.clear_work_dirs()
        self.store.prepare_work_dirs()
        self.state.initialize()
        self.state.warm_cache()
        warmup = self.counters.snapshot().minus(started)

        logger.info(
            f"[ENGINE] {self.kernel.name} on {self.store.root} with {self.plan.label}, "
            f"threads={self.threads}, sync={self.plan.sync_mode}"
        )

        iterations: list[IterationStats] = []
        try:
            while self.state.iteration < max_iters and self.state.any_active():
                iterations.append(self._dispatch_iteration())
            values = self.state.values()
        finally:
            self.store.clear_work_dirs()

        output = self.kernel.output(values)
        logger.info(
            f"[ENGINE] {self.kernel.name} finished after {len(iterations)} iterations: "
            f"{output.summary_line()}"
        )
        return RunResult(
            values=values,
            iterations=iterations,
            plan=self.plan,
            output=output,
            warmup=warmup,
        )

    def _dispatch_iteration(self) -> IterationStats:
        if self.plan.kind == "SPU":
            return self.run_iteration_spu()
        if self.plan.kind == "DPU":
            return self.run_iteration_dpu()
        return self.run_iteration_mpu()

    def run_iteration_spu(self) -> IterationStats:
        """Une itération à phase unique: tous les intervalles en mémoire."""
        if self.plan.kind != "SPU":
            raise KernelContractError(f"SPU iteration requested with plan {self.plan.label}")
        return self._iterate()

    def run_iteration_dpu(self) -> IterationStats:
        """Une itération à double phase: ToHub par ligne puis FromHub par colonne."""
        if self.plan.kind != "DPU":
            raise KernelContractError(f"DPU iteration requested with plan {self.plan.label}")
        return self._iterate()

    def run_iteration_mpu(self) -> IterationStats:
        """Une itération mixte: bloc Q x Q en mémoire, hubs pour les (P - Q)^2 autres."""
        if self.plan.kind != "MPU":
            raise KernelContractError(f"MPU iteration requested with plan {self.plan.label}")
        return self._iterate()

    # ------------------------------------------------------------------
    # Itération
    # ------------------------------------------------------------------

    def _row_runs(self, row: int, active: list[bool]) -> bool:
        # Une source inchangée ne peut modifier aucune destination d'un noyau à recopie
        return active[row] or not self.kernel.copy_forward

    def _iterate(self) -> IterationStats:
        state = self.state
        resident, partitions = self.plan.resident, self.plan.partitions
        active = [slot.active for slot in state.slots]
        tally = _Tally()
        before = self.counters.snapshot()
        t0 = time.perf_counter()

        state.begin_iteration()
        sync = RowOrderedSync(self.plan.sync_mode, partitions, settings.DEBUG_OWNERSHIP)
        changed_columns: dict[int, int] = {}

        with ThreadPoolExecutor(max_workers=self.threads) as pool:
            pending: list[Future[None]] = []

            for i in range(resident):
                if not self._row_runs(i, active):
                    continue
                src = state.slots[i].prev
                assert src is not None
                for j in range(resident):
                    pending += self._dispatch_direct(pool, sync, tally, i, j, src)

            if resident < partitions:
                self.store.clear_hubs()
                self._hub_counts.clear()
                for i in range(resident, partitions):
                    if not self._row_runs(i, active):
                        continue
                    src = state.load_source(i)
                    tally.loads += 1
                    row_futures: list[Future[None]] = []
                    for j in range(resident):
                        row_futures += self._dispatch_direct(pool, sync, tally, i, j, src)
                    for j in range(resident, partitions):
                        self._to_hub(pool, tally, i, j, src)
                    self._wait(row_futures)

                for j in range(resident, partitions):
                    changed_columns[j] = self._from_hub(pool, sync, tally, j, active)

            self._wait(pending)

        if not sync.drained():
            raise KernelContractError("row turns left pending at the end of the iteration")

        changed_total = 0
        for slot in state.slots:
            index = slot.range.index
            if slot.resident:
                assert slot.prev is not None and slot.cur is not None
                count = self._count_changed(slot.prev, slot.cur)
            else:
                count = changed_columns.get(index, 0)
            slot.active = count > 0
            changed_total += count
        state.swap()
        state.iteration += 1

        wall_ms = (time.perf_counter() - t0) * 1000.0
        self.counters.mark_iteration()
        delta = self.counters.snapshot().minus(before)
        stats = IterationStats(
            iteration=state.iteration,
            strategy=self.plan.label,
            active_intervals=len(state.active_set()),
            active_set=state.active_set(),
            changed_vertices=changed_total,
            bytes_read=delta.bytes_read,
            bytes_written=delta.bytes_written,
            wall_ms=wall_ms,
            subshard_visits=tally.visits,
            subshard_opens=delta.category("subshard").opens,
            hub_records=tally.hub_records,
            interval_loads=tally.loads,
            interval_saves=tally.saves,
            edges=tally.edges,
            io=delta,
        )
        logger.debug(f"[ENGINE] {stats.stats_line()}")
        return stats

    def _count_changed(self, old: np.ndarray, new: np.ndarray) -> int:
        if self.kernel.always_changed:
            return int(new.size)
        return int(np.count_nonzero(self.kernel.changed(old, new)))

    @staticmethod
    def _wait(futures: list[Future[None]]) -> None:
        wait(futures)
        for future in futures:
            future.result()

    # ------------------------------------------------------------------
    # Sous-shards
    # ------------------------------------------------------------------

    def _subshard(self, i: int, j: int) -> SubShardBlock:
        cached = self.state.cache.get((i, j))
        if cached is not None:
            return cached
        return self.store.read_subshard(i, j, self.kernel.shard_set)

    def _dispatch_direct(
        self,
        pool: ThreadPoolExecutor,
        sync: RowOrderedSync,
        tally: _Tally,
        i: int,
        j: int,
        src: np.ndarray,
        changed_mask: np.ndarray | None = None,
        dst: np.ndarray | None = None,
    ) -> list[Future[None]]:
        """Soumet les unités de SS(i, j) appliquées directement dans la destination."""
        tally.visits += 1
        edge_count = self.store.subshard_edge_count(i, j, self.kernel.shard_set)
        if edge_count == 0:
            return []

        target = dst if dst is not None else self.state.slots[j].cur
        assert target is not None
        block = self._subshard(i, j)
        units = partition_work(
            block, SubShardId(i, j), target_unit_count(edge_count, self.threads)
        )
        tally.edges += edge_count

        src_first = self.state.slots[i].range.first
        dst_first = self.state.slots[j].range.first
        sync.register(j, i, len(units))
        futures = []
        for unit in units:
            compute = partial(
                unit_contributions,
                self.kernel,
                block,
                unit,
                src,
                src_first,
                self.state.out_degree,
            )
            apply = partial(self._apply, sync, j, target, dst_first, changed_mask)
            future = pool.submit(sync.run_ordered, j, i, compute, apply)
            sync.attach(future, j, i)
            futures.append(future)
        return futures

    def _apply(
        self,
        sync: RowOrderedSync,
        column: int,
        target: np.ndarray,
        first: int,
        changed_mask: np.ndarray | None,
        contributions: tuple[np.ndarray, np.ndarray],
    ) -> None:
        dst_ids, values = contributions
        if dst_ids.size == 0:
            return
        local = dst_ids.astype(np.int64) - first
        lo, hi = int(local[0]), int(local[-1]) + 1
        sync.claim(column, lo, hi)
        try:
            if changed_mask is None:
                self.kernel.apply(target, local, values)
            else:
                old = target[local]
                self.kernel.apply(target, local, values)
                changed_mask[local] |= self.kernel.changed(old, target[local])
        finally:
            sync.unclaim(column, lo, hi)

    # ------------------------------------------------------------------
    # Hubs
    # ------------------------------------------------------------------

    def _to_hub(
        self, pool: ThreadPoolExecutor, tally: _Tally, i: int, j: int, src: np.ndarray
    ) -> None:
        """Écrit H(i, j): contributions combinées de SS(i, j), destinations croissantes."""
        tally.visits += 1
        dst_range = self.state.slots[j].range
        edge_count = self.store.subshard_edge_count(i, j, self.kernel.shard_set)

        if edge_count == 0:
            dst_ids = np.empty(0, dtype=np.uint32)
            values = np.empty(0, dtype=self.kernel.dtype)
        else:
            block = self._subshard(i, j)
            units = partition_work(
                block, SubShardId(i, j), target_unit_count(edge_count, self.threads)
            )
            futures = [
                pool.submit(
                    unit_contributions,
                    self.kernel,
                    block,
                    unit,
                    src,
                    self.state.slots[i].range.first,
                    self.state.out_degree,
                )
                for unit in units
            ]
            parts = [future.result() for future in futures]
            dst_ids = np.concatenate([part[0] for part in parts])
            values = np.concatenate([part[1] for part in parts]).astype(self.kernel.dtype)
            tally.edges += edge_count

        write_hub(self.store.hub_path(i, j), dst_ids, values, dst_range, self.counters)
        self._hub_counts[(i, j)] = int(dst_ids.size)
        tally.hub_records += int(dst_ids.size)

    def _from_hub(
        self,
        pool: ThreadPoolExecutor,
        sync: RowOrderedSync,
        tally: _Tally,
        j: int,
        active: list[bool],
    ) -> int:
        """
        Met à jour la colonne hors mémoire j et l'écrit une fois.

        Returns:
            Nombre de sommets modifiés dans l'intervalle j
        """
        resident = self.plan.resident
        slot = self.state.slots[j]
        dst_range = slot.range
        path = self.store.interval_path(j)
        shard_set = self.kernel.shard_set

        direct_rows = [
            i
            for i in range(resident)
            if self._row_runs(i, active) and self.store.subshard_edge_count(i, j, shard_set) > 0
        ]
        hub_rows = [i for i in range(resident, self.plan.partitions) if self._row_runs(i, active)]
        for i in hub_rows:
            if (i, j) not in self._hub_counts or not self.store.hub_path(i, j).exists():
                raise HubMissingError(f"hub H({i},{j}) missing for active source interval {i}")

        has_records = any(self._hub_counts[(i, j)] > 0 for i in hub_rows)
        if self.kernel.copy_forward and not direct_rows and not has_records:
            return 0

        changed_mask: np.ndarray | None = None
        if self.kernel.copy_forward:
            seed = load_interval(path, self.kernel.dtype, dst_range, self.counters).values
            current = seed
            if not self.kernel.always_changed:
                changed_mask = np.zeros(dst_range.count, dtype=bool)
        else:
            current = np.full(
                dst_range.count, self.kernel.iteration_init_value(), dtype=self.kernel.dtype
            )

        futures: list[Future[None]] = []
        for i in direct_rows:
            src = self.state.slots[i].prev
            assert src is not None
            futures += self._dispatch_direct(
                pool, sync, tally, i, j, src, changed_mask=changed_mask, dst=current
            )

        for i in hub_rows:
            dst_ids, values = read_hub(
                self.store.hub_path(i, j), self.kernel.dtype, dst_range, self.counters
            )
            if dst_ids.size == 0:
                continue
            chunks = max(1, min(self.threads, dst_ids.size))
            pieces = list(
                zip(np.array_split(dst_ids, chunks), np.array_split(values, chunks), strict=True)
            )
            sync.register(j, i, len(pieces))
            for piece in pieces:
                apply = partial(self._apply, sync, j, current, dst_range.first, changed_mask)
                future = pool.submit(sync.run_ordered, j, i, partial(_identity, piece), apply)
                sync.attach(future, j, i)
                futures.append(future)

        self._wait(futures)

        if self.kernel.always_changed:
            changed = dst_range.count
        elif changed_mask is not None:
            changed = int(np.count_nonzero(changed_mask))
        else:
            changed = self._stream_compare(path, current, dst_range)

        save_interval(path, Interval(first=dst_range.first, values=current), self.counters)
        tally.saves += 1
        return changed

    def _stream_compare(self, path: Path, current: np.ndarray, dst_range: IntervalRange) -> int:
        """Compte les sommets modifiés en relisant l'ancien intervalle par tampons."""
        changed = 0
        offset = 0
        for old in iter_interval_chunks(
            path,
            self.kernel.dtype,
            settings.STREAM_BUFFER_BYTES,
            expected=dst_range,
            counters=self.counters,
        ):
            new = current[offset : offset + old.size]
            changed += int(np.count_nonzero(self.kernel.changed(old, new)))
            offset += old.size
        if offset != dst_range.count:
            raise KernelContractError(f"{path}: compared {offset} of {dst_range.count} vertices")
        return changed


def _identity(
    piece: tuple[np.ndarray, np.ndarray],
) -> tuple[np.ndarray, np.ndarray]:
    return piece
