"""
Ordonnancement inter-lignes des mises à jour d'un intervalle destination.

Les unités d'un même sous-shard ont des destinations disjointes et s'appliquent
en parallèle. Pour une colonne j partagée par plusieurs lignes, les unités de
SS(i, j) ne s'appliquent qu'une fois toutes celles de la ligne précédemment
enregistrée terminées: l'ordre de combinaison par destination est donc fixé
(source croissante), quel que soit le nombre de threads.

Deux mécanismes équivalents:
    callback: la fin de l'unité est signalée par un callback de fin de future
    lock:     un verrou par intervalle destination entoure l'application

Les unités sont soumises ligne par ligne à un pool FIFO: toutes les unités
d'une ligne démarrent avant celles de la ligne suivante, l'attente d'un tour
ne peut donc pas bloquer le pool.
"""

import threading
from collections import deque
from collections.abc import Callable
from concurrent.futures import Future
from typing import Literal, TypeVar

from nxcore.core.errors import KernelContractError

SyncMode = Literal["callback", "lock"]
SYNC_MODES: tuple[SyncMode, ...] = ("callback", "lock")

T = TypeVar("T")


class ColumnGate:
    """Tours de passage des lignes pour un intervalle destination."""

    def __init__(self, column: int) -> None:
        self.column = column
        self._cond = threading.Condition()
        self._turns: deque[list[int]] = deque()  # [ligne, unités restantes]
        self.apply_lock = threading.Lock()

    def register(self, row: int, units: int) -> None:
        """Réserve un tour pour `units` unités de la ligne `row` (thread de dispatch)."""
        if units <= 0:
            return
        with self._cond:
            self._turns.append([row, units])

    def wait_turn(self, row: int) -> None:
        with self._cond:
            self._cond.wait_for(lambda: bool(self._turns) and self._turns[0][0] == row)

    def release(self, row: int) -> None:
        """Signale la fin d'une unité de `row`; attend son tour si besoin."""
        with self._cond:
            self._cond.wait_for(lambda: bool(self._turns) and self._turns[0][0] == row)
            self._turns[0][1] -= 1
            if self._turns[0][1] == 0:
                self._turns.popleft()
                self._cond.notify_all()

    @property
    def idle(self) -> bool:
        with self._cond:
            return not self._turns


class OwnershipTracker:
    """
    Étiquettes de propriété des destinations (mode debug).

    Chaque application revendique une plage [lo, hi) d'un intervalle; deux
    revendications concurrentes qui se chevauchent lèvent KernelContractError.
    """

    def __init__(self) -> None:
        self._lock = threading.Lock()
        self._claims: dict[int, list[tuple[int, int]]] = {}

    def claim(self, column: int, lo: int, hi: int) -> None:
        with self._lock:
            held = self._claims.setdefault(column, [])
            for other_lo, other_hi in held:
                if lo < other_hi and other_lo < hi:
                    raise KernelContractError(
                        f"interval {column}: destinations [{lo}, {hi}) already owned by "
                        f"[{other_lo}, {other_hi})"
                    )
            held.append((lo, hi))

    def release(self, column: int, lo: int, hi: int) -> None:
        with self._lock:
            self._claims[column].remove((lo, hi))


class RowOrderedSync:
    """Ordonne les applications de contributions par ligne, pour chaque colonne."""

    def __init__(self, mode: SyncMode, partitions: int, track_ownership: bool = False) -> None:
        if mode not in SYNC_MODES:
            raise KernelContractError(f"unknown sync mode '{mode}'")
        self.mode = mode
        self.gates = [ColumnGate(j) for j in range(partitions)]
        self.ownership = OwnershipTracker() if track_ownership else None

    def register(self, column: int, row: int, units: int) -> None:
        self.gates[column].register(row, units)

    def run_ordered(
        self,
        column: int,
        row: int,
        compute: Callable[[], T],
        apply: Callable[[T], None],
    ) -> None:
        """
        Corps d'une unité: calcul libre, puis application au tour de sa ligne.

        En mode lock, le tour est libéré ici; en mode callback, c'est le
        callback attaché à la future (voir attach) qui le libère.
        """
        gate = self.gates[column]
        if self.mode == "callback":
            result = compute()
            gate.wait_turn(row)
            apply(result)
            return

        try:
            result = compute()
            gate.wait_turn(row)
            with gate.apply_lock:
                apply(result)
        finally:
            gate.release(row)

    def attach(self, future: "Future[None]", column: int, row: int) -> None:
        """En mode callback, la fin de la future libère le tour de la ligne."""
        if self.mode == "callback":
            future.add_done_callback(lambda _: self.gates[column].release(row))

    def claim(self, column: int, lo: int, hi: int) -> None:
        if self.ownership is not None:
            self.ownership.claim(column, lo, hi)

    def unclaim(self, column: int, lo: int, hi: int) -> None:
        if self.ownership is not None:
            self.ownership.release(column, lo, hi)

    def drained(self) -> bool:
        return all(gate.idle for gate in self.gates)
