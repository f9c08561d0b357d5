"""Parcours en largeur: profondeur minimale depuis une racine."""

import numpy as np

from nxcore.core.errors import VertexOutOfRangeError
from nxcore.core.graph_model import IntervalRange
from nxcore.kernels.base import Kernel, KernelOutput

# Profondeur d'un sommet non atteint
SENTINEL = np.uint32(2**32 - 1)


class BfsKernel(Kernel):
    """
    depth'(v) = min(depth(v), min_{u -> v} depth(u) + 1)

    Seul l'intervalle de la racine est actif au départ; un sommet non atteint
    ne propage rien.
    """

    name = "bfs"
    dtype = np.dtype(np.uint32)
    neutral = SENTINEL
    combine = np.minimum
    copy_forward = True

    def __init__(self, root: int, n: int) -> None:
        if root < 0 or root >= n:
            raise VertexOutOfRangeError(f"root {root} is outside [0, {n})")
        self.root = root
        self.n = n

    def initial_values(self, interval: IntervalRange) -> np.ndarray:
        values = np.full(interval.count, SENTINEL, dtype=self.dtype)
        if self.root in interval:
            values[self.root - interval.first] = 0
        return values

    def initially_active(self, interval: IntervalRange) -> bool:
        return self.root in interval

    def gather(self, src_values: np.ndarray, src_out_degree: np.ndarray | None) -> np.ndarray:
        reached = src_values != SENTINEL
        return np.where(reached, src_values + np.uint32(1), SENTINEL).astype(self.dtype)

    def output(self, values: np.ndarray) -> KernelOutput:
        reached = values[values != SENTINEL]
        return KernelOutput(
            kernel=self.name,
            summary={"max_depth": int(reached.max()), "reached": int(reached.size)},
        )
