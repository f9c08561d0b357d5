"""PageRank amorti, sans redistribution de la masse des sommets sans arc sortant."""

import numpy as np

from nxcore.core.graph_model import IntervalRange
from nxcore.kernels.base import Kernel, KernelOutput


class PageRankKernel(Kernel):
    """
    rank'(v) = (1 - α) / n + Σ_{u -> v} α · rank(u) / out_degree(u)

    Chaque itération repart de (1 - α) / n: le noyau ne recopie pas les
    valeurs précédentes et toutes les lignes sont parcourues.
    Avec epsilon <= 0, tous les sommets comptent comme modifiés et le run
    s'arrête exactement après max_iters itérations.
    """

    name = "pagerank"
    dtype = np.dtype(np.float64)
    neutral = 0.0
    combine = np.add
    copy_forward = False
    needs_out_degree = True

    def __init__(self, n: int, damping: float = 0.85, epsilon: float = 0.0) -> None:
        if not 0.0 < damping < 1.0:
            raise ValueError(f"damping must lie in (0, 1), got {damping}")
        if n <= 0:
            raise ValueError(f"n must be positive, got {n}")
        self.n = n
        self.damping = damping
        self.epsilon = epsilon
        self.always_changed = epsilon <= 0.0

    def initial_values(self, interval: IntervalRange) -> np.ndarray:
        return np.full(interval.count, 1.0 / self.n, dtype=self.dtype)

    def iteration_init_value(self) -> float:
        return (1.0 - self.damping) / self.n

    def gather(self, src_values: np.ndarray, src_out_degree: np.ndarray | None) -> np.ndarray:
        if src_out_degree is None:
            raise ValueError("pagerank needs out-degrees")
        return self.damping * src_values / src_out_degree.astype(np.float64)

    def changed(self, old: np.ndarray, new: np.ndarray) -> np.ndarray:
        if self.always_changed:
            return np.ones(new.shape, dtype=bool)
        return np.abs(new - old) > self.epsilon

    def output(self, values: np.ndarray) -> KernelOutput:
        top = int(np.argmax(values))
        return KernelOutput(
            kernel=self.name,
            summary={
                "rank_sum": f"{float(values.sum()):.12g}",
                "max_rank": f"{float(values[top]):.12g}",
                "max_vertex": top,
            },
        )
