"""
Composantes fortement connexes par rondes avant / arrière.

Chaque ronde exécute deux runs complets du moteur sur les sommets non
encore affectés:

1. Avant (ensemble direct): propagation de l'étiquette minimale. La couleur
   fwd(v) est le plus petit identifiant qui atteint v.
2. Arrière (ensemble transposé): chaque racine r (fwd(r) == r) diffuse sa
   couleur vers ses prédécesseurs, qui ne l'acceptent que si elle est aussi
   la leur. Un sommet atteint appartient à la composante de r.

Les sommets atteints en arrière sont gelés avec l'étiquette r, le plus petit
identifiant dense de leur composante. Chaque ronde gèle au moins la
composante de chaque couleur.
"""

import numpy as np

from nxcore.core.config import settings
from nxcore.core.errors import KernelContractError
from nxcore.core.graph_model import IntervalRange
from nxcore.core.logger import setup_logger
from nxcore.core.storage import GraphStore
from nxcore.engine.runner import Engine, IterationStats, RunResult
from nxcore.engine.strategy import StrategyPlan
from nxcore.kernels.base import Kernel, KernelOutput
from nxcore.kernels.wcc import FROZEN, MinLabelKernel

logger = setup_logger(__name__)

NO_COLOR = np.iinfo(np.int64).min


def pending_color(colors: np.ndarray) -> np.ndarray:
    """Encodage d'un sommet de couleur c pas encore atteint en arrière: -(c + 2)."""
    return -(colors + 2)


class ColorBackwardKernel(Kernel):
    """
    Propagation arrière restreinte à une couleur.

    Valeurs: >= 0 couleur atteinte, -1 gelé, <= -2 couleur en attente.
    Les contributions reçues par v sont toutes <= fwd(v); le maximum vaut
    fwd(v) dès qu'un successeur de même couleur est atteint.
    """

    name = "scc-backward"
    dtype = np.dtype(np.int64)
    neutral = NO_COLOR
    combine = np.maximum
    copy_forward = True
    shard_set = "transpose"

    def __init__(self, initial: np.ndarray) -> None:
        self.initial = initial

    def initial_values(self, interval: IntervalRange) -> np.ndarray:
        return np.array(self.initial[interval.first : interval.stop], dtype=self.dtype)

    def initially_active(self, interval: IntervalRange) -> bool:
        return bool(np.any(self.initial[interval.first : interval.stop] >= 0))

    def gather(self, src_values: np.ndarray, src_out_degree: np.ndarray | None) -> np.ndarray:
        return np.where(src_values >= 0, src_values, NO_COLOR)

    def apply(self, current: np.ndarray, local_ids: np.ndarray, values: np.ndarray) -> None:
        held = current[local_ids]
        accept = (held <= -2) & (values == pending_color(held))
        current[local_ids] = np.where(accept, values, held)

    def output(self, values: np.ndarray) -> KernelOutput:
        return KernelOutput(kernel=self.name, summary={"reached": int(np.sum(values >= 0))})


class SccDriver:
    """
    Enchaîne les rondes jusqu'à ce que chaque sommet soit affecté.

    Example:
        >>> result = SccDriver(store, plan, threads=4).run()
        >>> result.output.summary["components"]
    """

    def __init__(
        self,
        store: GraphStore,
        plan: StrategyPlan,
        threads: int = settings.DEFAULT_THREADS,
        max_iters: int | None = None,
    ) -> None:
        store.require_set("transpose")
        self.store = store
        self.plan = plan
        self.threads = threads
        self.max_iters = max_iters if max_iters is not None else store.manifest.n + 1

    def run(self) -> RunResult:
        n = self.store.manifest.n
        ids = np.arange(n, dtype=np.int64)
        assignment = np.full(n, FROZEN, dtype=np.int64)
        assigned = np.zeros(n, dtype=bool)
        iterations: list[IterationStats] = []
        rounds = 0

        while not bool(assigned.all()):
            rounds += 1
            forward = MinLabelKernel(
                shard_set="forward",
                initial=np.where(assigned, FROZEN, ids),
                name="scc-forward",
            )
            colors = self._phase(forward, iterations)

            roots = colors == ids
            initial = np.where(assigned, FROZEN, np.where(roots, colors, pending_color(colors)))
            reached = self._phase(ColorBackwardKernel(initial), iterations)

            newly = ~assigned & (reached >= 0)
            if not bool(newly.any()):
                raise KernelContractError(f"scc round {rounds} assigned no vertex")
            assignment[newly] = reached[newly]
            assigned |= newly
            logger.info(
                f"[ENGINE] SCC round {rounds}: {int(newly.sum())} vertices assigned, "
                f"{n - int(assigned.sum())} left"
            )

        output = KernelOutput(
            kernel="scc",
            summary={"components": int(np.unique(assignment).size), "rounds": rounds},
        )
        return RunResult(values=assignment, iterations=iterations, plan=self.plan, output=output)

    def _phase(self, kernel: Kernel, iterations: list[IterationStats]) -> np.ndarray:
        result = Engine(self.store, kernel, self.plan, self.threads).run(self.max_iters)
        if result.iterations and result.iterations[-1].active_intervals > 0:
            raise KernelContractError(
                f"{kernel.name} phase did not converge within {self.max_iters} iterations"
            )
        for stats in result.iterations:
            iterations.append(stats.model_copy(update={"iteration": len(iterations) + 1}))
        return result.values
