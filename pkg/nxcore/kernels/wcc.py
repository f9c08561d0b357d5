"""Composantes faiblement connexes par propagation de l'étiquette minimale."""

import numpy as np

from nxcore.core.errors import ConfigurationError
from nxcore.core.graph_model import IntervalRange
from nxcore.core.logger import setup_logger
from nxcore.core.models import ShardSetName
from nxcore.core.storage import GraphStore
from nxcore.kernels.base import Kernel, KernelOutput
from nxcore.services.preprocess import build_symmetric_set

logger = setup_logger(__name__)

NO_LABEL = np.iinfo(np.int64).max
FROZEN = -1


class MinLabelKernel(Kernel):
    """
    label'(v) = min(label(v), min_{u -> v} label(u))

    Une étiquette négative marque un sommet gelé: il n'envoie ni ne reçoit
    de contribution.

    Attributes:
        initial: Étiquettes de départ par identifiant dense (défaut: l'identifiant)
    """

    name = "min-label"
    dtype = np.dtype(np.int64)
    neutral = NO_LABEL
    combine = np.minimum
    copy_forward = True

    def __init__(
        self,
        shard_set: ShardSetName = "forward",
        initial: np.ndarray | None = None,
        name: str | None = None,
    ) -> None:
        self.shard_set = shard_set
        self.initial = initial
        if name is not None:
            self.name = name

    def initial_values(self, interval: IntervalRange) -> np.ndarray:
        if self.initial is None:
            return np.arange(interval.first, interval.stop, dtype=self.dtype)
        return np.array(self.initial[interval.first : interval.stop], dtype=self.dtype)

    def initially_active(self, interval: IntervalRange) -> bool:
        if self.initial is None:
            return True
        return bool(np.any(self.initial[interval.first : interval.stop] >= 0))

    def gather(self, src_values: np.ndarray, src_out_degree: np.ndarray | None) -> np.ndarray:
        return np.where(src_values >= 0, src_values, NO_LABEL)

    def apply(self, current: np.ndarray, local_ids: np.ndarray, values: np.ndarray) -> None:
        held = current[local_ids]
        current[local_ids] = np.where(held >= 0, np.minimum(held, values), held)

    def output(self, values: np.ndarray) -> KernelOutput:
        labels = values[values >= 0]
        return KernelOutput(
            kernel=self.name, summary={"components": int(np.unique(labels).size)}
        )


class WccKernel(MinLabelKernel):
    """Étiquette de composante faiblement connexe = plus petit identifiant dense."""

    name = "wcc"

    def __init__(self, shard_set: ShardSetName = "symmetric") -> None:
        super().__init__(shard_set=shard_set, name="wcc")


def resolve_wcc_shard_set(store: GraphStore) -> ShardSetName:
    """
    Ensemble de sous-shards non orienté à parcourir pour WCC.

    Un graphe symétrisé au prétraitement utilise son ensemble direct; sinon
    l'ensemble symétrique est utilisé, et dérivé de l'ensemble transposé
    s'il n'existe pas encore.

    Raises:
        ConfigurationError: Ni symétrisation, ni ensemble symétrique, ni transposé
    """
    manifest = store.manifest
    if manifest.symmetrized:
        return "forward"
    if manifest.has_set("symmetric"):
        return "symmetric"
    if manifest.has_set("transpose"):
        logger.info(f"[ENGINE] Deriving the symmetric shard set of {store.root} for WCC")
        build_symmetric_set(store)
        return "symmetric"
    raise ConfigurationError(
        f"wcc needs an undirected view of {store.root}; "
        "re-run preprocess with --symmetrize or --transpose"
    )
