"""Construction et exécution des noyaux à partir du registre."""

from collections.abc import Iterator

import numpy as np
from pydantic import BaseModel, Field

from nxcore.core.config import settings
from nxcore.core.errors import ConfigurationError
from nxcore.core.logger import setup_logger
from nxcore.core.registry_service import get_kernel_registry
from nxcore.core.storage import GraphStore
from nxcore.engine.runner import Engine, RunResult
from nxcore.engine.strategy import StrategyPlan
from nxcore.kernels.base import Kernel
from nxcore.kernels.bfs import SENTINEL, BfsKernel
from nxcore.kernels.pagerank import PageRankKernel
from nxcore.kernels.scc import SccDriver
from nxcore.kernels.wcc import WccKernel, resolve_wcc_shard_set

logger = setup_logger(__name__)

# Noyaux dont le résultat est l'identifiant d'un sommet représentant
LABEL_KERNELS = frozenset({"wcc", "scc"})


class KernelParams(BaseModel):
    """Paramètres effectifs d'un run (registre, puis surcharges de la CLI)."""

    damping: float = Field(default=0.85, gt=0, lt=1)
    epsilon: float = Field(default=0.0)
    max_iters: int = Field(default=1_000_000, ge=1)
    root: int = Field(default=0, ge=0, description="Racine BFS, identifiant dense")


def resolve_params(kernel_id: str, **overrides: float | int | None) -> KernelParams:
    """
    Fusionne les valeurs par défaut du registre et les surcharges non nulles.

    Raises:
        ConfigurationError: Si le noyau est inconnu
    """
    config = get_kernel_registry().get_kernel(kernel_id)
    if config is None:
        raise ConfigurationError(f"unknown kernel '{kernel_id}'")
    values = config.defaults.model_dump(exclude_none=True)
    values.update({key: value for key, value in overrides.items() if value is not None})
    return KernelParams(**values)


def attr_width(kernel_id: str) -> int:
    config = get_kernel_registry().get_kernel(kernel_id)
    if config is None:
        raise ConfigurationError(f"unknown kernel '{kernel_id}'")
    return config.attr_width


def build_kernel(kernel_id: str, store: GraphStore, params: KernelParams) -> Kernel:
    """
    Instancie un noyau à une seule phase (pagerank, bfs, wcc).

    Raises:
        ConfigurationError: Noyau inconnu ou multi-phase, ou ensemble manquant
    """
    n = store.manifest.n
    if kernel_id == "pagerank":
        return PageRankKernel(n=n, damping=params.damping, epsilon=params.epsilon)
    if kernel_id == "bfs":
        return BfsKernel(root=params.root, n=n)
    if kernel_id == "wcc":
        return WccKernel(shard_set=resolve_wcc_shard_set(store))
    raise ConfigurationError(f"kernel '{kernel_id}' is not a single-phase kernel")


def run_kernel(
    kernel_id: str,
    store: GraphStore,
    plan: StrategyPlan,
    params: KernelParams,
    threads: int = settings.DEFAULT_THREADS,
) -> RunResult:
    """
    Exécute un noyau du registre sur un graphe prétraité.

    Args:
        kernel_id: pagerank, bfs, wcc ou scc
        store: Graphe prétraité
        plan: Stratégie de mise à jour
        params: Paramètres effectifs
        threads: Taille du pool de travail

    Returns:
        Résultat du run (valeurs par identifiant dense)

    Raises:
        ConfigurationError: Si un prérequis du noyau manque
    """
    get_kernel_registry().check_requirements(kernel_id, store.manifest)
    logger.info(f"[ENGINE] Running {kernel_id} with {params.model_dump()}")
    if kernel_id == "scc":
        return SccDriver(store, plan, threads, params.max_iters).run()
    kernel = build_kernel(kernel_id, store, params)
    return Engine(store, kernel, plan, threads).run(params.max_iters)


def result_lines(kernel_id: str, values: np.ndarray, rmap: np.ndarray) -> Iterator[str]:
    """
    Lignes "index_brut<TAB>valeur" du fichier de résultats, par identifiant dense.

    Les étiquettes de composantes sont traduites en index bruts; une
    profondeur BFS non atteinte s'écrit "inf".
    """
    raw_ids = rmap.tolist()
    if kernel_id in LABEL_KERNELS:
        for raw, label in zip(raw_ids, rmap[values.astype(np.int64)].tolist(), strict=True):
            yield f"{raw}\t{label}"
    elif kernel_id == "bfs":
        for raw, depth in zip(raw_ids, values.tolist(), strict=True):
            yield f"{raw}\t{'inf' if depth == int(SENTINEL) else depth}"
    else:
        for raw, rank in zip(raw_ids, values.tolist(), strict=True):
            yield f"{raw}\t{rank!r}"
