"""Configuration et fixtures pytest pour tous les tests de nxcore."""

from collections.abc import Callable, Generator
from pathlib import Path

import numpy as np
import pytest

from nxcore.core.io_counters import IoCounters
from nxcore.core.registry_service import reset_kernel_registry
from nxcore.core.storage import GraphStore
from nxcore.services.preprocess import preprocess_edges
from nxcore.services.rmat import rmat_edges

# Graphe d'exemple à 7 sommets et 20 arêtes, découpé en P = 4 intervalles {2, 2, 2, 1}
FIG1_EDGES: list[tuple[int, int]] = [
    (1, 2), (0, 3), (1, 3), (1, 4), (0, 6),
    (3, 0), (2, 1), (3, 1), (3, 2), (3, 4),
    (3, 5), (4, 1), (5, 2), (4, 3), (5, 3),
    (5, 4), (4, 5), (4, 6), (6, 1), (6, 4),
]  # fmt: skip


def edge_arrays(edges: list[tuple[int, int]]) -> tuple[np.ndarray, np.ndarray]:
    """Convertit une liste de paires en deux tableaux uint64."""
    pairs = np.array(edges, dtype=np.uint64).reshape(-1, 2)
    return pairs[:, 0].copy(), pairs[:, 1].copy()


def make_graph(
    root: Path,
    edges: list[tuple[int, int]],
    partitions: int,
    with_transpose: bool = True,
    symmetrized: bool = False,
) -> GraphStore:
    """Prétraite une liste d'arêtes et retourne un GraphStore avec ses propres compteurs."""
    src, dst = edge_arrays(edges)
    preprocess_edges(
        src,
        dst,
        root,
        partitions=partitions,
        symmetrized=symmetrized,
        with_transpose=with_transpose,
    )
    return GraphStore(root, counters=IoCounters())


@pytest.fixture(autouse=True)
def fresh_registry() -> Generator[None, None, None]:
    """
    Recharge le registre des noyaux pour chaque test.

    Yields:
        None
    """
    reset_kernel_registry()
    yield
    reset_kernel_registry()


@pytest.fixture(scope="function")
def fig1_edge_file(tmp_path: Path) -> Path:
    """
    Écrit le graphe d'exemple au format texte "src dst".

    Returns:
        Path: Chemin du fichier de liste d'arêtes
    """
    path = tmp_path / "fig1.txt"
    lines = ["# graphe d'exemple"] + [f"{s} {d}" for s, d in FIG1_EDGES]
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


@pytest.fixture(scope="function")
def fig1_graph(tmp_path: Path) -> GraphStore:
    """
    Prétraite le graphe d'exemple avec P = 4 et l'ensemble transposé.

    Returns:
        GraphStore: Graphe prêt, compteurs d'E/S dédiés
    """
    return make_graph(tmp_path / "fig1", FIG1_EDGES, partitions=4)


@pytest.fixture(scope="function")
def forward_only_graph(tmp_path: Path) -> GraphStore:
    """
    Graphe d'exemple sans ensemble transposé.

    Returns:
        GraphStore: Graphe avec le seul ensemble direct
    """
    return make_graph(tmp_path / "fig1-forward", FIG1_EDGES, partitions=4, with_transpose=False)


@pytest.fixture(scope="function")
def rmat_graph(tmp_path: Path) -> Callable[..., GraphStore]:
    """
    Fabrique de graphes R-MAT prétraités (petite échelle).

    Returns:
        Callable: (seed, scale, edge_factor, partitions) -> GraphStore
    """

    def build(
        seed: int = 0, scale: int = 6, edge_factor: int = 4, partitions: int = 4
    ) -> GraphStore:
        src, dst = rmat_edges(scale, edge_factor, seed=seed)
        edges = list(zip(src.tolist(), dst.tolist(), strict=True))
        vertices = int(np.unique(np.concatenate([src, dst])).size)
        return make_graph(
            tmp_path / f"rmat-{seed}-{scale}-{edge_factor}",
            edges,
            partitions=min(partitions, vertices),
        )

    return build


@pytest.fixture(scope="function")
def fig1_edges() -> list[tuple[int, int]]:
    """
    Arêtes brutes du graphe d'exemple.

    Returns:
        list: Paires (src, dst)
    """
    return list(FIG1_EDGES)


@pytest.fixture(scope="function")
def graph_factory(tmp_path: Path) -> Callable[..., GraphStore]:
    """
    Fabrique de graphes prétraités à partir d'une liste d'arêtes.

    Returns:
        Callable: (edges, partitions, with_transpose, symmetrized) -> GraphStore
    """
    built = 0

    def build(
        edges: list[tuple[int, int]],
        partitions: int,
        with_transpose: bool = True,
        symmetrized: bool = False,
    ) -> GraphStore:
        nonlocal built
        built += 1
        return make_graph(
            tmp_path / f"graph-{built}",
            edges,
            partitions,
            with_transpose=with_transpose,
            symmetrized=symmetrized,
        )

    return build
