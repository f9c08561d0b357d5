"""
Oracles en mémoire pour vérifier le moteur.

PageRank applique exactement la même récurrence que le noyau (numpy);
BFS, WCC et SCC s'appuient sur networkx (SCC: Tarjan).
"""

import networkx as nx
import numpy as np

from nxcore.core.config import settings
from nxcore.core.errors import OversizeGraphError, VertexOutOfRangeError
from nxcore.core.io_counters import IoCounters
from nxcore.core.storage import GraphStore
from nxcore.kernels.bfs import SENTINEL


def check_oracle_size(edge_count: int) -> None:
    """
    Raises:
        OversizeGraphError: Au-delà de settings.ORACLE_MAX_EDGES arêtes
    """
    if edge_count > settings.ORACLE_MAX_EDGES:
        raise OversizeGraphError(
            f"oversize-graph: {edge_count} edges exceed the oracle limit of "
            f"{settings.ORACLE_MAX_EDGES}"
        )


def load_dense_edges(store: GraphStore) -> tuple[np.ndarray, np.ndarray]:
    """
    Relit toutes les arêtes de l'ensemble direct (identifiants denses).

    Les lectures passent par des compteurs séparés: elles ne faussent pas
    la comptabilité d'un run.
    """
    manifest = store.manifest
    check_oracle_size(manifest.m)
    reader = GraphStore(store.root, counters=IoCounters())
    sources, destinations = [], []
    for i in range(manifest.partitions):
        for j in range(manifest.partitions):
            if reader.subshard_edge_count(i, j) == 0:
                continue
            block = reader.read_subshard(i, j)
            counts = block.src_counts
            destinations.append(np.repeat(block.dst_ids.astype(np.int64), counts))
            sources.append(block.src_ids.astype(np.int64))
    if not sources:
        return np.empty(0, dtype=np.int64), np.empty(0, dtype=np.int64)
    return np.concatenate(sources), np.concatenate(destinations)


def _digraph(src: np.ndarray, dst: np.ndarray, n: int) -> nx.DiGraph:
    check_oracle_size(int(src.size))
    graph = nx.DiGraph()
    graph.add_nodes_from(range(n))
    graph.add_edges_from(zip(src.tolist(), dst.tolist(), strict=True))
    return graph


def _min_labels(components: list[set[int]], n: int) -> np.ndarray:
    labels = np.empty(n, dtype=np.int64)
    for component in components:
        members = np.fromiter(component, dtype=np.int64)
        labels[members] = members.min()
    return labels


def pagerank_oracle(
    src: np.ndarray,
    dst: np.ndarray,
    n: int,
    damping: float,
    iterations: int,
) -> np.ndarray:
    """Itération de puissance: même récurrence, même point de départ 1 / n."""
    check_oracle_size(int(src.size))
    out_degree = np.bincount(src, minlength=n).astype(np.float64)
    ranks = np.full(n, 1.0 / n, dtype=np.float64)
    for _ in range(iterations):
        contributions = damping * ranks[src] / out_degree[src]
        ranks = (1.0 - damping) / n + np.bincount(dst, weights=contributions, minlength=n)
    return ranks


def bfs_oracle(src: np.ndarray, dst: np.ndarray, n: int, root: int) -> np.ndarray:
    """Profondeurs depuis root; SENTINEL pour les sommets non atteints."""
    if root < 0 or root >= n:
        raise VertexOutOfRangeError(f"root {root} is outside [0, {n})")
    depths = np.full(n, SENTINEL, dtype=np.uint32)
    lengths = nx.single_source_shortest_path_length(_digraph(src, dst, n), root)
    for vertex, depth in lengths.items():
        depths[vertex] = depth
    return depths


def wcc_oracle(src: np.ndarray, dst: np.ndarray, n: int) -> np.ndarray:
    """Étiquette = plus petit identifiant de la composante faiblement connexe."""
    return _min_labels(list(nx.weakly_connected_components(_digraph(src, dst, n))), n)


def scc_oracle(src: np.ndarray, dst: np.ndarray, n: int) -> np.ndarray:
    """Étiquette = plus petit identifiant de la composante fortement connexe."""
    return _min_labels(list(nx.strongly_connected_components(_digraph(src, dst, n))), n)
