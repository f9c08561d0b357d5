"""Tests des noyaux PageRank, BFS, WCC, SCC et de leurs oracles."""

import numpy as np
import pytest

from nxcore.core.errors import ConfigurationError, OversizeGraphError, VertexOutOfRangeError
from nxcore.core.graph_model import IntervalRange
from nxcore.core.storage import GraphStore
from nxcore.engine.strategy import StrategyPlan
from nxcore.kernels import oracles
from nxcore.kernels.bfs import SENTINEL, BfsKernel
from nxcore.kernels.factory import (
    KernelParams,
    attr_width,
    build_kernel,
    resolve_params,
    result_lines,
    run_kernel,
)
from nxcore.kernels.pagerank import PageRankKernel
from nxcore.kernels.scc import ColorBackwardKernel, SccDriver, pending_color
from nxcore.kernels.wcc import FROZEN, NO_LABEL, MinLabelKernel, resolve_wcc_shard_set


def _spu(store: GraphStore) -> StrategyPlan:
    partitions = store.manifest.partitions
    return StrategyPlan(kind="SPU", resident=partitions, partitions=partitions)


# ---------------------------------------------------------------------------
# Contrat des noyaux
# ---------------------------------------------------------------------------


def test_pagerank_kernel_values():
    """Test des valeurs initiales, de départ d'itération et des contributions."""
    kernel = PageRankKernel(n=4, damping=0.8)

    assert kernel.initial_values(IntervalRange(0, 0, 2)).tolist() == [0.25, 0.25]
    assert kernel.iteration_init_value() == pytest.approx(0.05)
    contributions = kernel.gather(np.array([0.5, 0.25]), np.array([2, 1], dtype=np.uint64))
    assert contributions.tolist() == pytest.approx([0.2, 0.2])
    assert kernel.always_changed


def test_pagerank_kernel_rejects_bad_parameters():
    """Test des paramètres invalides de PageRank."""
    with pytest.raises(ValueError):
        PageRankKernel(n=4, damping=1.0)
    with pytest.raises(ValueError):
        PageRankKernel(n=0)
    with pytest.raises(ValueError, match="out-degrees"):
        PageRankKernel(n=4).gather(np.ones(2), None)


def test_pagerank_epsilon_controls_change_detection():
    """Test que le seuil epsilon décide des sommets modifiés."""
    kernel = PageRankKernel(n=4, epsilon=0.01)
    old = np.array([0.1, 0.2, 0.3])
    new = np.array([0.105, 0.25, 0.3])

    assert not kernel.always_changed
    assert kernel.changed(old, new).tolist() == [False, True, False]


def test_bfs_kernel_root_and_gather():
    """Test que seule la racine part à 0 et qu'un sommet non atteint ne propage rien."""
    kernel = BfsKernel(root=3, n=7)

    assert kernel.initial_values(IntervalRange(1, 2, 2)).tolist() == [int(SENTINEL), 0]
    assert kernel.initially_active(IntervalRange(1, 2, 2))
    assert not kernel.initially_active(IntervalRange(0, 0, 2))
    gathered = kernel.gather(np.array([0, SENTINEL, 4], dtype=np.uint32), None)
    assert gathered.tolist() == [1, int(SENTINEL), 5]


def test_bfs_kernel_rejects_root_out_of_range():
    """Test qu'une racine >= n lève VertexOutOfRangeError."""
    with pytest.raises(VertexOutOfRangeError):
        BfsKernel(root=7, n=7)


def test_min_label_kernel_keeps_frozen_vertices():
    """Test qu'un sommet gelé ne reçoit ni n'envoie d'étiquette."""
    kernel = MinLabelKernel(initial=np.array([FROZEN, 5, 6], dtype=np.int64))
    current = np.array([FROZEN, 5, 6], dtype=np.int64)

    kernel.apply(current, np.array([0, 1, 2]), np.array([1, 2, 9], dtype=np.int64))

    assert current.tolist() == [FROZEN, 2, 6]
    assert kernel.gather(np.array([FROZEN, 3], dtype=np.int64), None).tolist() == [NO_LABEL, 3]
    assert kernel.initially_active(IntervalRange(0, 0, 1)) is False


def test_color_backward_kernel_accepts_only_own_color():
    """Test qu'un sommet en attente n'accepte que sa propre couleur."""
    initial = np.array([0, pending_color(np.int64(0)), pending_color(np.int64(2)), FROZEN])
    kernel = ColorBackwardKernel(initial)
    current = initial.copy()

    kernel.apply(current, np.array([1, 2, 3]), np.array([0, 0, 0], dtype=np.int64))

    assert current.tolist() == [0, 0, pending_color(np.int64(2)), FROZEN]


# ---------------------------------------------------------------------------
# Runs sur le graphe d'exemple
# ---------------------------------------------------------------------------


def test_bfs_on_example_graph(fig1_graph: GraphStore):
    """Test BFS depuis 0: profondeur maximale 2 en 3 itérations."""
    params = resolve_params("bfs", root=0)

    result = run_kernel("bfs", fig1_graph, _spu(fig1_graph), params, threads=2)

    assert result.values.tolist() == [0, 2, 2, 1, 2, 2, 1]
    assert result.output.summary == {"max_depth": 2, "reached": 7}
    assert result.iteration_count == 3


def test_bfs_leaves_unreachable_vertices_at_sentinel(graph_factory):
    """Test qu'un sommet non atteignable garde la sentinelle."""
    store = graph_factory([(0, 1), (2, 1), (1, 3)], partitions=2)

    result = run_kernel("bfs", store, _spu(store), resolve_params("bfs", root=0))

    assert result.values.tolist() == [0, 1, int(SENTINEL), 2]
    assert result.output.summary["reached"] == 3


def test_pagerank_on_example_graph_matches_oracle(fig1_graph: GraphStore):
    """Test PageRank sur 10 itérations contre l'itération de puissance."""
    params = resolve_params("pagerank")
    src, dst = oracles.load_dense_edges(fig1_graph)

    result = run_kernel("pagerank", fig1_graph, _spu(fig1_graph), params)

    expected = oracles.pagerank_oracle(src, dst, 7, 0.85, 10)
    assert result.iteration_count == 10
    np.testing.assert_allclose(result.values, expected, rtol=0, atol=1e-12)


def test_pagerank_with_epsilon_stops_early(fig1_graph: GraphStore):
    """Test qu'un epsilon positif arrête le run avant max_iters."""
    params = resolve_params("pagerank", epsilon=1e-3, max_iters=1000)

    result = run_kernel("pagerank", fig1_graph, _spu(fig1_graph), params)

    assert result.iteration_count < 1000
    assert result.iterations[-1].active_intervals == 0


def test_wcc_derives_symmetric_set(fig1_graph: GraphStore):
    """Test que WCC dérive l'ensemble symétrique et trouve une composante."""
    assert resolve_wcc_shard_set(fig1_graph) == "symmetric"

    result = run_kernel("wcc", fig1_graph, _spu(fig1_graph), resolve_params("wcc"))

    assert result.values.tolist() == [0] * 7
    assert result.output.summary == {"components": 1}


def test_wcc_on_symmetrized_graph_uses_forward_set(graph_factory):
    """Test que WCC parcourt l'ensemble direct d'un graphe symétrisé."""
    store = graph_factory(
        [(0, 1), (2, 3), (4, 3)], partitions=2, with_transpose=False, symmetrized=True
    )

    result = run_kernel("wcc", store, _spu(store), resolve_params("wcc"))

    assert resolve_wcc_shard_set(store) == "forward"
    assert result.values.tolist() == [0, 0, 2, 2, 2]
    assert result.output.summary["components"] == 2


def test_wcc_without_undirected_view_is_rejected(forward_only_graph: GraphStore):
    """Test que WCC sans symétrisation ni transposé lève ConfigurationError."""
    with pytest.raises(ConfigurationError):
        resolve_wcc_shard_set(forward_only_graph)
    with pytest.raises(ConfigurationError):
        run_kernel("wcc", forward_only_graph, _spu(forward_only_graph), resolve_params("wcc"))


def test_scc_on_example_graph(fig1_graph: GraphStore):
    """Test que le graphe d'exemple est une seule composante fortement connexe."""
    result = run_kernel("scc", fig1_graph, _spu(fig1_graph), resolve_params("scc"))

    assert result.values.tolist() == [0] * 7
    assert result.output.summary["components"] == 1


def test_scc_separates_cycles(graph_factory):
    """Test SCC sur deux cycles reliés par une arête et un sommet isolé en sortie."""
    edges = [(0, 1), (1, 0), (1, 2), (2, 3), (3, 4), (4, 2), (4, 5)]
    store = graph_factory(edges, partitions=3)
    src, dst = oracles.load_dense_edges(store)

    result = run_kernel("scc", store, _spu(store), resolve_params("scc"))

    assert result.values.tolist() == [0, 0, 2, 2, 2, 5]
    assert result.values.tolist() == oracles.scc_oracle(src, dst, 6).tolist()
    assert result.output.summary["components"] == 3
    numbers = [stats.iteration for stats in result.iterations]
    assert numbers == list(range(1, len(numbers) + 1))


def test_scc_requires_transpose(forward_only_graph: GraphStore):
    """Test que SCC sans ensemble transposé lève ConfigurationError."""
    with pytest.raises(ConfigurationError, match="transpose"):
        SccDriver(forward_only_graph, _spu(forward_only_graph))


# ---------------------------------------------------------------------------
# Oracles et fabrique
# ---------------------------------------------------------------------------


def test_bfs_and_wcc_oracles_on_small_graph():
    """Test des oracles BFS et WCC."""
    src = np.array([0, 1, 3])
    dst = np.array([1, 2, 4])

    assert oracles.bfs_oracle(src, dst, 5, 0).tolist() == [0, 1, 2, int(SENTINEL), int(SENTINEL)]
    assert oracles.wcc_oracle(src, dst, 5).tolist() == [0, 0, 0, 3, 3]


def test_oracle_size_limit(monkeypatch: pytest.MonkeyPatch):
    """Test qu'un graphe trop grand est refusé par les oracles."""
    monkeypatch.setattr(oracles.settings, "ORACLE_MAX_EDGES", 5)

    oracles.check_oracle_size(5)
    with pytest.raises(OversizeGraphError, match="oversize-graph"):
        oracles.check_oracle_size(6)


def test_resolve_params_merges_registry_and_overrides():
    """Test que les surcharges non nulles priment sur le registre."""
    params = resolve_params("pagerank", damping=0.5, epsilon=None)

    assert params == KernelParams(damping=0.5, epsilon=0.0, max_iters=10, root=0)
    assert attr_width("bfs") == 4
    with pytest.raises(ConfigurationError):
        resolve_params("triangles")


def test_build_kernel_refuses_multi_phase_kernel(fig1_graph: GraphStore):
    """Test que scc n'est pas un noyau à une seule phase."""
    assert isinstance(build_kernel("bfs", fig1_graph, KernelParams()), BfsKernel)
    with pytest.raises(ConfigurationError):
        build_kernel("scc", fig1_graph, KernelParams())


def test_result_lines_format():
    """Test du format "index_brut<TAB>valeur" des résultats."""
    rmap = np.array([10, 20, 30], dtype=np.uint64)

    depths = np.array([0, 1, SENTINEL], dtype=np.uint32)
    assert list(result_lines("bfs", depths, rmap)) == ["10\t0", "20\t1", "30\tinf"]
    labels = np.array([0, 0, 2], dtype=np.int64)
    assert list(result_lines("wcc", labels, rmap)) == ["10\t10", "20\t10", "30\t30"]
    ranks = np.array([0.5, 0.25, 0.125])
    assert list(result_lines("pagerank", ranks, rmap)) == ["10\t0.5", "20\t0.25", "30\t0.125"]
