"""
Interface en ligne de commande de nxcore.

Sous-commandes: preprocess, run, costmodel, verify, generate, bench.

Codes de sortie:
    0 succès
    1 écart de vérification
    2 entrée invalide (liste d'arêtes, partitions, paramètres)
    3 erreur d'entrée/sortie ou fichier corrompu
    4 budget mémoire insuffisant
    5 ensemble transposé ou symétrisé manquant
    6 graphe trop grand pour les oracles
"""

import argparse
import sys
import tempfile
import time
from collections.abc import Callable, Iterator
from contextlib import contextmanager
from pathlib import Path
from typing import TextIO

import numpy as np

from nxcore import __version__
from nxcore.core.config import settings
from nxcore.core.errors import (
    ConfigurationError,
    FormatError,
    InfeasibleBudgetError,
    KernelContractError,
    NxcoreError,
    OversizeGraphError,
    StorageError,
    VertexOutOfRangeError,
)
from nxcore.core.logger import setup_logger
from nxcore.core.models import CostParams
from nxcore.core.registry_service import get_kernel_registry
from nxcore.core.storage import GraphStore
from nxcore.engine.runner import RunResult
from nxcore.engine.strategy import StrategyChoice, StrategyPlan, plan_for
from nxcore.engine.sync import SYNC_MODES, SyncMode
from nxcore.kernels import oracles
from nxcore.kernels.factory import (
    KernelParams,
    attr_width,
    resolve_params,
    result_lines,
    run_kernel,
)
from nxcore.services.cost_model import (
    parse_budget,
    parse_budget_grid,
    ratio_curve,
    table_rows,
    write_ratio_csv,
)
from nxcore.services.preprocess import preprocess, preprocess_edges
from nxcore.services.rmat import rmat_edges, write_edge_list
from nxcore.utils.size_parser import parse_size

logger = setup_logger(__name__)

EXIT_OK = 0
EXIT_MISMATCH = 1
EXIT_INVALID = 2
EXIT_IO = 3
EXIT_BUDGET = 4
EXIT_MISSING_SET = 5
EXIT_OVERSIZE = 6

ALGORITHMS = ("pagerank", "bfs", "wcc", "scc")


# ---------------------------------------------------------------------------
# preprocess
# ---------------------------------------------------------------------------


def cmd_preprocess(args: argparse.Namespace) -> int:
    manifest = preprocess(
        Path(args.input),
        Path(args.out),
        partitions=args.partitions,
        symmetrized=args.symmetrize,
        with_transpose=args.transpose,
    )
    print(f"n={manifest.n} m={manifest.m} P={manifest.partitions}")
    for name, info in manifest.shard_sets.items():
        for i, row in enumerate(info.subshard_edges):
            for j, count in enumerate(row):
                print(f"{name} SS({i},{j}) edges={count}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# run
# ---------------------------------------------------------------------------


@contextmanager
def _output(path: str | None) -> Iterator[TextIO]:
    if path is None:
        yield sys.stdout
        return
    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    with target.open("w", encoding="utf-8") as stream:
        yield stream


def _kernel_params(args: argparse.Namespace, store: GraphStore) -> KernelParams:
    root = None
    if args.algo == "bfs":
        raw_root = args.root
        if raw_root is None:
            raw_root = resolve_params("bfs").root
        root = store.dense_id(raw_root)
    return resolve_params(
        args.algo,
        damping=args.damping,
        epsilon=args.epsilon,
        max_iters=args.max_iters,
        root=root,
    )


def _plan(args: argparse.Namespace, store: GraphStore) -> StrategyPlan:
    budget = parse_size(args.budget) if args.budget is not None else None
    return plan_for(
        store.manifest,
        attr_width(args.algo),
        choice=args.strategy,
        budget=budget,
        resident=args.resident,
        sync_mode=args.sync,
    )


def write_results(path: str, kernel_id: str, result: RunResult, store: GraphStore) -> None:
    """Écrit une ligne "index_brut<TAB>valeur" par sommet."""
    rmap = store.read_reverse_map()
    with _output(path) as stream:
        for line in result_lines(kernel_id, result.values, rmap):
            stream.write(line + "\n")


def cmd_run(args: argparse.Namespace) -> int:
    store = GraphStore(args.graph)
    get_kernel_registry().check_requirements(args.algo, store.manifest)
    params = _kernel_params(args, store)
    plan = _plan(args, store)

    result = run_kernel(args.algo, store, plan, params, threads=args.threads)

    with _output(args.stats) as stream:
        for stats in result.iterations:
            stream.write(stats.stats_line() + "\n")
    if args.out is not None:
        write_results(args.out, args.algo, result, store)
    print(result.output.summary_line())
    logger.info(
        f"[CLI] {args.algo} done with {plan.label} in {result.iteration_count} iterations"
    )
    return EXIT_OK


# ---------------------------------------------------------------------------
# costmodel
# ---------------------------------------------------------------------------


def _cost_params(args: argparse.Namespace, budget: float) -> CostParams:
    return CostParams(
        n=args.n,
        m=args.m,
        b_a=args.ba,
        b_v=args.bv,
        b_e=args.be,
        b_m=budget,
        d=args.d,
        partitions=args.partitions,
        resident=args.resident,
    )


def cmd_costmodel(args: argparse.Namespace) -> int:
    if args.budget_grid is not None:
        budgets = parse_budget_grid(args.budget_grid)
        points = ratio_curve(_cost_params(args, budgets[-1]), budgets)
        with _output(args.out) as stream:
            write_ratio_csv(points, stream)
        return EXIT_OK

    if args.budget is None:
        raise ValueError("costmodel needs --budget or --budget-grid")
    params = _cost_params(args, parse_budget(args.budget))
    print(f"{'strategy':<18}{'read':>16}{'write':>16}{'total':>16}")
    for name, io in table_rows(params):
        if io is None:
            print(f"{name:<18}{'infeasible':>16}")
            continue
        print(f"{name:<18}{io.read:>16.6g}{io.write:>16.6g}{io.total:>16.6g}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# verify
# ---------------------------------------------------------------------------


def verification_plans(
    store: GraphStore, kernel_id: str, sync_mode: SyncMode
) -> list[StrategyPlan]:
    """SPU avec cache complet, puis chaque Q de P (SPU) à 0 (DPU)."""
    manifest = store.manifest
    width = attr_width(kernel_id)
    everything = 2 * manifest.n * width + settings.STREAM_BUFFER_BYTES
    everything += sum(path.stat().st_size for path in store.root.rglob("*.nxss"))
    plans = [plan_for(manifest, width, "spu", budget=everything, sync_mode=sync_mode)]
    for resident in range(manifest.partitions, -1, -1):
        plans.append(plan_for(manifest, width, "mpu", resident=resident, sync_mode=sync_mode))
    return plans


def _oracle_values(
    kernel_id: str, store: GraphStore, params: KernelParams, iterations: int
) -> np.ndarray:
    src, dst = oracles.load_dense_edges(store)
    n = store.manifest.n
    if kernel_id == "pagerank":
        return oracles.pagerank_oracle(src, dst, n, params.damping, iterations)
    if kernel_id == "bfs":
        return oracles.bfs_oracle(src, dst, n, params.root)
    if kernel_id == "wcc":
        return oracles.wcc_oracle(src, dst, n)
    return oracles.scc_oracle(src, dst, n)


def _matches(kernel_id: str, values: np.ndarray, expected: np.ndarray) -> bool:
    if kernel_id == "pagerank":
        return bool(np.allclose(values, expected, rtol=0.0, atol=1e-9))
    return bool(np.array_equal(values.astype(np.int64), expected.astype(np.int64)))


def verify_graph(
    store: GraphStore,
    kernel_ids: list[str],
    threads: int,
    sync_mode: SyncMode,
    report: Callable[[str], None] = print,
) -> bool:
    """
    Exécute chaque noyau sous toutes les stratégies et compare à l'oracle.

    Les P² sous-shards de chaque ensemble sont d'abord décodés et confrontés
    au manifeste. Les résultats des stratégies doivent aussi être identiques
    bit à bit entre eux. Un fichier corrompu compte comme un échec.

    Returns:
        True si tout concorde
    """
    registry = get_kernel_registry()
    oracles.check_oracle_size(store.manifest.m)
    passed = True
    for info in store.manifest.shard_sets.values():
        try:
            store.check_shard_set(info.name)
        except StorageError as e:
            report(f"FAIL {info.name} set: {e}")
            passed = False
    if not passed:
        return False

    for kernel_id in kernel_ids:
        try:
            registry.check_requirements(kernel_id, store.manifest)
        except ConfigurationError as e:
            if len(kernel_ids) == 1:
                raise
            report(f"SKIP {kernel_id}: {e}")
            continue

        params = resolve_params(kernel_id, root=0 if kernel_id == "bfs" else None)
        reference: np.ndarray | None = None
        expected: np.ndarray | None = None
        for plan in verification_plans(store, kernel_id, sync_mode):
            try:
                result = run_kernel(kernel_id, store, plan, params, threads=threads)
            except (FormatError, KernelContractError) as e:
                report(f"FAIL {kernel_id} {plan.label}: {e}")
                passed = False
                continue

            if expected is None:
                expected = _oracle_values(kernel_id, store, params, result.iteration_count)
            ok = _matches(kernel_id, result.values, expected)
            if reference is None:
                reference = result.values
            elif not np.array_equal(result.values, reference):
                ok = False
            passed = passed and ok
            report(f"{'PASS' if ok else 'FAIL'} {kernel_id} {plan.label}")
    return passed


def cmd_verify(args: argparse.Namespace) -> int:
    kernel_ids = list(ALGORITHMS) if args.algo == "all" else [args.algo]
    if args.graph is None and args.trials is None:
        raise ValueError("verify needs --graph or --trials")

    passed = True
    if args.graph is not None:
        passed = verify_graph(GraphStore(args.graph), kernel_ids, args.threads, args.sync)

    for trial in range(args.trials or 0):
        src, dst = rmat_edges(args.scale, args.edge_factor, seed=args.seed + trial)
        with tempfile.TemporaryDirectory(prefix="nxcore-verify-", dir=settings.TMPDIR) as tmp:
            vertices = int(np.unique(np.concatenate([src, dst])).size)
            partitions = min(args.partitions, vertices)
            manifest = preprocess_edges(
                src, dst, Path(tmp), partitions=partitions, with_transpose=True
            )
            print(f"trial {trial}: n={manifest.n} m={manifest.m} P={partitions}")
            ok = verify_graph(GraphStore(tmp), kernel_ids, args.threads, args.sync)
        passed = passed and ok

    print("PASS" if passed else "FAIL")
    return EXIT_OK if passed else EXIT_MISMATCH


# ---------------------------------------------------------------------------
# generate / bench
# ---------------------------------------------------------------------------


def cmd_generate(args: argparse.Namespace) -> int:
    src, dst = rmat_edges(args.scale, args.edge_factor, args.a, args.b, args.c, seed=args.seed)
    count = write_edge_list(Path(args.out), src, dst)
    print(f"vertices={2**args.scale} edges={count}")
    return EXIT_OK


def cmd_bench(args: argparse.Namespace) -> int:
    store = GraphStore(args.graph)
    params = resolve_params("pagerank", max_iters=args.iterations, epsilon=0.0)
    width = attr_width("pagerank")
    choices: tuple[StrategyChoice, ...] = ("spu", "dpu")
    for choice in choices:
        plan = plan_for(store.manifest, width, choice)
        started = time.perf_counter()
        result = run_kernel("pagerank", store, plan, params, threads=args.threads)
        elapsed_ms = (time.perf_counter() - started) * 1000.0
        per_iteration = elapsed_ms / max(1, result.iteration_count)
        edges = sum(stats.edges for stats in result.iterations)
        mteps = edges / (elapsed_ms * 1000.0) if elapsed_ms > 0 else 0.0
        print(f"{plan.label} ms_per_iteration={per_iteration:.3f} mteps={mteps:.3f}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# Parseur et point d'entrée
# ---------------------------------------------------------------------------


def _add_engine_options(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--threads", type=int, default=settings.DEFAULT_THREADS)
    parser.add_argument("--sync", choices=SYNC_MODES, default="callback")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="nxcore", description="Out-of-core graph engine on a single machine"
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    commands = parser.add_subparsers(dest="command", required=True)

    pre = commands.add_parser("preprocess", help="edge list -> sharded graph directory")
    pre.add_argument("--input", required=True, help="text edge list, one 'src dst' per line")
    pre.add_argument("--out", required=True, help="output graph directory")
    pre.add_argument("--partitions", type=int, default=settings.DEFAULT_PARTITIONS)
    pre.add_argument("--symmetrize", action="store_true", help="also store every reversed edge")
    pre.add_argument("--transpose", action="store_true", help="build the transpose shard set")
    pre.set_defaults(handler=cmd_preprocess)

    run = commands.add_parser("run", help="run a kernel on a preprocessed graph")
    run.add_argument("algo", choices=ALGORITHMS)
    run.add_argument("--graph", required=True)
    run.add_argument("--strategy", choices=("auto", "spu", "dpu", "mpu"), default="auto")
    run.add_argument("--resident", type=int, help="Q, resident intervals (MPU)")
    run.add_argument("--budget", help="memory budget in bytes, K/M/G/T suffixes allowed")
    run.add_argument("--max-iters", "--iterations", dest="max_iters", type=int)
    run.add_argument("--epsilon", type=float)
    run.add_argument("--damping", type=float)
    run.add_argument("--root", type=int, help="BFS root as a raw vertex index")
    run.add_argument("--out", help="result file (raw_index<TAB>value per line)")
    run.add_argument("--stats", help="write per-iteration stats to this file instead of stdout")
    _add_engine_options(run)
    run.set_defaults(handler=cmd_run)

    cost = commands.add_parser("costmodel", help="closed-form I/O per iteration")
    cost.add_argument("--n", type=float, required=True)
    cost.add_argument("--m", type=float, required=True)
    cost.add_argument("--ba", type=float, default=8.0)
    cost.add_argument("--bv", type=float, default=4.0)
    cost.add_argument("--be", type=float, default=4.0)
    cost.add_argument("--d", type=float, default=15.0)
    cost.add_argument("--partitions", type=int, default=settings.DEFAULT_PARTITIONS)
    cost.add_argument("--resident", type=int)
    cost.add_argument("--budget", help="B_M in bytes (number or size with suffix)")
    cost.add_argument("--budget-grid", help="LO:HI:STEPS, prints the MPU/TurboGraph-like CSV")
    cost.add_argument("--out", help="CSV file (default stdout)")
    cost.set_defaults(handler=cmd_costmodel)

    verify = commands.add_parser("verify", help="compare every strategy with the oracles")
    verify.add_argument("--graph")
    verify.add_argument("--algo", choices=(*ALGORITHMS, "all"), default="all")
    verify.add_argument("--trials", type=int, help="also verify this many random R-MAT graphs")
    verify.add_argument("--scale", type=int, default=7)
    verify.add_argument("--edge-factor", type=int, default=8)
    verify.add_argument("--seed", type=int, default=0)
    verify.add_argument("--partitions", type=int, default=4)
    _add_engine_options(verify)
    verify.set_defaults(handler=cmd_verify)

    gen = commands.add_parser("generate", help="write a synthetic R-MAT edge list")
    gen.add_argument("--scale", type=int, required=True)
    gen.add_argument("--edge-factor", type=int, default=16)
    gen.add_argument("--seed", type=int, default=0)
    gen.add_argument("--a", type=float, default=0.57)
    gen.add_argument("--b", type=float, default=0.19)
    gen.add_argument("--c", type=float, default=0.19)
    gen.add_argument("--out", required=True)
    gen.set_defaults(handler=cmd_generate)

    bench = commands.add_parser("bench", help="PageRank SPU vs DPU timing (informational)")
    bench.add_argument("--graph", required=True)
    bench.add_argument("--iterations", type=int, default=5)
    bench.add_argument("--threads", type=int, default=settings.DEFAULT_THREADS)
    bench.set_defaults(handler=cmd_bench)

    return parser


def exit_code_for(error: Exception) -> int:
    """Code de sortie documenté d'une exception."""
    if isinstance(error, OversizeGraphError):
        return EXIT_OVERSIZE
    if isinstance(error, ConfigurationError):
        return EXIT_MISSING_SET
    if isinstance(error, InfeasibleBudgetError):
        return EXIT_BUDGET
    if isinstance(error, OSError):
        return EXIT_IO
    if isinstance(error, ValueError | VertexOutOfRangeError):
        return EXIT_INVALID
    return EXIT_MISMATCH


def main(argv: list[str] | None = None) -> int:
    """Point d'entrée de la commande nxcore."""
    args = build_parser().parse_args(argv)
    try:
        return int(args.handler(args))
    except (NxcoreError, ValueError, OSError) as e:
        code = exit_code_for(e)
        logger.error(f"[CLI] {args.command} failed ({code}): {e}")
        print(f"error: {e}", file=sys.stderr)
        return code


if __name__ == "__main__":
    sys.exit(main())
