"""
Prétraitement: liste d'arêtes texte -> représentation DSSS sur disque.

Deux étapes:
1. Degreeing: renumérotation dense des index bruts (ordre croissant), comptage
   des degrés, écriture du pré-shard (paires u32) dans un répertoire temporaire.
2. Sharding: passe de ventilation vers un fichier de débordement par
   sous-shard, puis tri indépendant de chaque sous-shard par (dst, src).

La sortie est déterministe: mêmes octets d'entrée, mêmes octets de sortie.
"""

import tempfile
from collections.abc import Callable, Iterable, Iterator
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from nxcore.core.config import settings
from nxcore.core.errors import (
    EdgeParseError,
    EmptyGraphError,
    StorageError,
    VertexOutOfRangeError,
)
from nxcore.core.formats import SubShardBlock, write_degrees, write_id_maps, write_subshard
from nxcore.core.graph_model import (
    MAX_VERTEX_ID,
    IntervalRange,
    locate_intervals,
    partition_vertices,
)
from nxcore.core.logger import setup_logger
from nxcore.core.models import GraphManifest, IntervalSpec, ShardSetInfo, ShardSetName
from nxcore.core.storage import DEGREE_FILE, MAP_FILE, RMAP_FILE, SHARD_SET_DIRS, GraphStore

logger = setup_logger(__name__)

# Arêtes traitées par morceau pendant la ventilation
BUCKET_CHUNK_EDGES = 1 << 20

PAIR_DTYPE = np.dtype([("src", "<u4"), ("dst", "<u4")])
RAW_LIMIT = 2**64 - 1


# ---------------------------------------------------------------------------
# Lecture de la liste d'arêtes
# ---------------------------------------------------------------------------


def parse_edge_list(path: Path) -> Iterator[tuple[int, int]]:
    """
    Itère les arêtes brutes d'un fichier texte "src dst" par ligne.

    Les lignes vides et celles qui commencent par '#' ou '%' sont ignorées.

    Raises:
        EdgeParseError: Ligne qui n'a pas exactement deux entiers non négatifs
        StorageError: Fichier illisible
    """
    try:
        handle = path.open("r", encoding="utf-8")
    except OSError as e:
        raise StorageError(f"cannot read edge list {path}: {e}") from e

    with handle:
        for line_number, line in enumerate(handle, start=1):
            stripped = line.strip()
            if not stripped or stripped[0] in "#%":
                continue
            tokens = stripped.split()
            if len(tokens) != 2:
                raise EdgeParseError(
                    f"expected 'src dst', got {len(tokens)} tokens", line_number
                )
            try:
                src, dst = int(tokens[0]), int(tokens[1])
            except ValueError as e:
                raise EdgeParseError(
                    f"non-integer vertex index in {stripped!r}", line_number
                ) from e
            if src < 0 or dst < 0 or src > RAW_LIMIT or dst > RAW_LIMIT:
                raise EdgeParseError(f"vertex index out of range in {stripped!r}", line_number)
            yield src, dst


def read_edge_list(path: Path) -> tuple[np.ndarray, np.ndarray]:
    """Charge une liste d'arêtes texte en deux tableaux uint64 (src, dst)."""
    src: list[int] = []
    dst: list[int] = []
    for s, d in parse_edge_list(path):
        src.append(s)
        dst.append(d)
    return np.array(src, dtype=np.uint64), np.array(dst, dtype=np.uint64)


def edges_to_arrays(edge_stream: Iterable[tuple[int, int]]) -> tuple[np.ndarray, np.ndarray]:
    pairs = list(edge_stream)
    if not pairs:
        return np.empty(0, dtype=np.uint64), np.empty(0, dtype=np.uint64)
    raw = np.array(pairs, dtype=np.uint64)
    return raw[:, 0].copy(), raw[:, 1].copy()


def symmetrize(src: np.ndarray, dst: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Ajoute l'arête opposée de chaque arête (graphe non orienté)."""
    return np.concatenate([src, dst]), np.concatenate([dst, src])


# ---------------------------------------------------------------------------
# Degreeing
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class IdMap:
    """
    Correspondance index brut <-> identifiant dense, et degrés.

    Attributes:
        raw_indices: Index bruts triés; la position est l'identifiant dense
        in_degree: Degré entrant par identifiant (doublons compris)
        out_degree: Degré sortant par identifiant (doublons compris)
    """

    raw_indices: np.ndarray
    in_degree: np.ndarray
    out_degree: np.ndarray

    @property
    def n(self) -> int:
        return int(self.raw_indices.size)

    def to_dense(self, raw: np.ndarray) -> np.ndarray:
        """
        Traduit des index bruts en identifiants denses.

        Raises:
            KeyError: Si un index brut n'existe pas dans le graphe
        """
        raw = np.asarray(raw, dtype=np.uint64)
        positions = np.searchsorted(self.raw_indices, raw)
        clipped = np.minimum(positions, self.n - 1)
        if raw.size and not bool(np.all(self.raw_indices[clipped] == raw)):
            raise KeyError("raw index not present in the graph")
        return positions.astype(np.uint32)


@dataclass(frozen=True)
class PreShard:
    """Arêtes renumérotées, déversées sur disque en paires (src u32, dst u32)."""

    path: Path
    edge_count: int

    @classmethod
    def write(cls, path: Path, src: np.ndarray, dst: np.ndarray) -> "PreShard":
        pairs = np.empty(src.size, dtype=PAIR_DTYPE)
        pairs["src"] = src
        pairs["dst"] = dst
        pairs.tofile(path)
        return cls(path=path, edge_count=int(src.size))

    def chunks(
        self, chunk_edges: int = BUCKET_CHUNK_EDGES
    ) -> Iterator[tuple[np.ndarray, np.ndarray]]:
        """Relit le pré-shard séquentiellement par morceaux (src, dst)."""
        with self.path.open("rb") as f:
            remaining = self.edge_count
            while remaining:
                take = min(chunk_edges, remaining)
                pairs = np.fromfile(f, dtype=PAIR_DTYPE, count=take)
                if pairs.size != take:
                    raise StorageError(f"{self.path}: truncated pre-shard")
                remaining -= take
                yield pairs["src"].astype(np.uint32), pairs["dst"].astype(np.uint32)


def degree_arrays(
    src_raw: np.ndarray,
    dst_raw: np.ndarray,
    work_dir: Path,
) -> tuple[IdMap, PreShard]:
    """
    Renumérote les sommets et produit le pré-shard.

    Les identifiants sont attribués par index brut croissant aux seuls sommets
    incidents à au moins une arête.

    Args:
        src_raw: Sources brutes (uint64)
        dst_raw: Destinations brutes (uint64)
        work_dir: Répertoire où déverser le pré-shard

    Returns:
        (IdMap, PreShard)

    Raises:
        EmptyGraphError: Si aucune arête n'est fournie
    """
    edge_count = int(src_raw.size)
    if edge_count == 0:
        raise EmptyGraphError("empty-graph: the edge list contains no edges")

    raw_indices, inverse = np.unique(
        np.concatenate([src_raw, dst_raw]).astype(np.uint64), return_inverse=True
    )
    n = int(raw_indices.size)
    if n > MAX_VERTEX_ID:
        raise VertexOutOfRangeError(f"{n} vertices exceed the 32-bit id space")

    inverse = inverse.reshape(-1)
    src = inverse[:edge_count].astype(np.uint32)
    dst = inverse[edge_count:].astype(np.uint32)
    id_map = IdMap(
        raw_indices=raw_indices,
        in_degree=np.bincount(dst, minlength=n).astype(np.uint64),
        out_degree=np.bincount(src, minlength=n).astype(np.uint64),
    )
    pre_shard = PreShard.write(work_dir / "preshard.bin", src, dst)
    logger.info(f"[PREPROCESS] Degreeing done: n={n} m={edge_count}")
    return id_map, pre_shard


def degree(edge_stream: Iterable[tuple[int, int]], work_dir: Path) -> tuple[IdMap, PreShard]:
    """Degreeing d'un flux de paires brutes (src, dst); voir degree_arrays."""
    src, dst = edges_to_arrays(edge_stream)
    return degree_arrays(src, dst, work_dir)


# ---------------------------------------------------------------------------
# Sharding
# ---------------------------------------------------------------------------


def _sort_and_write(spill: Path | None, target: Path) -> int:
    if spill is None or not spill.exists():
        write_subshard(target, SubShardBlock.empty())
        return 0
    pairs = np.fromfile(spill, dtype=PAIR_DTYPE)
    order = np.lexsort((pairs["src"], pairs["dst"]))
    src = pairs["src"][order].astype(np.uint32)
    dst = pairs["dst"][order].astype(np.uint32)
    write_subshard(target, SubShardBlock.from_sorted_edges(src, dst))
    spill.unlink()
    return int(src.size)


def _sort_cells(
    cells: list[tuple[int, int]],
    spills: dict[tuple[int, int], Path],
    store: GraphStore,
    shard_set: ShardSetName,
) -> dict[tuple[int, int], int]:
    with ThreadPoolExecutor(max_workers=max(1, settings.SORT_WORKERS)) as pool:
        futures = {
            cell: pool.submit(
                _sort_and_write,
                spills.get(cell),
                store.subshard_path(cell[0], cell[1], shard_set),
            )
            for cell in cells
        }
        return {cell: future.result() for cell, future in futures.items()}


def shard(
    pre_shard: PreShard,
    ranges: list[IntervalRange],
    store: GraphStore,
    shard_set: ShardSetName = "forward",
    chunk_edges: int = BUCKET_CHUNK_EDGES,
) -> ShardSetInfo:
    """
    Découpe le pré-shard en P x P sous-shards triés par (dst, src).

    Passe 1: ventilation séquentielle vers un fichier de débordement par cellule
    (sous NXCORE_TMPDIR). Passe 2: tri de chaque cellule en parallèle; la mémoire
    de travail est bornée par un sous-shard. Les cellules vides sont
    matérialisées par un fichier de 20 octets.

    Args:
        pre_shard: Arêtes renumérotées
        ranges: Intervalles (partition_vertices)
        store: Répertoire de sortie
        shard_set: Nom de l'ensemble produit

    Returns:
        Description de l'ensemble, avec le nombre d'arêtes par cellule
    """
    partitions = len(ranges)
    store.shard_dir(shard_set).mkdir(parents=True, exist_ok=True)
    cells = [(i, j) for i in range(partitions) for j in range(partitions)]

    with tempfile.TemporaryDirectory(prefix="nxcore-shard-", dir=settings.TMPDIR) as tmp:
        spill_dir = Path(tmp)
        spills: dict[tuple[int, int], Path] = {}

        for src, dst in pre_shard.chunks(chunk_edges):
            cell_ids = locate_intervals(src, ranges) * partitions + locate_intervals(dst, ranges)
            order = np.argsort(cell_ids, kind="stable")
            sorted_cells = cell_ids[order]
            present, starts = np.unique(sorted_cells, return_index=True)
            bounds = np.append(starts, sorted_cells.size)
            for k, cell_id in enumerate(present.tolist()):
                cell = divmod(cell_id, partitions)
                picked = order[bounds[k] : bounds[k + 1]]
                pairs = np.empty(picked.size, dtype=PAIR_DTYPE)
                pairs["src"] = src[picked]
                pairs["dst"] = dst[picked]
                path = spills.setdefault(cell, spill_dir / f"spill_{cell[0]}_{cell[1]}.bin")
                with path.open("ab") as f:
                    pairs.tofile(f)

        counts = _sort_cells(cells, spills, store, shard_set)

    matrix = [[counts[(i, j)] for j in range(partitions)] for i in range(partitions)]
    total = sum(map(sum, matrix))
    logger.info(
        f"[PREPROCESS] Shard set '{shard_set}' written: {partitions}x{partitions}, m={total}"
    )
    return ShardSetInfo(
        name=shard_set,
        directory=SHARD_SET_DIRS[shard_set],
        edge_count=total,
        subshard_edges=matrix,
    )


CellBuilder = Callable[[GraphStore, int, int], SubShardBlock]


def _sorted_block(src: np.ndarray, dst: np.ndarray) -> SubShardBlock:
    order = np.lexsort((src, dst))
    return SubShardBlock.from_sorted_edges(src[order], dst[order])


def _block_edges(block: SubShardBlock) -> tuple[np.ndarray, np.ndarray]:
    dst = np.repeat(block.dst_ids, block.src_counts)
    return block.src_ids, dst


def _transpose_cell(store: GraphStore, i: int, j: int) -> SubShardBlock:
    # Les arêtes de SS(j, i) inversées forment exactement SS'(i, j)
    src, dst = _block_edges(store.read_subshard(j, i, "forward"))
    return _sorted_block(dst, src)


def _symmetric_cell(store: GraphStore, i: int, j: int) -> SubShardBlock:
    fwd_src, fwd_dst = _block_edges(store.read_subshard(i, j, "forward"))
    rev_src, rev_dst = _block_edges(store.read_subshard(i, j, "transpose"))
    return _sorted_block(np.concatenate([fwd_src, rev_src]), np.concatenate([fwd_dst, rev_dst]))


def _derive_and_write(
    store: GraphStore,
    target: ShardSetName,
    build_cell: CellBuilder,
    i: int,
    j: int,
) -> int:
    block = build_cell(store, i, j)
    write_subshard(store.subshard_path(i, j, target), block, store.counters)
    return block.edge_count


def _derive_set(
    store: GraphStore,
    target: ShardSetName,
    build_cell: CellBuilder,
) -> ShardSetInfo:
    manifest = store.manifest
    partitions = manifest.partitions
    store.shard_dir(target).mkdir(parents=True, exist_ok=True)
    cells = [(i, j) for i in range(partitions) for j in range(partitions)]

    # Chaque tâche écrit son bloc: un sous-shard en mémoire par tâche
    with ThreadPoolExecutor(max_workers=max(1, settings.SORT_WORKERS)) as pool:
        futures = {
            cell: pool.submit(_derive_and_write, store, target, build_cell, cell[0], cell[1])
            for cell in cells
        }
        counts = {cell: future.result() for cell, future in futures.items()}

    matrix = [[counts[(i, j)] for j in range(partitions)] for i in range(partitions)]
    info = ShardSetInfo(
        name=target,
        directory=SHARD_SET_DIRS[target],
        edge_count=sum(map(sum, matrix)),
        subshard_edges=matrix,
    )
    manifest.shard_sets[target] = info
    store.save_manifest(manifest)
    return info


def transpose(store: GraphStore) -> ShardSetInfo:
    """
    Construit l'ensemble transposé (arêtes inversées, mêmes P et IdMap).

    Returns:
        Description de l'ensemble "transpose", enregistrée dans le manifeste
    """
    info = _derive_set(store, "transpose", _transpose_cell)
    logger.info(f"[PREPROCESS] Transpose set written ({info.edge_count} edges)")
    return info


def build_symmetric_set(store: GraphStore) -> ShardSetInfo:
    """
    Dérive l'ensemble symétrique en fusionnant chaque sous-shard direct avec
    le sous-shard transposé de même adresse.

    Raises:
        ConfigurationError: Si l'ensemble transposé n'existe pas
    """
    store.require_set("transpose")
    info = _derive_set(store, "symmetric", _symmetric_cell)
    logger.info(f"[PREPROCESS] Symmetric set written ({info.edge_count} edges)")
    return info


# ---------------------------------------------------------------------------
# Pipeline complet
# ---------------------------------------------------------------------------


def preprocess_edges(
    src_raw: np.ndarray,
    dst_raw: np.ndarray,
    out_dir: Path,
    partitions: int,
    symmetrized: bool = False,
    with_transpose: bool = False,
) -> GraphManifest:
    """
    Prétraite des arêtes brutes et écrit le répertoire DSSS complet.

    Args:
        src_raw: Sources brutes
        dst_raw: Destinations brutes
        out_dir: Répertoire de sortie (créé au besoin)
        partitions: Nombre d'intervalles P
        symmetrized: Stocke aussi chaque arête en sens inverse
        with_transpose: Construit l'ensemble transposé

    Returns:
        Le manifeste écrit

    Raises:
        EmptyGraphError: Aucune arête
        InvalidPartitionError: P = 0 ou P > n
    """
    if symmetrized:
        src_raw, dst_raw = symmetrize(src_raw, dst_raw)

    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    store = GraphStore(out_dir)

    with tempfile.TemporaryDirectory(prefix="nxcore-degree-", dir=settings.TMPDIR) as tmp:
        id_map, pre_shard = degree_arrays(src_raw, dst_raw, Path(tmp))
        ranges = partition_vertices(id_map.n, partitions)

        write_id_maps(store.map_path, store.rmap_path, id_map.raw_indices, store.counters)
        write_degrees(store.degree_path, id_map.in_degree, id_map.out_degree, store.counters)
        forward = shard(pre_shard, ranges, store, "forward")

    manifest = GraphManifest(
        n=id_map.n,
        m=pre_shard.edge_count,
        partitions=partitions,
        symmetrized=symmetrized,
        intervals=[IntervalSpec(index=r.index, first=r.first, count=r.count) for r in ranges],
        files={"mapping": MAP_FILE, "reverse_mapping": RMAP_FILE, "degrees": DEGREE_FILE},
        shard_sets={"forward": forward},
    )
    store.save_manifest(manifest)

    if with_transpose:
        transpose(store)

    logger.info(
        f"[PREPROCESS] Graph ready in {out_dir}: n={manifest.n} m={manifest.m} P={partitions}"
    )
    return store.manifest


def preprocess(
    input_path: Path,
    out_dir: Path,
    partitions: int,
    symmetrized: bool = False,
    with_transpose: bool = False,
) -> GraphManifest:
    """Prétraite un fichier de liste d'arêtes; voir preprocess_edges."""
    logger.info(f"[PREPROCESS] Reading edge list {input_path}")
    src, dst = read_edge_list(Path(input_path))
    return preprocess_edges(src, dst, out_dir, partitions, symmetrized, with_transpose)
