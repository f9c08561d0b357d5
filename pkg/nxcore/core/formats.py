"""
Formats binaires normatifs (little-endian, largeur fixe) et leurs lecteurs/écrivains.

Sous-shard (.nxss):
    magic "NXSS" (4) | edge_count u64 | dst_count u64 |
    dst_count x (dst_id u32 | src_count u32 | src_count x src_id u32)
Intervalle (.nxiv):
    first_vertex u32 | vertex_count u32 | attr_width u32 | vertex_count x attr
Hub (.nxhb):
    record_count u64 | record_count x (dst_id u32 | contribution attr_width)

Toute lecture se fait en une seule passe vers l'avant; tout fichier qui viole
les invariants de son format est rejeté avec FormatError.
"""

import struct
from collections.abc import Iterator
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from nxcore.core.errors import FormatError, GeometryMismatchError
from nxcore.core.graph_model import IntervalRange
from nxcore.core.io_counters import CountingFile, IoCounters, get_io_counters

SUBSHARD_MAGIC = b"NXSS"
SUBSHARD_HEADER = struct.Struct("<4sQQ")
INTERVAL_HEADER = struct.Struct("<III")
HUB_HEADER = struct.Struct("<Q")

VERTEX_DTYPE = np.dtype("<u4")
RAW_INDEX_DTYPE = np.dtype("<u8")
DEGREE_DTYPE = np.dtype("<u8")
MAP_RECORD_DTYPE = np.dtype([("raw", "<u8"), ("id", "<u4")])
DEGREE_RECORD_DTYPE = np.dtype([("in_degree", "<u8"), ("out_degree", "<u8")])


def little_endian(dtype: np.dtype) -> np.dtype:
    """Version little-endian d'un dtype d'attribut."""
    return np.dtype(dtype).newbyteorder("<")


# ---------------------------------------------------------------------------
# Sous-shards
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SubShardBlock:
    """
    Sous-shard décodé au format CSR par destination.

    Attributes:
        dst_ids: Destinations distinctes, strictement croissantes (uint32)
        offsets: Bornes des enregistrements, longueur dst_count + 1 (int64)
        src_ids: Sources, croissantes (ex aequo permis) dans chaque enregistrement
    """

    dst_ids: np.ndarray
    offsets: np.ndarray
    src_ids: np.ndarray

    @property
    def edge_count(self) -> int:
        return int(self.src_ids.size)

    @property
    def dst_count(self) -> int:
        return int(self.dst_ids.size)

    @property
    def src_counts(self) -> np.ndarray:
        return np.diff(self.offsets)

    @property
    def encoded_size(self) -> int:
        return SUBSHARD_HEADER.size + 4 * (2 * self.dst_count + self.edge_count)

    @classmethod
    def empty(cls) -> "SubShardBlock":
        return cls(
            dst_ids=np.empty(0, dtype=VERTEX_DTYPE),
            offsets=np.zeros(1, dtype=np.int64),
            src_ids=np.empty(0, dtype=VERTEX_DTYPE),
        )

    @classmethod
    def from_sorted_edges(cls, src: np.ndarray, dst: np.ndarray) -> "SubShardBlock":
        """
        Construit un bloc à partir d'arêtes déjà triées par (dst, src).

        Args:
            src: Sources, alignées sur dst
            dst: Destinations, non décroissantes
        """
        if src.size == 0:
            return cls.empty()
        dst_ids, starts = np.unique(dst, return_index=True)
        offsets = np.append(starts, dst.size).astype(np.int64)
        return cls(
            dst_ids=dst_ids.astype(VERTEX_DTYPE),
            offsets=offsets,
            src_ids=np.ascontiguousarray(src, dtype=VERTEX_DTYPE),
        )

    def edges(self) -> Iterator[tuple[int, int]]:
        """Itère les arêtes (dst, src) dans l'ordre stocké."""
        for k in range(self.dst_count):
            dst = int(self.dst_ids[k])
            for src in self.src_ids[self.offsets[k] : self.offsets[k + 1]]:
                yield dst, int(src)

    def validate(
        self,
        src_range: IntervalRange | None = None,
        dst_range: IntervalRange | None = None,
    ) -> None:
        """
        Vérifie les invariants du format.

        Raises:
            FormatError: Si un invariant est violé
        """
        if self.offsets.size != self.dst_count + 1 or int(self.offsets[0]) != 0:
            raise FormatError("sub-shard offsets do not match dst_count")
        if int(self.offsets[-1]) != self.edge_count:
            raise FormatError("sum of src_count differs from edge_count")
        counts = self.src_counts
        if counts.size and int(counts.min()) < 1:
            raise FormatError("sub-shard record with zero sources")
        if self.dst_count > 1 and not bool(np.all(np.diff(self.dst_ids.astype(np.int64)) > 0)):
            raise FormatError("sub-shard destinations are not strictly ascending")
        if self.edge_count > 1:
            steps = np.diff(self.src_ids.astype(np.int64))
            within = np.ones(steps.size, dtype=bool)
            within[self.offsets[1:-1] - 1] = False
            if bool(np.any(steps[within] < 0)):
                raise FormatError("sub-shard sources are not sorted within a destination")
        if dst_range is not None and self.dst_count:
            if int(self.dst_ids[0]) < dst_range.first or int(self.dst_ids[-1]) >= dst_range.stop:
                raise FormatError(f"sub-shard destination outside interval {dst_range.index}")
        if src_range is not None and self.edge_count:
            lo, hi = int(self.src_ids.min()), int(self.src_ids.max())
            if lo < src_range.first or hi >= src_range.stop:
                raise FormatError(f"sub-shard source outside interval {src_range.index}")


def encode_subshard(block: SubShardBlock) -> bytes:
    """Encode un bloc (valide) en octets."""
    block.validate()
    dst_count, edge_count = block.dst_count, block.edge_count
    words = np.empty(2 * dst_count + edge_count, dtype=VERTEX_DTYPE)
    if dst_count:
        positions = 2 * np.arange(dst_count, dtype=np.int64) + block.offsets[:-1]
        is_src = np.ones(words.size, dtype=bool)
        is_src[positions] = False
        is_src[positions + 1] = False
        words[positions] = block.dst_ids
        words[positions + 1] = block.src_counts
        words[is_src] = block.src_ids
    header = SUBSHARD_HEADER.pack(SUBSHARD_MAGIC, edge_count, dst_count)
    return header + words.tobytes()


def decode_subshard(data: bytes, source: str = "<memory>") -> SubShardBlock:
    """
    Décode un sous-shard depuis ses octets.

    Args:
        data: Contenu complet du fichier
        source: Nom affiché dans les messages d'erreur

    Raises:
        FormatError: Si l'en-tête est tronqué ou corrompu, ou si un invariant est violé
    """
    if len(data) < SUBSHARD_HEADER.size:
        raise FormatError(f"{source}: truncated sub-shard header ({len(data)} bytes)")
    magic, edge_count, dst_count = SUBSHARD_HEADER.unpack_from(data)
    if magic != SUBSHARD_MAGIC:
        raise FormatError(f"{source}: bad sub-shard magic {magic!r}")
    body = len(data) - SUBSHARD_HEADER.size
    if body != 4 * (2 * dst_count + edge_count):
        raise FormatError(
            f"{source}: body is {body} bytes, header announces "
            f"{dst_count} destinations and {edge_count} edges"
        )
    if dst_count == 0:
        if edge_count != 0:
            raise FormatError(f"{source}: edges without destinations")
        return SubShardBlock.empty()

    words = np.frombuffer(data, dtype=VERTEX_DTYPE, offset=SUBSHARD_HEADER.size)
    positions = np.empty(dst_count, dtype=np.int64)
    counts = np.empty(dst_count, dtype=np.int64)
    cursor = 0
    for k in range(dst_count):
        if cursor + 1 >= words.size:
            raise FormatError(f"{source}: record {k} runs past the end of the file")
        count = int(words[cursor + 1])
        if count == 0:
            raise FormatError(f"{source}: record {k} has zero sources")
        positions[k] = cursor
        counts[k] = count
        cursor += 2 + count
    if cursor != words.size:
        raise FormatError(f"{source}: records do not fill the body exactly")

    is_src = np.ones(words.size, dtype=bool)
    is_src[positions] = False
    is_src[positions + 1] = False
    block = SubShardBlock(
        dst_ids=words[positions].copy(),
        offsets=np.concatenate(([0], np.cumsum(counts))).astype(np.int64),
        src_ids=words[is_src].copy(),
    )
    try:
        block.validate()
    except FormatError as e:
        raise FormatError(f"{source}: {e}") from e
    return block


def write_subshard(path: Path, block: SubShardBlock, counters: IoCounters | None = None) -> int:
    """
    Écrit un sous-shard et retourne le nombre d'octets écrits.

    Raises:
        FormatError: Si le bloc viole les invariants du format
    """
    payload = encode_subshard(block)
    with CountingFile(path, "wb", "subshard", counters or get_io_counters()) as f:
        return f.write(payload)


def read_subshard_bytes(path: Path, counters: IoCounters | None = None) -> bytes:
    """Lit le contenu brut d'un sous-shard en une passe."""
    with CountingFile(path, "rb", "subshard", counters or get_io_counters()) as f:
        return f.read()


def read_subshard(path: Path, counters: IoCounters | None = None) -> SubShardBlock:
    """Lit et décode un sous-shard."""
    return decode_subshard(read_subshard_bytes(path, counters), source=str(path))


def read_subshard_stream(
    path: Path, counters: IoCounters | None = None
) -> Iterator[tuple[int, int]]:
    """Itère les arêtes (dst, src) d'un fichier de sous-shard dans l'ordre stocké."""
    yield from read_subshard(path, counters).edges()


def read_subshard_header(path: Path, counters: IoCounters | None = None) -> tuple[int, int]:
    """
    Lit uniquement l'en-tête d'un sous-shard.

    Returns:
        (edge_count, dst_count)
    """
    with CountingFile(path, "rb", "metadata", counters or get_io_counters()) as f:
        data = f.read(SUBSHARD_HEADER.size)
    if len(data) < SUBSHARD_HEADER.size:
        raise FormatError(f"{path}: truncated sub-shard header")
    magic, edge_count, dst_count = SUBSHARD_HEADER.unpack(data)
    if magic != SUBSHARD_MAGIC:
        raise FormatError(f"{path}: bad sub-shard magic {magic!r}")
    return int(edge_count), int(dst_count)


# ---------------------------------------------------------------------------
# Intervalles
# ---------------------------------------------------------------------------


@dataclass
class Interval:
    """
    Attributs contigus d'un intervalle.

    Attributes:
        first: Identifiant du premier sommet
        values: Un attribut par sommet
        active: Drapeau d'activité de l'intervalle
    """

    first: int
    values: np.ndarray
    active: bool = False

    @property
    def count(self) -> int:
        return int(self.values.size)

    @property
    def attr_width(self) -> int:
        return int(self.values.dtype.itemsize)


def save_interval(path: Path, interval: Interval, counters: IoCounters | None = None) -> int:
    """
    Écrit un intervalle: exactement 12 + count * B_a octets.

    Raises:
        FormatError: Si l'intervalle est vide
    """
    if interval.count == 0:
        raise FormatError(f"{path}: refusing to save an empty interval")
    values = np.ascontiguousarray(interval.values, dtype=little_endian(interval.values.dtype))
    header = INTERVAL_HEADER.pack(interval.first, interval.count, interval.attr_width)
    with CountingFile(path, "wb", "interval", counters or get_io_counters()) as f:
        return f.write(header) + f.write(values.tobytes())


def _check_interval_header(
    path: Path,
    header: bytes,
    dtype: np.dtype,
    expected: IntervalRange | None,
) -> tuple[int, int]:
    if len(header) < INTERVAL_HEADER.size:
        raise FormatError(f"{path}: truncated interval header")
    first, count, width = INTERVAL_HEADER.unpack(header)
    if count == 0:
        raise FormatError(f"{path}: zero-count interval")
    if width != dtype.itemsize:
        raise GeometryMismatchError(
            f"{path}: attribute width {width} differs from expected {dtype.itemsize}"
        )
    if expected is not None and (first != expected.first or count != expected.count):
        raise GeometryMismatchError(
            f"{path}: interval [{first}, {first + count}) differs from manifest "
            f"[{expected.first}, {expected.stop})"
        )
    return first, count


def load_interval(
    path: Path,
    dtype: np.dtype,
    expected: IntervalRange | None = None,
    counters: IoCounters | None = None,
) -> Interval:
    """
    Charge un intervalle depuis le disque.

    Args:
        path: Fichier .nxiv
        dtype: Type des attributs attendu
        expected: Géométrie attendue selon le manifeste

    Raises:
        GeometryMismatchError: Si la géométrie diffère du manifeste
        FormatError: Si le fichier est tronqué ou suivi d'octets en trop
    """
    dtype = little_endian(dtype)
    with CountingFile(path, "rb", "interval", counters or get_io_counters()) as f:
        first, count = _check_interval_header(path, f.read(INTERVAL_HEADER.size), dtype, expected)
        payload = f.read(count * dtype.itemsize)
        trailing = f.read(1)
    if len(payload) != count * dtype.itemsize:
        raise FormatError(f"{path}: truncated interval payload")
    if trailing:
        raise FormatError(f"{path}: trailing bytes after interval payload")
    values = np.frombuffer(payload, dtype=dtype).astype(dtype.newbyteorder("="))
    return Interval(first=first, values=values)


def iter_interval_chunks(
    path: Path,
    dtype: np.dtype,
    chunk_bytes: int,
    expected: IntervalRange | None = None,
    counters: IoCounters | None = None,
) -> Iterator[np.ndarray]:
    """
    Relit un intervalle par morceaux successifs (un tampon de flux à la fois).

    Yields:
        Des tableaux d'attributs consécutifs couvrant tout l'intervalle
    """
    dtype = little_endian(dtype)
    per_chunk = max(1, chunk_bytes // dtype.itemsize)
    with CountingFile(path, "rb", "interval", counters or get_io_counters()) as f:
        _, count = _check_interval_header(path, f.read(INTERVAL_HEADER.size), dtype, expected)
        remaining = count
        while remaining:
            take = min(per_chunk, remaining)
            payload = f.read(take * dtype.itemsize)
            if len(payload) != take * dtype.itemsize:
                raise FormatError(f"{path}: truncated interval payload")
            remaining -= take
            yield np.frombuffer(payload, dtype=dtype).astype(dtype.newbyteorder("="))
        if f.read(1):
            raise FormatError(f"{path}: trailing bytes after interval payload")


# ---------------------------------------------------------------------------
# Hubs
# ---------------------------------------------------------------------------


def hub_record_dtype(contrib_dtype: np.dtype) -> np.dtype:
    """Enregistrement compact (dst u32, contribution) sans alignement."""
    return np.dtype([("dst", "<u4"), ("value", little_endian(contrib_dtype))])


def write_hub(
    path: Path,
    dst_ids: np.ndarray,
    values: np.ndarray,
    dst_range: IntervalRange,
    counters: IoCounters | None = None,
) -> int:
    """
    Écrit un hub en ordre croissant de destinations.

    Raises:
        FormatError: Si une destination sort de l'intervalle ou se répète
    """
    if dst_ids.size != values.size:
        raise FormatError(f"{path}: {dst_ids.size} destinations for {values.size} values")
    if dst_ids.size:
        if int(dst_ids[0]) < dst_range.first or int(dst_ids[-1]) >= dst_range.stop:
            raise FormatError(f"{path}: hub destination outside interval {dst_range.index}")
        if dst_ids.size > 1 and not bool(np.all(np.diff(dst_ids.astype(np.int64)) > 0)):
            raise FormatError(f"{path}: hub destinations are not strictly ascending")
    records = np.empty(dst_ids.size, dtype=hub_record_dtype(values.dtype))
    records["dst"] = dst_ids
    records["value"] = values
    with CountingFile(path, "wb", "hub", counters or get_io_counters()) as f:
        return f.write(HUB_HEADER.pack(dst_ids.size)) + f.write(records.tobytes())


def read_hub(
    path: Path,
    contrib_dtype: np.dtype,
    dst_range: IntervalRange | None = None,
    counters: IoCounters | None = None,
) -> tuple[np.ndarray, np.ndarray]:
    """
    Lit un hub.

    Returns:
        (dst_ids, values)

    Raises:
        FormatError: Si le fichier est tronqué ou viole les invariants du hub
    """
    record_dtype = hub_record_dtype(contrib_dtype)
    with CountingFile(path, "rb", "hub", counters or get_io_counters()) as f:
        header = f.read(HUB_HEADER.size)
        if len(header) < HUB_HEADER.size:
            raise FormatError(f"{path}: truncated hub header")
        (record_count,) = HUB_HEADER.unpack(header)
        payload = f.read(record_count * record_dtype.itemsize)
        trailing = f.read(1)
    if len(payload) != record_count * record_dtype.itemsize:
        raise FormatError(f"{path}: truncated hub payload")
    if trailing:
        raise FormatError(f"{path}: trailing bytes after hub payload")
    records = np.frombuffer(payload, dtype=record_dtype)
    dst_ids = records["dst"].astype(np.uint32)
    values = records["value"].astype(np.dtype(contrib_dtype).newbyteorder("="))
    if dst_ids.size > 1 and not bool(np.all(np.diff(dst_ids.astype(np.int64)) > 0)):
        raise FormatError(f"{path}: hub destinations are not strictly ascending")
    if dst_range is not None and dst_ids.size:
        if int(dst_ids[0]) < dst_range.first or int(dst_ids[-1]) >= dst_range.stop:
            raise FormatError(f"{path}: hub destination outside interval {dst_range.index}")
    return dst_ids, values


# ---------------------------------------------------------------------------
# Correspondances d'identifiants et degrés
# ---------------------------------------------------------------------------


def write_id_maps(
    map_path: Path,
    rmap_path: Path,
    raw_indices: np.ndarray,
    counters: IoCounters | None = None,
) -> None:
    """
    Écrit map.bin (raw u64, id u32 triés par index brut) et rmap.bin (raw u64 par id).

    Args:
        raw_indices: Index bruts triés; la position est l'identifiant dense
    """
    counters = counters or get_io_counters()
    records = np.empty(raw_indices.size, dtype=MAP_RECORD_DTYPE)
    records["raw"] = raw_indices
    records["id"] = np.arange(raw_indices.size, dtype=np.uint32)
    with CountingFile(map_path, "wb", "metadata", counters) as f:
        f.write(records.tobytes())
    with CountingFile(rmap_path, "wb", "metadata", counters) as f:
        f.write(np.ascontiguousarray(raw_indices, dtype=RAW_INDEX_DTYPE).tobytes())


def read_forward_map(path: Path, counters: IoCounters | None = None) -> np.ndarray:
    """Lit map.bin en tableau structuré (raw, id)."""
    with CountingFile(path, "rb", "metadata", counters or get_io_counters()) as f:
        payload = f.read()
    if len(payload) % MAP_RECORD_DTYPE.itemsize:
        raise FormatError(f"{path}: size is not a whole number of map records")
    return np.frombuffer(payload, dtype=MAP_RECORD_DTYPE).copy()


def read_reverse_map(path: Path, counters: IoCounters | None = None) -> np.ndarray:
    """Lit rmap.bin: index brut de chaque identifiant dense."""
    with CountingFile(path, "rb", "metadata", counters or get_io_counters()) as f:
        payload = f.read()
    if len(payload) % RAW_INDEX_DTYPE.itemsize:
        raise FormatError(f"{path}: size is not a whole number of raw indices")
    return np.frombuffer(payload, dtype=RAW_INDEX_DTYPE).astype(np.uint64)


def write_degrees(
    path: Path,
    in_degree: np.ndarray,
    out_degree: np.ndarray,
    counters: IoCounters | None = None,
) -> None:
    """Écrit deg.bin: (in_degree u64, out_degree u64) par identifiant dense."""
    records = np.empty(in_degree.size, dtype=DEGREE_RECORD_DTYPE)
    records["in_degree"] = in_degree
    records["out_degree"] = out_degree
    with CountingFile(path, "wb", "metadata", counters or get_io_counters()) as f:
        f.write(records.tobytes())


def read_degrees(path: Path, counters: IoCounters | None = None) -> np.ndarray:
    """Lit deg.bin en tableau structuré (in_degree, out_degree)."""
    with CountingFile(path, "rb", "metadata", counters or get_io_counters()) as f:
        payload = f.read()
    if len(payload) % DEGREE_RECORD_DTYPE.itemsize:
        raise FormatError(f"{path}: size is not a whole number of degree records")
    return np.frombuffer(payload, dtype=DEGREE_RECORD_DTYPE).copy()
