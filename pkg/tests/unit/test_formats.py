"""Tests des formats binaires: sous-shards, intervalles, hubs."""

from pathlib import Path

import numpy as np
import pytest

from nxcore.core.errors import FormatError, GeometryMismatchError
from nxcore.core.formats import (
    SUBSHARD_HEADER,
    Interval,
    SubShardBlock,
    decode_subshard,
    encode_subshard,
    iter_interval_chunks,
    load_interval,
    read_hub,
    read_subshard_stream,
    save_interval,
    write_hub,
    write_subshard,
)
from nxcore.core.graph_model import IntervalRange
from nxcore.core.io_counters import IoCounters


def _block(pairs: list[tuple[int, int]]) -> SubShardBlock:
    """Bloc construit à partir de paires (src, dst) triées par (dst, src)."""
    src = np.array([s for s, _ in pairs], dtype=np.uint32)
    dst = np.array([d for _, d in pairs], dtype=np.uint32)
    return SubShardBlock.from_sorted_edges(src, dst)


def test_encode_example_subshard_layout():
    """Test l'encodage de SS(2,1) = {5->2, 4->3, 5->3}: 48 octets, mots attendus."""
    block = _block([(5, 2), (4, 3), (5, 3)])

    data = encode_subshard(block)

    assert len(data) == 48
    assert data[:4] == b"NXSS"
    _, edges, dsts = SUBSHARD_HEADER.unpack_from(data)
    assert (edges, dsts) == (3, 2)
    words = np.frombuffer(data, dtype="<u4", offset=SUBSHARD_HEADER.size).tolist()
    assert words == [2, 1, 5, 3, 2, 4, 5]


def test_empty_subshard_is_header_only():
    """Test qu'un sous-shard vide fait exactement 20 octets."""
    data = encode_subshard(SubShardBlock.empty())

    assert len(data) == 20
    assert decode_subshard(data).edge_count == 0


def test_decode_restores_block():
    """Test que le décodage redonne les destinations, bornes et sources."""
    block = _block([(0, 1), (3, 1), (2, 4), (2, 5), (7, 5)])

    decoded = decode_subshard(encode_subshard(block))

    assert decoded.dst_ids.tolist() == [1, 4, 5]
    assert decoded.offsets.tolist() == [0, 2, 3, 5]
    assert decoded.src_ids.tolist() == [0, 3, 2, 2, 7]
    assert list(decoded.edges()) == [(1, 0), (1, 3), (4, 2), (5, 2), (5, 7)]


def test_write_then_stream_subshard(tmp_path: Path):
    """Test que l'écriture compte encoded_size octets et que la lecture suit l'ordre stocké."""
    block = _block([(5, 2), (4, 3), (5, 3)])
    counters = IoCounters()
    path = tmp_path / "ss_2_1.nxss"

    written = write_subshard(path, block, counters)

    assert written == block.encoded_size == 48
    assert counters.snapshot().category("subshard").bytes_written == 48
    assert list(read_subshard_stream(path, counters)) == [(2, 5), (3, 4), (3, 5)]
    assert counters.snapshot().category("subshard").bytes_read == 48


def test_decode_rejects_bad_magic():
    """Test qu'un mauvais magic est rejeté."""
    data = b"XXXX" + encode_subshard(_block([(1, 2)]))[4:]

    with pytest.raises(FormatError, match="magic"):
        decode_subshard(data)


def test_decode_rejects_truncated_file():
    """Test qu'un fichier tronqué est rejeté."""
    data = encode_subshard(_block([(1, 2), (3, 2)]))

    with pytest.raises(FormatError):
        decode_subshard(data[:-4])
    with pytest.raises(FormatError, match="truncated"):
        decode_subshard(data[:10])


def test_decode_rejects_zero_source_record():
    """Test qu'un enregistrement sans source est rejeté."""
    header = SUBSHARD_HEADER.pack(b"NXSS", 1, 2)
    words = np.array([1, 0, 2, 1, 9], dtype="<u4").tobytes()

    with pytest.raises(FormatError, match="zero sources"):
        decode_subshard(header + words)


def test_decode_rejects_unsorted_destinations():
    """Test que des destinations non croissantes sont rejetées."""
    header = SUBSHARD_HEADER.pack(b"NXSS", 2, 2)
    words = np.array([5, 1, 0, 3, 1, 0], dtype="<u4").tobytes()

    with pytest.raises(FormatError, match="ascending"):
        decode_subshard(header + words)


def test_validate_checks_interval_bounds():
    """Test qu'une source hors de l'intervalle source est détectée."""
    block = _block([(5, 2), (4, 3)])

    block.validate(IntervalRange(2, 4, 2), IntervalRange(1, 2, 2))
    with pytest.raises(FormatError, match="source outside"):
        block.validate(src_range=IntervalRange(0, 0, 2))


def test_interval_file_size_and_round_trip(tmp_path: Path):
    """Test qu'un intervalle occupe 12 + count * B_a octets et se relit."""
    counters = IoCounters()
    path = tmp_path / "iv_1.nxiv"
    values = np.array([1.5, -2.25, 3.0], dtype=np.float64)

    written = save_interval(path, Interval(first=2, values=values), counters)
    loaded = load_interval(path, np.dtype(np.float64), IntervalRange(1, 2, 3), counters)

    assert written == 12 + 3 * 8 == path.stat().st_size
    assert loaded.first == 2
    assert loaded.values.tolist() == values.tolist()


def test_interval_geometry_mismatch(tmp_path: Path):
    """Test qu'un intervalle différent du manifeste lève GeometryMismatchError."""
    path = tmp_path / "iv_0.nxiv"
    save_interval(path, Interval(first=0, values=np.zeros(4, dtype=np.uint32)), IoCounters())

    with pytest.raises(GeometryMismatchError):
        load_interval(path, np.dtype(np.uint32), IntervalRange(0, 0, 5), IoCounters())
    with pytest.raises(GeometryMismatchError, match="attribute width"):
        load_interval(path, np.dtype(np.float64), None, IoCounters())


def test_interval_with_trailing_bytes_is_rejected(tmp_path: Path):
    """Test qu'un intervalle suivi d'octets en trop lève FormatError."""
    path = tmp_path / "iv_1.nxiv"
    save_interval(path, Interval(first=2, values=np.zeros(2, dtype=np.uint32)), IoCounters())
    with path.open("ab") as f:
        f.write(b"JUNK")

    with pytest.raises(FormatError, match="trailing bytes"):
        load_interval(path, np.dtype(np.uint32), IntervalRange(1, 2, 2), IoCounters())
    with pytest.raises(FormatError, match="trailing bytes"):
        list(iter_interval_chunks(path, np.dtype(np.uint32), 4, counters=IoCounters()))


def test_empty_interval_is_refused(tmp_path: Path):
    """Test qu'un intervalle vide ne peut pas être écrit."""
    with pytest.raises(FormatError):
        save_interval(
            tmp_path / "iv.nxiv",
            Interval(first=0, values=np.empty(0, dtype=np.int64)),
            IoCounters(),
        )


def test_interval_chunks_cover_all_values(tmp_path: Path):
    """Test la relecture par tampons d'un intervalle."""
    path = tmp_path / "iv.nxiv"
    values = np.arange(10, dtype=np.int64)
    save_interval(path, Interval(first=0, values=values), IoCounters())

    chunks = list(iter_interval_chunks(path, np.dtype(np.int64), 24, counters=IoCounters()))

    assert [c.size for c in chunks] == [3, 3, 3, 1]
    assert np.concatenate(chunks).tolist() == values.tolist()


def test_hub_records_are_packed(tmp_path: Path):
    """Test qu'un hub occupe 8 + k * (4 + B_a) octets et se relit."""
    counters = IoCounters()
    path = tmp_path / "h_2_1.nxhb"
    dst_range = IntervalRange(1, 2, 2)
    dst_ids = np.array([2, 3], dtype=np.uint32)
    values = np.array([0.25, 0.5], dtype=np.float64)

    written = write_hub(path, dst_ids, values, dst_range, counters)
    read_ids, read_values = read_hub(path, np.dtype(np.float64), dst_range, counters)

    assert written == 8 + 2 * 12 == path.stat().st_size
    assert read_ids.tolist() == [2, 3]
    assert read_values.tolist() == [0.25, 0.5]
    assert counters.snapshot().category("hub").bytes_read == written


def test_empty_hub_is_header_only(tmp_path: Path):
    """Test qu'un hub vide fait 8 octets."""
    path = tmp_path / "h.nxhb"

    written = write_hub(
        path,
        np.empty(0, dtype=np.uint32),
        np.empty(0, dtype=np.uint32),
        IntervalRange(0, 0, 2),
        IoCounters(),
    )

    assert written == 8
    ids, values = read_hub(path, np.dtype(np.uint32), counters=IoCounters())
    assert ids.size == 0 and values.size == 0


def test_hub_rejects_destination_outside_interval(tmp_path: Path):
    """Test qu'une destination hors intervalle est refusée à l'écriture."""
    with pytest.raises(FormatError, match="outside"):
        write_hub(
            tmp_path / "h.nxhb",
            np.array([5], dtype=np.uint32),
            np.array([1], dtype=np.uint32),
            IntervalRange(0, 0, 2),
            IoCounters(),
        )


def test_truncated_hub_is_rejected(tmp_path: Path):
    """Test qu'un hub tronqué lève FormatError."""
    path = tmp_path / "h.nxhb"
    write_hub(
        path,
        np.array([0, 1], dtype=np.uint32),
        np.array([7, 8], dtype=np.uint32),
        IntervalRange(0, 0, 2),
        IoCounters(),
    )
    path.write_bytes(path.read_bytes()[:-3])

    with pytest.raises(FormatError, match="truncated"):
        read_hub(path, np.dtype(np.uint32), counters=IoCounters())


def test_hub_with_trailing_bytes_is_rejected(tmp_path: Path):
    """Test qu'un hub suivi d'octets en trop lève FormatError."""
    path = tmp_path / "h_1_2.nxhb"
    dst_range = IntervalRange(2, 4, 2)
    write_hub(
        path,
        np.array([4], dtype=np.uint32),
        np.array([1], dtype=np.uint32),
        dst_range,
        IoCounters(),
    )
    with path.open("ab") as f:
        f.write(b"JUNKJUNK")

    with pytest.raises(FormatError, match="trailing bytes"):
        read_hub(path, np.dtype(np.uint32), dst_range, IoCounters())
