"""Tests des compteurs d'entrées/sorties."""

from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import pytest

from nxcore.core.errors import StorageError
from nxcore.core.io_counters import CountingFile, IoCounters


def test_counting_file_counts_exact_bytes(tmp_path: Path):
    """Test que chaque octet écrit puis relu est compté dans sa catégorie."""
    counters = IoCounters()
    path = tmp_path / "data.bin"

    with CountingFile(path, "wb", "hub", counters) as f:
        f.write(b"abcdef")
        f.write(b"gh")
    with CountingFile(path, "rb", "hub", counters) as f:
        assert f.read(3) == b"abc"
        f.read()

    snap = counters.snapshot()
    assert snap.bytes_written == 8
    assert snap.bytes_read == 8
    assert snap.category("hub").opens == 2
    assert snap.category("subshard").bytes_read == 0


def test_backward_seek_is_refused(tmp_path: Path):
    """Test qu'un retour en arrière dans un fichier lève StorageError."""
    path = tmp_path / "data.bin"
    path.write_bytes(b"0123456789")

    with CountingFile(path, "rb", "interval", IoCounters()) as f:
        f.read(6)
        f.seek(8)
        with pytest.raises(StorageError, match="backward seek"):
            f.seek(2)


def test_missing_file_raises_storage_error(tmp_path: Path):
    """Test qu'un fichier absent lève StorageError (sous-classe d'OSError)."""
    with pytest.raises(OSError):
        CountingFile(tmp_path / "absent.bin", "rb", "metadata", IoCounters())


def test_snapshot_difference_and_reset():
    """Test la différence de deux instantanés et la remise à zéro."""
    counters = IoCounters()
    counters.add_read("subshard", 100)
    before = counters.snapshot()
    counters.add_read("subshard", 40)
    counters.add_write("interval", 12)

    delta = counters.snapshot().minus(before)

    assert delta.bytes_read == 40
    assert delta.bytes_written == 12
    assert delta.category("interval").bytes_written == 12
    counters.reset()
    assert counters.snapshot().bytes_read == 0


def test_mark_iteration_records_snapshots():
    """Test que mark_iteration garde un instantané par itération."""
    counters = IoCounters()
    counters.add_read("hub", 8)
    counters.mark_iteration()
    counters.add_read("hub", 8)
    counters.mark_iteration()

    assert [snap.bytes_read for snap in counters.iterations] == [8, 16]


def test_counters_are_exact_under_concurrency():
    """Test que les totaux restent exacts avec plusieurs threads."""
    counters = IoCounters()

    def hammer() -> None:
        for _ in range(1000):
            counters.add_read("subshard", 3)
            counters.add_write("hub", 5)

    with ThreadPoolExecutor(max_workers=8) as pool:
        for future in [pool.submit(hammer) for _ in range(8)]:
            future.result()

    snap = counters.snapshot()
    assert snap.bytes_read == 8 * 1000 * 3
    assert snap.bytes_written == 8 * 1000 * 5
