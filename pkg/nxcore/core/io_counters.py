"""
Comptabilité exacte des octets lus et écrits par la couche de stockage.

Les compteurs sont partagés par tous les threads de travail; chaque mise à jour
est faite sous verrou pour que les totaux restent exacts quel que soit
l'entrelacement.
"""

import threading
from pathlib import Path
from types import TracebackType
from typing import BinaryIO, Literal

from pydantic import BaseModel, Field

from nxcore.core.errors import StorageError

Category = Literal["subshard", "interval", "hub", "metadata"]
CATEGORIES: tuple[Category, ...] = ("subshard", "interval", "hub", "metadata")


class CategoryTally(BaseModel):
    """Octets et ouvertures de fichiers pour une catégorie."""

    bytes_read: int = 0
    bytes_written: int = 0
    opens: int = 0


class IoSnapshot(BaseModel):
    """Instantané immuable des compteurs."""

    bytes_read: int = Field(default=0, description="Total des octets lus")
    bytes_written: int = Field(default=0, description="Total des octets écrits")
    by_category: dict[str, CategoryTally] = Field(
        default_factory=lambda: {name: CategoryTally() for name in CATEGORIES},
        description="Ventilation par catégorie (subshard, interval, hub, metadata)",
    )

    def category(self, name: Category) -> CategoryTally:
        return self.by_category[name]

    def minus(self, earlier: "IoSnapshot") -> "IoSnapshot":
        """Différence entre deux instantanés (self - earlier)."""
        delta = {
            name: CategoryTally(
                bytes_read=self.by_category[name].bytes_read - earlier.by_category[name].bytes_read,
                bytes_written=self.by_category[name].bytes_written
                - earlier.by_category[name].bytes_written,
                opens=self.by_category[name].opens - earlier.by_category[name].opens,
            )
            for name in CATEGORIES
        }
        return IoSnapshot(
            bytes_read=self.bytes_read - earlier.bytes_read,
            bytes_written=self.bytes_written - earlier.bytes_written,
            by_category=delta,
        )


class IoCounters:
    """
    Compteurs d'entrées/sorties, monotones entre deux remises à zéro.

    Attributes:
        iterations: Instantanés enregistrés à la fin de chaque itération
    """

    def __init__(self) -> None:
        self._lock = threading.Lock()
        self._read = dict.fromkeys(CATEGORIES, 0)
        self._written = dict.fromkeys(CATEGORIES, 0)
        self._opens = dict.fromkeys(CATEGORIES, 0)
        self.iterations: list[IoSnapshot] = []

    def add_read(self, category: Category, nbytes: int) -> None:
        with self._lock:
            self._read[category] += nbytes

    def add_write(self, category: Category, nbytes: int) -> None:
        with self._lock:
            self._written[category] += nbytes

    def add_open(self, category: Category) -> None:
        with self._lock:
            self._opens[category] += 1

    def snapshot(self) -> IoSnapshot:
        """Retourne un instantané cohérent de tous les compteurs."""
        with self._lock:
            by_category = {
                name: CategoryTally(
                    bytes_read=self._read[name],
                    bytes_written=self._written[name],
                    opens=self._opens[name],
                )
                for name in CATEGORIES
            }
            return IoSnapshot(
                bytes_read=sum(self._read.values()),
                bytes_written=sum(self._written.values()),
                by_category=by_category,
            )

    def mark_iteration(self) -> IoSnapshot:
        """Enregistre et retourne l'instantané de fin d'itération."""
        snap = self.snapshot()
        with self._lock:
            self.iterations.append(snap)
        return snap

    def reset(self) -> None:
        with self._lock:
            for table in (self._read, self._written, self._opens):
                for name in CATEGORIES:
                    table[name] = 0
            self.iterations = []


class CountingFile:
    """
    Fichier binaire dont chaque octet transféré est compté.

    Les lectures et écritures doivent avancer: un retour en arrière lève
    StorageError, ce qui garantit l'accès séquentiel pendant une itération.
    """

    def __init__(
        self,
        path: Path,
        mode: Literal["rb", "wb"],
        category: Category,
        counters: IoCounters,
    ) -> None:
        self.path = path
        self.category = category
        self.counters = counters
        self._position = 0
        try:
            self._handle: BinaryIO = path.open(mode)
        except OSError as e:
            raise StorageError(f"cannot open {path}: {e}") from e
        counters.add_open(category)

    def read(self, size: int = -1) -> bytes:
        try:
            data = self._handle.read(size)
        except OSError as e:
            raise StorageError(f"read failed on {self.path}: {e}") from e
        self._position += len(data)
        self.counters.add_read(self.category, len(data))
        return data

    def write(self, data: bytes | memoryview) -> int:
        try:
            written = self._handle.write(data)
        except OSError as e:
            raise StorageError(f"write failed on {self.path}: {e}") from e
        self._position += written
        self.counters.add_write(self.category, written)
        return written

    def seek(self, offset: int) -> None:
        if offset < self._position:
            raise StorageError(
                f"backward seek on {self.path}: {self._position} -> {offset}"
            )
        self._handle.seek(offset)
        self._position = offset

    def close(self) -> None:
        self._handle.close()

    def __enter__(self) -> "CountingFile":
        return self

    def __exit__(
        self,
        exc_type: type[BaseException] | None,
        exc: BaseException | None,
        tb: TracebackType | None,
    ) -> None:
        self.close()


_counters_instance: IoCounters | None = None
_instance_lock = threading.Lock()


def get_io_counters() -> IoCounters:
    """Récupère l'instance globale des compteurs (créée au premier appel)."""
    global _counters_instance

    if _counters_instance is None:
        with _instance_lock:
            if _counters_instance is None:
                _counters_instance = IoCounters()
    return _counters_instance


def io_counters() -> IoSnapshot:
    """Instantané des compteurs globaux depuis la dernière remise à zéro."""
    return get_io_counters().snapshot()
