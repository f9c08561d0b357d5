"""Service de stockage d'un graphe prétraité sur disque."""

import json
import shutil
from pathlib import Path

import numpy as np
from pydantic import ValidationError

from nxcore.core.errors import (
    ConfigurationError,
    FormatError,
    StorageError,
    VertexOutOfRangeError,
)
from nxcore.core.formats import (
    SubShardBlock,
    read_degrees,
    read_forward_map,
    read_reverse_map,
    read_subshard,
    read_subshard_bytes,
)
from nxcore.core.graph_model import IntervalRange
from nxcore.core.io_counters import CountingFile, IoCounters, get_io_counters
from nxcore.core.logger import setup_logger
from nxcore.core.models import GraphManifest, ShardSetName

logger = setup_logger(__name__)

MANIFEST_FILE = "manifest.json"
MAP_FILE = "map.bin"
RMAP_FILE = "rmap.bin"
DEGREE_FILE = "deg.bin"

SHARD_SET_DIRS: dict[str, str] = {
    "forward": "shards",
    "transpose": "transpose/shards",
    "symmetric": "symmetric/shards",
}


class GraphStore:
    """
    Accès aux fichiers d'un répertoire de graphe.

    Disposition:
        manifest.json, map.bin, rmap.bin, deg.bin
        shards/ss_<i>_<j>.nxss             (ensemble direct)
        transpose/shards/ss_<i>_<j>.nxss   (optionnel)
        symmetric/shards/ss_<i>_<j>.nxss   (optionnel)
        hubs/h_<i>_<j>.nxhb                (réécrits à chaque itération)
        intervals/iv_<j>.nxiv              (intervalles non résidents)
    """

    def __init__(self, root: str | Path, counters: IoCounters | None = None) -> None:
        """
        Initialise le service.

        Args:
            root: Répertoire du graphe
            counters: Compteurs d'E/S; les compteurs globaux par défaut
        """
        self.root = Path(root)
        self.counters = counters or get_io_counters()
        self._manifest: GraphManifest | None = None

    # -- chemins -----------------------------------------------------------

    @property
    def manifest_path(self) -> Path:
        return self.root / MANIFEST_FILE

    @property
    def map_path(self) -> Path:
        return self.root / MAP_FILE

    @property
    def rmap_path(self) -> Path:
        return self.root / RMAP_FILE

    @property
    def degree_path(self) -> Path:
        return self.root / DEGREE_FILE

    @property
    def hub_dir(self) -> Path:
        return self.root / "hubs"

    @property
    def interval_dir(self) -> Path:
        return self.root / "intervals"

    def shard_dir(self, shard_set: ShardSetName = "forward") -> Path:
        return self.root / SHARD_SET_DIRS[shard_set]

    def subshard_path(self, i: int, j: int, shard_set: ShardSetName = "forward") -> Path:
        return self.shard_dir(shard_set) / f"ss_{i}_{j}.nxss"

    def hub_path(self, i: int, j: int) -> Path:
        return self.hub_dir / f"h_{i}_{j}.nxhb"

    def interval_path(self, j: int) -> Path:
        return self.interval_dir / f"iv_{j}.nxiv"

    # -- manifeste ---------------------------------------------------------

    def save_manifest(self, manifest: GraphManifest) -> None:
        """
        Écrit manifest.json (UTF-8, indenté, sans horodatage).

        Args:
            manifest: Manifeste validé
        """
        self.root.mkdir(parents=True, exist_ok=True)
        payload = json.dumps(manifest.model_dump(), indent=2, ensure_ascii=False) + "\n"
        with CountingFile(self.manifest_path, "wb", "metadata", self.counters) as f:
            f.write(payload.encode("utf-8"))
        self._manifest = manifest
        logger.debug(f"[STORAGE] Manifest saved to {self.manifest_path}")

    def load_manifest(self) -> GraphManifest:
        """
        Charge et valide manifest.json.

        Returns:
            Le manifeste du graphe

        Raises:
            StorageError: Si le manifeste est absent
            FormatError: Si le JSON est invalide ou viole le schéma
        """
        if not self.manifest_path.exists():
            raise StorageError(f"no manifest in {self.root}: run preprocess first")

        with CountingFile(self.manifest_path, "rb", "metadata", self.counters) as f:
            raw = f.read()
        try:
            manifest = GraphManifest.model_validate(json.loads(raw.decode("utf-8")))
        except (json.JSONDecodeError, UnicodeDecodeError) as e:
            raise FormatError(f"{self.manifest_path}: invalid JSON: {e}") from e
        except ValidationError as e:
            raise FormatError(f"{self.manifest_path}: invalid manifest: {e}") from e

        self._manifest = manifest
        return manifest

    @property
    def manifest(self) -> GraphManifest:
        """Manifeste, chargé au premier accès."""
        if self._manifest is None:
            return self.load_manifest()
        return self._manifest

    def ranges(self) -> list[IntervalRange]:
        return self.manifest.ranges()

    def require_set(self, shard_set: ShardSetName) -> None:
        """
        Vérifie qu'un ensemble de sous-shards est disponible.

        Raises:
            ConfigurationError: Si l'ensemble manque
        """
        if not self.manifest.has_set(shard_set):
            flag = "--symmetrize" if shard_set == "symmetric" else f"--{shard_set}"
            raise ConfigurationError(
                f"graph {self.root} has no {shard_set} shard set; re-run preprocess with {flag}"
            )

    # -- fichiers annexes --------------------------------------------------

    def read_out_degrees(self) -> np.ndarray:
        """Degrés sortants de l'ensemble direct, indexés par identifiant dense."""
        return read_degrees(self.degree_path, self.counters)["out_degree"].astype(np.uint64)

    def read_in_degrees(self) -> np.ndarray:
        return read_degrees(self.degree_path, self.counters)["in_degree"].astype(np.uint64)

    def read_reverse_map(self) -> np.ndarray:
        """Index bruts d'origine, indexés par identifiant dense."""
        rmap = read_reverse_map(self.rmap_path, self.counters)
        if rmap.size != self.manifest.n:
            raise FormatError(f"{self.rmap_path}: {rmap.size} entries for n={self.manifest.n}")
        return rmap

    def dense_id(self, raw: int) -> int:
        """
        Identifiant dense d'un index brut (recherche dans map.bin).

        Raises:
            VertexOutOfRangeError: Si l'index brut n'apparaît dans aucune arête
        """
        records = read_forward_map(self.map_path, self.counters)
        position = int(np.searchsorted(records["raw"], np.uint64(raw)))
        if position == records.size or int(records["raw"][position]) != raw:
            raise VertexOutOfRangeError(f"raw index {raw} is not a vertex of {self.root}")
        return int(records["id"][position])

    # -- sous-shards -------------------------------------------------------

    def subshard_edge_count(self, i: int, j: int, shard_set: ShardSetName = "forward") -> int:
        """Nombre d'arêtes de SS(i, j) selon le manifeste (aucune E/S)."""
        return self.manifest.shard_sets[shard_set].subshard_edges[i][j]

    def read_subshard(self, i: int, j: int, shard_set: ShardSetName = "forward") -> SubShardBlock:
        ranges = self.ranges()
        block = read_subshard(self.subshard_path(i, j, shard_set), self.counters)
        block.validate(src_range=ranges[i], dst_range=ranges[j])
        return block

    def read_subshard_bytes(self, i: int, j: int, shard_set: ShardSetName = "forward") -> bytes:
        return read_subshard_bytes(self.subshard_path(i, j, shard_set), self.counters)

    def check_shard_set(self, shard_set: ShardSetName = "forward") -> int:
        """
        Décode les P² sous-shards d'un ensemble, cellules vides comprises.

        Le nombre d'arêtes de chaque en-tête doit égaler celui du manifeste.

        Returns:
            Nombre total d'arêtes décodées

        Raises:
            FormatError: Si un fichier est corrompu ou contredit le manifeste
        """
        self.require_set(shard_set)
        expected = self.manifest.shard_sets[shard_set].subshard_edges
        partitions = self.manifest.partitions
        total = 0
        for i in range(partitions):
            for j in range(partitions):
                block = self.read_subshard(i, j, shard_set)
                if block.edge_count != expected[i][j]:
                    raise FormatError(
                        f"{self.subshard_path(i, j, shard_set)}: {block.edge_count} edges, "
                        f"manifest announces {expected[i][j]}"
                    )
                total += block.edge_count
        logger.debug(f"[STORE] {shard_set} set checked: {partitions**2} sub-shards, {total} edges")
        return total

    # -- hubs et intervalles -----------------------------------------------

    def prepare_work_dirs(self) -> None:
        self.hub_dir.mkdir(parents=True, exist_ok=True)
        self.interval_dir.mkdir(parents=True, exist_ok=True)

    def clear_hubs(self) -> None:
        """Supprime tous les hubs (début de phase ToHub)."""
        if self.hub_dir.exists():
            for path in self.hub_dir.glob("h_*.nxhb"):
                path.unlink()

    def clear_work_dirs(self) -> None:
        """Supprime hubs et intervalles hors mémoire d'un run précédent."""
        for directory in (self.hub_dir, self.interval_dir):
            if directory.exists():
                shutil.rmtree(directory)
