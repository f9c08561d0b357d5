"""Tests du registre des noyaux."""

from pathlib import Path

import pytest
from pydantic import ValidationError

from nxcore.core.errors import ConfigurationError
from nxcore.core.models import GraphManifest, IntervalSpec, ShardSetInfo
from nxcore.core.registry_service import (
    DEFAULT_REGISTRY_PATH,
    get_kernel_registry,
    load_kernel_registry,
    reset_kernel_registry,
)


def _manifest(sets: tuple[str, ...] = ("forward",), symmetrized: bool = False) -> GraphManifest:
    return GraphManifest(
        n=2,
        m=1,
        partitions=1,
        symmetrized=symmetrized,
        intervals=[IntervalSpec(index=0, first=0, count=2)],
        shard_sets={
            name: ShardSetInfo(name=name, directory=name, edge_count=1)  # type: ignore[arg-type]
            for name in sets
        },
    )


def test_default_registry_declares_four_kernels():
    """Test que le registre par défaut déclare les quatre noyaux."""
    registry = load_kernel_registry(DEFAULT_REGISTRY_PATH, local_path=None)

    assert registry.kernel_ids() == ["pagerank", "bfs", "wcc", "scc"]
    assert registry.get_kernel("pagerank").attr_width == 8
    assert registry.get_kernel("bfs").attr_width == 4
    assert registry.get_kernel("bfs").defaults.root == 0
    assert registry.get_kernel("pagerank").defaults.damping == 0.85
    assert registry.get_kernel("unknown") is None


def test_local_override_is_deep_merged(tmp_path: Path):
    """Test qu'une surcharge locale remplace la liste des noyaux."""
    local = tmp_path / "kernel_registry.local.yaml"
    local.write_text(
        "kernels:\n"
        "  - id: pagerank\n"
        "    description: override\n"
        "    attr_width: 8\n"
        "    defaults:\n"
        "      damping: 0.5\n",
        encoding="utf-8",
    )

    registry = load_kernel_registry(DEFAULT_REGISTRY_PATH, local_path=local)

    assert registry.kernel_ids() == ["pagerank"]
    assert registry.get_kernel("pagerank").defaults.damping == 0.5


def test_invalid_registry_is_rejected(tmp_path: Path):
    """Test qu'une largeur d'attribut nulle viole le schéma."""
    bad = tmp_path / "bad.yaml"
    bad.write_text(
        "kernels:\n  - id: x\n    description: y\n    attr_width: 0\n", encoding="utf-8"
    )

    with pytest.raises(ValidationError):
        load_kernel_registry(bad, local_path=None)


def test_missing_default_registry(tmp_path: Path):
    """Test qu'un fichier par défaut absent lève FileNotFoundError."""
    with pytest.raises(FileNotFoundError):
        load_kernel_registry(tmp_path / "absent.yaml")


def test_global_registry_is_cached_until_reset():
    """Test que le registre global est chargé une fois puis réinitialisable."""
    first = get_kernel_registry()

    assert get_kernel_registry() is first
    reset_kernel_registry()
    assert get_kernel_registry() is not first


def test_scc_requires_transpose():
    """Test que scc exige l'ensemble transposé."""
    registry = load_kernel_registry(DEFAULT_REGISTRY_PATH, local_path=None)

    with pytest.raises(ConfigurationError, match="transpose"):
        registry.check_requirements("scc", _manifest())
    registry.check_requirements("scc", _manifest(("forward", "transpose")))


def test_wcc_accepts_symmetrized_or_transpose():
    """Test que wcc accepte un graphe symétrisé ou doté d'un ensemble transposé."""
    registry = load_kernel_registry(DEFAULT_REGISTRY_PATH, local_path=None)

    with pytest.raises(ConfigurationError, match="symmetrized"):
        registry.check_requirements("wcc", _manifest())
    registry.check_requirements("wcc", _manifest(symmetrized=True))
    registry.check_requirements("wcc", _manifest(("forward", "transpose")))


def test_unknown_kernel_requirements():
    """Test qu'un noyau inconnu lève ConfigurationError."""
    registry = load_kernel_registry(DEFAULT_REGISTRY_PATH, local_path=None)

    with pytest.raises(ConfigurationError, match="unknown kernel"):
        registry.check_requirements("triangles", _manifest())
