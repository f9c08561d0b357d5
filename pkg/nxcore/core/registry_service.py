"""Service de gestion du registre des noyaux de calcul.

Ce module fournit des modèles Pydantic pour valider la déclaration des
noyaux (largeur d'attribut, prérequis, paramètres par défaut), ainsi qu'une
fonction de chargement qui supporte la surcharge via un fichier local.
"""

import copy
import threading
from pathlib import Path
from typing import Any, Literal

import yaml
from pydantic import BaseModel, Field, ValidationError

from nxcore.core.config import settings
from nxcore.core.errors import ConfigurationError
from nxcore.core.logger import setup_logger
from nxcore.core.models import GraphManifest

logger = setup_logger(__name__)

DEFAULT_REGISTRY_PATH = Path(__file__).parent.parent / "kernel_registry.default.yaml"
LOCAL_REGISTRY_NAME = "kernel_registry.local.yaml"

Requirement = Literal["transpose", "symmetrized"]


class KernelDefaults(BaseModel):
    """Paramètres par défaut d'un noyau (tous optionnels)."""

    damping: float | None = Field(None, gt=0, lt=1, description="Facteur d'amortissement")
    epsilon: float | None = Field(None, description="Seuil de changement")
    max_iters: int | None = Field(None, ge=1, description="Nombre maximal d'itérations")
    root: int | None = Field(None, ge=0, description="Racine du parcours (index brut)")


class KernelConfig(BaseModel):
    """Déclaration d'un noyau.

    Attributes:
        id: Identifiant du noyau (ex: "pagerank")
        description: Description de la sémantique du noyau
        attr_width: B_a, octets par attribut
        requires: Ensembles de sous-shards requis en plus de l'ensemble direct
        defaults: Paramètres par défaut
    """

    id: str = Field(..., description="Identifiant unique du noyau")
    description: str = Field(..., description="Description du noyau")
    attr_width: int = Field(..., gt=0, description="Octets par attribut de sommet")
    requires: list[Requirement] = Field(default_factory=list, description="Prérequis")
    defaults: KernelDefaults = Field(default_factory=KernelDefaults)


class KernelRegistry(BaseModel):
    """Registre complet des noyaux."""

    kernels: list[KernelConfig] = Field(..., description="Noyaux disponibles")

    def get_kernel(self, kernel_id: str) -> KernelConfig | None:
        """Récupère un noyau par son identifiant, ou None."""
        for kernel in self.kernels:
            if kernel.id == kernel_id:
                return kernel
        return None

    def kernel_ids(self) -> list[str]:
        return [kernel.id for kernel in self.kernels]

    def check_requirements(self, kernel_id: str, manifest: GraphManifest) -> None:
        """
        Vérifie que le graphe fournit les ensembles requis par un noyau.

        Un noyau qui demande "symmetrized" accepte aussi un graphe disposant
        d'un ensemble transposé (l'ensemble symétrique en est dérivé).

        Raises:
            ConfigurationError: Si le noyau est inconnu ou si un ensemble manque
        """
        kernel = self.get_kernel(kernel_id)
        if kernel is None:
            raise ConfigurationError(f"unknown kernel '{kernel_id}'")
        for requirement in kernel.requires:
            if requirement == "transpose" and not manifest.has_set("transpose"):
                raise ConfigurationError(
                    f"kernel '{kernel_id}' needs the transpose shard set "
                    "(preprocess with --transpose)"
                )
            if requirement == "symmetrized" and not (
                manifest.symmetrized
                or manifest.has_set("symmetric")
                or manifest.has_set("transpose")
            ):
                raise ConfigurationError(
                    f"kernel '{kernel_id}' needs symmetrized shards "
                    "(preprocess with --symmetrize or --transpose)"
                )


def _deep_merge(base: dict[str, Any], override: dict[str, Any]) -> dict[str, Any]:
    """Fusionne récursivement deux dictionnaires.

    Les valeurs de `override` écrasent celles de `base`; les listes sont
    remplacées en entier.
    """
    result = copy.deepcopy(base)
    for key, value in override.items():
        if key in result and isinstance(result[key], dict) and isinstance(value, dict):
            result[key] = _deep_merge(result[key], value)
        else:
            result[key] = copy.deepcopy(value)
    return result


def _read_yaml(path: Path) -> dict[str, Any]:
    with path.open("r", encoding="utf-8") as f:
        data = yaml.safe_load(f)
    if not isinstance(data, dict):
        raise ValueError(f"{path} does not contain a YAML mapping")
    return data


def _local_registry_path() -> Path | None:
    if settings.KERNEL_REGISTRY_LOCAL is not None:
        return settings.KERNEL_REGISTRY_LOCAL
    candidate = Path.cwd() / LOCAL_REGISTRY_NAME
    return candidate if candidate.exists() else None


def load_kernel_registry(
    default_path: Path = DEFAULT_REGISTRY_PATH,
    local_path: Path | None = None,
) -> KernelRegistry:
    """Charge et valide le registre des noyaux.

    1. Charge kernel_registry.default.yaml (obligatoire)
    2. Charge la surcharge locale si elle existe (NXCORE_KERNEL_REGISTRY_LOCAL,
       sinon kernel_registry.local.yaml dans le répertoire courant)
    3. Fusionne la surcharge par-dessus le défaut (deep merge)
    4. Valide le résultat avec Pydantic

    Args:
        default_path: Fichier par défaut
        local_path: Surcharge explicite; sinon résolue depuis la configuration

    Returns:
        Registre validé

    Raises:
        FileNotFoundError: Si le fichier par défaut n'existe pas
        ValidationError: Si la configuration ne respecte pas le schéma
        yaml.YAMLError: Si un fichier YAML est mal formé
    """
    if not default_path.exists():
        raise FileNotFoundError(f"default kernel registry not found: {default_path}")

    data = _read_yaml(default_path)

    local_path = local_path or _local_registry_path()
    if local_path is not None and local_path.exists():
        logger.info(f"[REGISTRY] Merging local override {local_path}")
        data = _deep_merge(data, _read_yaml(local_path))

    try:
        registry = KernelRegistry(**data)
    except ValidationError as e:
        logger.error(f"[REGISTRY] Invalid kernel registry: {e}")
        raise

    logger.debug(f"[REGISTRY] {len(registry.kernels)} kernels loaded")
    return registry


_registry_instance: KernelRegistry | None = None
_registry_lock = threading.Lock()


def get_kernel_registry() -> KernelRegistry:
    """Récupère le registre global (chargé au premier appel)."""
    global _registry_instance

    if _registry_instance is None:
        with _registry_lock:
            if _registry_instance is None:
                _registry_instance = load_kernel_registry()
    return _registry_instance


def reset_kernel_registry() -> None:
    """Réinitialise le registre global (tests, rechargement)."""
    global _registry_instance
    _registry_instance = None
