"""
Contrat des noyaux de calcul sous forme gather / combine / apply.

Un noyau est un transformateur de valeurs pur: tout l'état vit dans le moteur,
et les méthodes peuvent être appelées depuis plusieurs threads à la fois.

Pour chaque arête src -> dst d'un sous-shard:
    contribution = gather(prev[src], out_degree[src])
Par destination, les contributions d'un sous-shard sont réduites par `combine`,
puis appliquées à la valeur courante: cur[dst] = combine(cur[dst], c).
Une contribution égale à `neutral` n'a aucun effet et n'est jamais propagée.
"""

from abc import ABC, abstractmethod
from typing import Any

import numpy as np
from pydantic import BaseModel, Field

from nxcore.core.graph_model import IntervalRange
from nxcore.core.models import ShardSetName


class KernelOutput(BaseModel):
    """Résumé d'un run (rôle de la fonction de sortie d'un algorithme)."""

    kernel: str = Field(..., description="Identifiant du noyau")
    summary: dict[str, Any] = Field(default_factory=dict, description="Valeurs agrégées")

    def summary_line(self) -> str:
        return " ".join(f"{key}={value}" for key, value in self.summary.items())


class Kernel(ABC):
    """
    Noyau exécutable par les trois stratégies de mise à jour.

    Attributes:
        name: Identifiant du noyau
        dtype: Type des attributs de sommet (B_a = dtype.itemsize)
        neutral: Contribution neutre pour `combine`
        combine: ufunc associative et commutative (np.add, np.minimum)
        copy_forward: La valeur courante part de la valeur précédente (sinon elle
            repart de `iteration_init_value` à chaque itération)
        needs_out_degree: gather utilise le degré sortant de la source
        shard_set: Ensemble de sous-shards parcouru
        always_changed: Chaque sommet compte comme modifié (mode à itérations fixes)
    """

    name: str = "kernel"
    dtype: np.dtype = np.dtype(np.float64)
    neutral: Any = 0
    combine: np.ufunc = np.add
    copy_forward: bool = True
    needs_out_degree: bool = False
    shard_set: ShardSetName = "forward"
    always_changed: bool = False

    @property
    def attr_width(self) -> int:
        return int(self.dtype.itemsize)

    @abstractmethod
    def initial_values(self, interval: IntervalRange) -> np.ndarray:
        """Valeurs initiales des sommets d'un intervalle."""

    def initially_active(self, interval: IntervalRange) -> bool:
        return True

    def iteration_init_value(self) -> Any:
        """Valeur de départ des destinations pour un noyau sans recopie."""
        return self.neutral

    def seed(self, prev: np.ndarray) -> np.ndarray:
        """Valeurs courantes d'un intervalle au début d'une itération."""
        if self.copy_forward:
            return prev.copy()
        return np.full(prev.shape, self.iteration_init_value(), dtype=self.dtype)

    @abstractmethod
    def gather(self, src_values: np.ndarray, src_out_degree: np.ndarray | None) -> np.ndarray:
        """Contribution de chaque arête; `neutral` là où la source ne contribue pas."""

    def apply(self, current: np.ndarray, local_ids: np.ndarray, values: np.ndarray) -> None:
        """Combine des contributions (destinations distinctes) dans `current`."""
        current[local_ids] = self.combine(current[local_ids], values)

    def changed(self, old: np.ndarray, new: np.ndarray) -> np.ndarray:
        """Masque des sommets modifiés pendant l'itération."""
        return old != new

    @abstractmethod
    def output(self, values: np.ndarray) -> KernelOutput:
        """Agrège les valeurs finales de tous les intervalles."""
