"""Data models for nxcore."""

from typing import Literal

from pydantic import BaseModel, Field, model_validator

from nxcore.core.graph_model import IntervalRange

ShardSetName = Literal["forward", "transpose", "symmetric"]


class IntervalSpec(BaseModel):
    """Bornes d'un intervalle telles qu'enregistrées dans le manifeste."""

    index: int = Field(..., ge=0, description="Ordinal de l'intervalle dans [0, P)")
    first: int = Field(..., ge=0, description="Premier identifiant dense de l'intervalle")
    count: int = Field(..., ge=1, description="Nombre de sommets de l'intervalle")

    def to_range(self) -> IntervalRange:
        return IntervalRange(index=self.index, first=self.first, count=self.count)


class ShardSetInfo(BaseModel):
    """Un ensemble DSSS complet (P x P sous-shards) stocké sous un répertoire."""

    name: ShardSetName = Field(..., description="forward, transpose ou symmetric")
    directory: str = Field(..., description="Répertoire relatif contenant ss_<i>_<j>.nxss")
    edge_count: int = Field(..., ge=0, description="Nombre total d'arêtes de l'ensemble")
    subshard_edges: list[list[int]] = Field(
        default_factory=list,
        description="Nombre d'arêtes par sous-shard, indexé [i][j]",
    )


class GraphManifest(BaseModel):
    """Manifeste JSON d'un graphe prétraité (manifest.json)."""

    version: int = Field(default=1, description="Version du format de répertoire")
    vertex_id_base: int = Field(
        default=0,
        description="Convention de numérotation des identifiants denses (0-based)",
    )
    n: int = Field(..., ge=1, description="Nombre de sommets (sans sommets isolés)")
    m: int = Field(..., ge=1, description="Nombre d'arêtes stockées")
    partitions: int = Field(..., ge=1, description="Nombre d'intervalles P")
    vertex_id_width: int = Field(default=4, description="B_v, octets par identifiant")
    degree_width: int = Field(default=8, description="Octets par compteur de degré")
    symmetrized: bool = Field(
        default=False,
        description="Chaque arête d'entrée a aussi été stockée en sens inverse",
    )
    intervals: list[IntervalSpec] = Field(..., description="Bornes des P intervalles")
    files: dict[str, str] = Field(
        default_factory=dict,
        description="Fichiers annexes relatifs (mapping, reverse_mapping, degrees)",
    )
    shard_sets: dict[str, ShardSetInfo] = Field(
        default_factory=dict,
        description="Ensembles de sous-shards disponibles, par nom",
    )

    model_config = {
        "json_schema_extra": {
            "examples": [
                {
                    "version": 1,
                    "vertex_id_base": 0,
                    "n": 7,
                    "m": 20,
                    "partitions": 4,
                    "intervals": [
                        {"index": 0, "first": 0, "count": 2},
                        {"index": 1, "first": 2, "count": 2},
                        {"index": 2, "first": 4, "count": 2},
                        {"index": 3, "first": 6, "count": 1},
                    ],
                }
            ]
        }
    }

    @model_validator(mode="after")
    def _check_intervals(self) -> "GraphManifest":
        if len(self.intervals) != self.partitions:
            raise ValueError(
                f"manifest lists {len(self.intervals)} intervals for P={self.partitions}"
            )
        expected_first = 0
        for position, spec in enumerate(self.intervals):
            if spec.index != position or spec.first != expected_first:
                raise ValueError(f"interval {position} is not contiguous with its predecessor")
            expected_first += spec.count
        if expected_first != self.n:
            raise ValueError(f"intervals cover {expected_first} vertices, manifest says n={self.n}")
        return self

    def ranges(self) -> list[IntervalRange]:
        """Retourne les intervalles sous forme d'IntervalRange."""
        return [spec.to_range() for spec in self.intervals]

    def has_set(self, name: str) -> bool:
        return name in self.shard_sets

    @property
    def max_interval_size(self) -> int:
        return max(spec.count for spec in self.intervals)


class CostParams(BaseModel):
    """Paramètres du modèle de coût d'entrées/sorties (symboles de la table des coûts)."""

    n: float = Field(..., gt=0, description="Nombre de sommets")
    m: float = Field(..., gt=0, description="Nombre d'arêtes")
    b_a: float = Field(..., gt=0, description="Octets par attribut de sommet")
    b_v: float = Field(default=4, gt=0, description="Octets par identifiant de sommet")
    b_e: float = Field(..., gt=0, description="Octets par arête")
    b_m: float = Field(default=1.0, gt=0, description="Budget mémoire en octets")
    d: float = Field(default=15.0, ge=1, description="Degré entrant moyen des destinations")
    partitions: int = Field(default=16, ge=1, description="Nombre d'intervalles P")
    resident: int | None = Field(
        default=None,
        ge=0,
        description="Q, intervalles résidents; None = dérivé de b_m",
    )

    @model_validator(mode="after")
    def _check_resident(self) -> "CostParams":
        if self.resident is not None and self.resident > self.partitions:
            raise ValueError(f"Q={self.resident} exceeds P={self.partitions}")
        return self

    @property
    def vertex_bytes(self) -> float:
        """n * B_a, la taille de tous les intervalles."""
        return self.n * self.b_a
