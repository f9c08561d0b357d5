"""Identifiants, partitionnement en intervalles et adressage des sous-shards.

Toutes les fonctions sont pures et sûres en concurrence.
"""

from typing import NamedTuple

import numpy as np

from nxcore.core.errors import InvalidPartitionError, VertexOutOfRangeError

# Les identifiants sont 0-based et tiennent sur 32 bits
MAX_VERTEX_ID = 2**32 - 1


class Edge(NamedTuple):
    """Arête orientée src -> dst (boucles autorisées)."""

    src: int
    dst: int


class IntervalRange(NamedTuple):
    """Plage contiguë de sommets [first, first + count)."""

    index: int
    first: int
    count: int

    @property
    def stop(self) -> int:
        return self.first + self.count

    def __contains__(self, vertex: object) -> bool:
        return isinstance(vertex, int) and self.first <= vertex < self.stop


class SubShardId(NamedTuple):
    """Cellule (intervalle source, intervalle destination) de la grille P x P."""

    src_interval: int
    dst_interval: int


def partition_vertices(n: int, partitions: int) -> list[IntervalRange]:
    """
    Découpe [0, n) en P intervalles de tailles égales à un sommet près.

    Les (n mod P) premiers intervalles reçoivent ceil(n/P) sommets, les autres
    floor(n/P), ce qui reproduit le découpage {2, 2, 2, 1} pour n=7, P=4.

    Args:
        n: Nombre de sommets (>= 1)
        partitions: Nombre d'intervalles P

    Returns:
        Liste triée de P IntervalRange disjoints couvrant [0, n)

    Raises:
        InvalidPartitionError: Si P = 0, P > n ou n < 1
    """
    if n < 1:
        raise InvalidPartitionError(f"invalid-partition: graph has no vertices (n={n})")
    if partitions < 1 or partitions > n:
        raise InvalidPartitionError(
            f"invalid-partition: P={partitions} must satisfy 1 <= P <= n={n}"
        )

    base, extra = divmod(n, partitions)
    ranges = []
    first = 0
    for index in range(partitions):
        count = base + 1 if index < extra else base
        ranges.append(IntervalRange(index=index, first=first, count=count))
        first += count
    return ranges


def locate_interval(vertex: int, ranges: list[IntervalRange]) -> int:
    """
    Retourne l'ordinal de l'intervalle contenant `vertex`, en temps constant.

    Args:
        vertex: Identifiant dense du sommet
        ranges: Résultat de partition_vertices

    Returns:
        Ordinal dans [0, P)

    Raises:
        VertexOutOfRangeError: Si vertex >= n ou vertex < 0
    """
    n = ranges[-1].stop
    if vertex < 0 or vertex >= n:
        raise VertexOutOfRangeError(f"vertex {vertex} outside [0, {n})")

    partitions = len(ranges)
    base, extra = divmod(n, partitions)
    # Les `extra` premiers intervalles font base + 1 sommets
    boundary = extra * (base + 1)
    if vertex < boundary:
        return vertex // (base + 1)
    return extra + (vertex - boundary) // base


def subshard_of(edge: Edge, ranges: list[IntervalRange]) -> SubShardId:
    """
    Adresse le sous-shard d'une arête.

    Raises:
        VertexOutOfRangeError: Si une extrémité est hors de [0, n)
    """
    return SubShardId(
        src_interval=locate_interval(edge.src, ranges),
        dst_interval=locate_interval(edge.dst, ranges),
    )


def locate_intervals(vertices: np.ndarray, ranges: list[IntervalRange]) -> np.ndarray:
    """
    Version vectorisée de locate_interval pour un tableau d'identifiants.

    Returns:
        Tableau int64 des ordinaux d'intervalle

    Raises:
        VertexOutOfRangeError: Si un identifiant est hors de [0, n)
    """
    n = ranges[-1].stop
    ids = np.asarray(vertices, dtype=np.int64)
    if ids.size and (int(ids.min()) < 0 or int(ids.max()) >= n):
        raise VertexOutOfRangeError(f"vertex ids outside [0, {n})")

    base, extra = divmod(n, len(ranges))
    boundary = extra * (base + 1)
    head = ids // (base + 1)
    if base == 0:
        return head
    tail = extra + (ids - boundary) // base
    return np.where(ids < boundary, head, tail)
