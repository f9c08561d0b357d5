"""Découpage des sous-shards en unités de travail et calcul des contributions."""

import math
from typing import NamedTuple

import numpy as np

from nxcore.core.config import settings
from nxcore.core.formats import SubShardBlock
from nxcore.core.graph_model import SubShardId
from nxcore.kernels.base import Kernel


class WorkUnit(NamedTuple):
    """Plage contiguë d'enregistrements [record_start, record_stop) d'un sous-shard."""

    subshard: SubShardId
    record_start: int
    record_stop: int


def target_unit_count(edge_count: int, threads: int) -> int:
    """Nombre d'unités visé: au plus un par thread, chacune d'au moins MIN_UNIT_EDGES arêtes."""
    return max(1, min(threads, math.ceil(edge_count / max(1, settings.MIN_UNIT_EDGES))))


def partition_work(block: SubShardBlock, subshard: SubShardId, target: int) -> list[WorkUnit]:
    """
    Découpe un sous-shard en unités disjointes équilibrées en nombre d'arêtes.

    Les coupures tombent sur la frontière d'enregistrement la plus proche de
    k * E / target: une destination n'est jamais partagée entre deux unités.

    Args:
        block: Sous-shard décodé
        subshard: Adresse du sous-shard
        target: Nombre d'unités souhaité

    Returns:
        Unités couvrant tous les enregistrements, dans l'ordre des destinations
    """
    records = block.dst_count
    if records == 0:
        return []
    if target <= 1 or records == 1:
        return [WorkUnit(subshard, 0, records)]

    offsets = block.offsets
    cuts = np.arange(1, target, dtype=np.float64) * (block.edge_count / target)
    left = np.searchsorted(offsets, cuts, side="right") - 1
    right = np.minimum(left + 1, records)
    closer_right = (offsets[right] - cuts) < (cuts - offsets[left])
    boundaries = np.where(closer_right, right, left)
    boundaries = np.unique(boundaries[(boundaries > 0) & (boundaries < records)])

    edges = [0, *boundaries.tolist(), records]
    return [WorkUnit(subshard, start, stop) for start, stop in zip(edges, edges[1:], strict=False)]


def unit_contributions(
    kernel: Kernel,
    block: SubShardBlock,
    unit: WorkUnit,
    src_values: np.ndarray,
    src_first: int,
    out_degree: np.ndarray | None,
) -> tuple[np.ndarray, np.ndarray]:
    """
    Contributions combinées par destination pour une unité.

    Args:
        kernel: Noyau
        block: Sous-shard décodé
        unit: Unité à traiter
        src_values: Valeurs précédentes de l'intervalle source
        src_first: Premier sommet de l'intervalle source
        out_degree: Degrés sortants globaux (si le noyau en a besoin)

    Returns:
        (dst_ids, valeurs), destinations croissantes, contributions neutres exclues
    """
    lo = int(block.offsets[unit.record_start])
    hi = int(block.offsets[unit.record_stop])
    src_ids = block.src_ids[lo:hi]
    degrees = out_degree[src_ids] if out_degree is not None else None
    per_edge = kernel.gather(src_values[src_ids.astype(np.int64) - src_first], degrees)

    segments = block.offsets[unit.record_start : unit.record_stop] - lo
    combined = kernel.combine.reduceat(per_edge, segments)
    dst_ids = block.dst_ids[unit.record_start : unit.record_stop]

    keep = combined != kernel.neutral
    return dst_ids[keep], combined[keep]
