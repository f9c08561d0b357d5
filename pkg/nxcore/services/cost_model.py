"""
Modèle de coût d'entrées/sorties des stratégies de mise à jour.

Formules fermées (octets par itération) des stratégies SPU, DPU, MPU et
TurboGraph-like, courbe du rapport MPU / TurboGraph-like, et
rapprochement entre une prédiction et les compteurs mesurés d'un run.

Notations: n sommets, m arêtes, B_a octets par attribut, B_v par
identifiant, B_e par arête, B_M budget mémoire, d degré entrant moyen des
destinations des sous-shards à hub, P intervalles dont Q résidents.
"""

import csv
from typing import NamedTuple, TextIO

from pydantic import BaseModel, Field

from nxcore.core.errors import InfeasibleBudgetError
from nxcore.core.formats import HUB_HEADER, INTERVAL_HEADER, read_subshard_header
from nxcore.core.io_counters import CATEGORIES, CategoryTally, IoCounters, IoSnapshot
from nxcore.core.logger import setup_logger
from nxcore.core.models import CostParams, GraphManifest, ShardSetName
from nxcore.core.storage import GraphStore
from nxcore.engine.strategy import StrategyPlan, cache_charge
from nxcore.utils.size_parser import SizeParsingError, parse_size

logger = setup_logger(__name__)


class IoBytes(NamedTuple):
    """Octets lus et écrits par itération."""

    read: float
    write: float

    @property
    def total(self) -> float:
        return self.read + self.write


# ---------------------------------------------------------------------------
# Formules
# ---------------------------------------------------------------------------


def _hub_bytes(p: CostParams, fraction: float) -> float:
    return fraction * fraction * p.m * (p.b_a + p.b_v) / p.d


def io_spu(p: CostParams) -> IoBytes:
    """
    SPU: tous les intervalles en mémoire, le reste du budget cache les sous-shards.

    Raises:
        InfeasibleBudgetError: Si B_M < 2n·B_a
    """
    pingpong = 2 * p.vertex_bytes
    if p.b_m < pingpong:
        raise InfeasibleBudgetError(
            f"infeasible-budget: SPU needs {pingpong:.6g} bytes, budget is {p.b_m:.6g}"
        )
    return IoBytes(read=max(0.0, p.m * p.b_e + pingpong - p.b_m), write=0.0)


def io_dpu(p: CostParams) -> IoBytes:
    """DPU: indépendant de B_M et de P."""
    return io_mpu_fraction(p, 1.0)


def io_mpu_fraction(p: CostParams, fraction: float) -> IoBytes:
    """MPU pour une fraction f = (P - Q) / P d'intervalles hors mémoire."""
    hub = _hub_bytes(p, fraction)
    return IoBytes(
        read=p.m * p.b_e + hub + fraction * p.vertex_bytes,
        write=hub + fraction * p.vertex_bytes,
    )


def resident_intervals(p: CostParams) -> int:
    """Q explicite, sinon floor(B_M / (2n·B_a) · P) borné à P."""
    if p.resident is not None:
        return p.resident
    return min(p.partitions, int(p.b_m * p.partitions // (2 * p.vertex_bytes)))


def io_mpu(p: CostParams) -> IoBytes:
    """MPU avec un nombre entier Q d'intervalles résidents."""
    resident = resident_intervals(p)
    return io_mpu_fraction(p, (p.partitions - resident) / p.partitions)


def continuous_fraction(p: CostParams) -> float:
    """f = 1 - B_M / (2n·B_a), borné à [0, 1]."""
    return min(1.0, max(0.0, 1.0 - p.b_m / (2 * p.vertex_bytes)))


def io_mpu_continuous(p: CostParams) -> IoBytes:
    """MPU avec Q continu (ligne MPU de la table des coûts)."""
    return io_mpu_fraction(p, continuous_fraction(p))


def io_turbograph_like(p: CostParams) -> IoBytes:
    """TurboGraph-like avec Q = 0 et P = 2n·B_a / B_M (son optimum)."""
    return IoBytes(
        read=p.m * p.b_e + 2 * p.vertex_bytes**2 / p.b_m + p.vertex_bytes,
        write=p.vertex_bytes,
    )


def total_mpu(p: CostParams) -> float:
    """B_MPU = m·B_e + 2m·f²·(B_a + B_v)/d + 2f·n·B_a, f continu."""
    return io_mpu_continuous(p).total


def total_turbograph_like(p: CostParams) -> float:
    """Trafic total TurboGraph-like: m·B_e + 2(n·B_a)²/B_M + n·B_a."""
    return io_turbograph_like(p).read


def table_rows(p: CostParams) -> list[tuple[str, IoBytes | None]]:
    """
    Les lignes de la table des coûts au budget p.b_m.

    SPU vaut None quand le budget ne contient pas les intervalles ping-pong.
    """
    try:
        spu: IoBytes | None = io_spu(p)
    except InfeasibleBudgetError:
        spu = None
    return [
        ("TurboGraph-like", io_turbograph_like(p)),
        ("SPU", spu),
        ("DPU", io_dpu(p)),
        (f"MPU(Q={resident_intervals(p)})", io_mpu(p)),
        ("MPU(continuous)", io_mpu_continuous(p)),
    ]


# ---------------------------------------------------------------------------
# Courbe du rapport MPU / TurboGraph-like
# ---------------------------------------------------------------------------


class RatioPoint(NamedTuple):
    b_m: float
    b_mpu: float
    b_tg: float
    ratio: float


def parse_budget_grid(text: str) -> list[float]:
    """
    Grille "LO:HI:STEPS": les points LO + (HI - LO)·k/STEPS pour k = 1..STEPS.

    LO et HI sont des nombres (notation scientifique acceptée) ou des tailles
    avec suffixe (64M, 2G).

    Raises:
        SizeParsingError: Grille mal formée
    """
    parts = text.split(":")
    if len(parts) != 3:
        raise SizeParsingError(f"invalid budget grid '{text}' (expected LO:HI:STEPS)")
    low, high = (parse_budget(part) for part in parts[:2])
    try:
        steps = int(parts[2])
    except ValueError as e:
        raise SizeParsingError(f"invalid step count '{parts[2]}'") from e
    if steps < 1 or low < 0 or high <= low:
        raise SizeParsingError(f"invalid budget grid '{text}' (need 0 <= LO < HI, STEPS >= 1)")
    return [low + (high - low) * k / steps for k in range(1, steps + 1)]


def parse_budget(text: str) -> float:
    """Budget en octets: nombre (1e9, 30e9) ou taille avec suffixe (512M)."""
    try:
        return float(text)
    except ValueError:
        return float(parse_size(text))


def ratio_curve(p: CostParams, budgets: list[float]) -> list[RatioPoint]:
    """Rapport du trafic total MPU / TurboGraph-like pour chaque budget de la grille."""
    points = []
    for budget in budgets:
        at = p.model_copy(update={"b_m": budget, "resident": None})
        b_mpu, b_tg = total_mpu(at), total_turbograph_like(at)
        points.append(RatioPoint(b_m=budget, b_mpu=b_mpu, b_tg=b_tg, ratio=b_mpu / b_tg))
    return points


def write_ratio_csv(points: list[RatioPoint], stream: TextIO) -> None:
    """CSV "b_m,b_mpu,b_tg,ratio", une ligne par point, notation décimale."""
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(RatioPoint._fields)
    for point in points:
        writer.writerow(
            [
                f"{point.b_m:.1f}",
                f"{point.b_mpu:.1f}",
                f"{point.b_tg:.1f}",
                f"{point.ratio:.6f}",
            ]
        )


# ---------------------------------------------------------------------------
# Prédiction d'un run concret et rapprochement avec les compteurs
# ---------------------------------------------------------------------------


def subshard_dst_counts(
    store: GraphStore, shard_set: ShardSetName = "forward"
) -> dict[tuple[int, int], int]:
    """
    Nombre de destinations de chaque sous-shard non vide, lu dans les en-têtes.

    Les lectures passent par des compteurs séparés.
    """
    manifest = store.manifest
    counters = IoCounters()
    counts: dict[tuple[int, int], int] = {}
    for i in range(manifest.partitions):
        for j in range(manifest.partitions):
            if store.subshard_edge_count(i, j, shard_set) == 0:
                continue
            _, dst_count = read_subshard_header(store.subshard_path(i, j, shard_set), counters)
            counts[(i, j)] = dst_count
    return counts


def measure_d(store: GraphStore, resident: int, shard_set: ShardSetName = "forward") -> float:
    """
    Degré entrant moyen des destinations des sous-shards à hub (i, j >= Q).

    Sans sous-shard à hub (Q = P), la moyenne porte sur tous les sous-shards.
    """
    counts = subshard_dst_counts(store, shard_set)
    hubbed = {cell: c for cell, c in counts.items() if cell[0] >= resident and cell[1] >= resident}
    cells = hubbed or counts
    edges = sum(store.subshard_edge_count(i, j, shard_set) for i, j in cells)
    destinations = sum(cells.values())
    return edges / destinations if destinations else 1.0


class IoPrediction(BaseModel):
    """Octets attendus pour une itération où tous les intervalles sont actifs."""

    by_category: dict[str, CategoryTally] = Field(
        default_factory=lambda: {name: CategoryTally() for name in CATEGORIES}
    )
    overhead: dict[str, int] = Field(
        default_factory=lambda: {name: 0 for name in CATEGORIES},
        description="Octets d'en-têtes inclus dans la prédiction, par catégorie",
    )

    @property
    def bytes_read(self) -> int:
        return sum(tally.bytes_read for tally in self.by_category.values())

    @property
    def bytes_written(self) -> int:
        return sum(tally.bytes_written for tally in self.by_category.values())


def predict_run_io(
    store: GraphStore,
    plan: StrategyPlan,
    attr_width: int,
    shard_set: ShardSetName = "forward",
    reread_columns: bool = True,
) -> IoPrediction:
    """
    Prédit le trafic d'une itération à activité complète pour un plan concret.

    Args:
        store: Graphe prétraité
        plan: Stratégie (Q, cache SPU)
        attr_width: B_a du noyau
        shard_set: Ensemble de sous-shards parcouru
        reread_columns: FromHub relit l'intervalle précédent (amorce ou comparaison)

    Returns:
        Octets lus et écrits par catégorie, en-têtes compris
    """
    manifest: GraphManifest = store.manifest
    ranges = manifest.ranges()
    partitions, resident = plan.partitions, plan.resident
    prediction = IoPrediction()

    cached_bytes, cache_open = 0, plan.kind == "SPU" and plan.cache_budget > 0
    subshard = prediction.by_category["subshard"]
    for i in range(partitions):
        for j in range(partitions):
            edges = store.subshard_edge_count(i, j, shard_set)
            if edges == 0:
                continue
            charge = cache_charge(edges)
            if cache_open and cached_bytes + charge <= plan.cache_budget:
                cached_bytes += charge
                continue
            cache_open = False
            subshard.bytes_read += store.subshard_path(i, j, shard_set).stat().st_size

    dst_counts = subshard_dst_counts(store, shard_set)
    hub = prediction.by_category["hub"]
    record = manifest.vertex_id_width + attr_width
    for i in range(resident, partitions):
        for j in range(resident, partitions):
            size = HUB_HEADER.size + dst_counts.get((i, j), 0) * record
            hub.bytes_written += size
            hub.bytes_read += size
            prediction.overhead["hub"] += 2 * HUB_HEADER.size

    interval = prediction.by_category["interval"]
    for r in ranges[resident:]:
        size = INTERVAL_HEADER.size + r.count * attr_width
        interval.bytes_read += size * (2 if reread_columns else 1)
        interval.bytes_written += size
        prediction.overhead["interval"] += INTERVAL_HEADER.size * (3 if reread_columns else 2)

    logger.debug(
        f"[COST_MODEL] {plan.label}: predicted read={prediction.bytes_read} "
        f"write={prediction.bytes_written}"
    )
    return prediction


class ReconcileRow(BaseModel):
    category: str
    measured_read: int
    predicted_read: int
    measured_write: int
    predicted_write: int
    ok: bool


class ReconcileReport(BaseModel):
    """Comparaison mesure / prédiction par catégorie."""

    rows: list[ReconcileRow] = Field(default_factory=list)
    ok: bool = True

    def lines(self) -> list[str]:
        return [
            f"{row.category}: read {row.measured_read}/{row.predicted_read} "
            f"write {row.measured_write}/{row.predicted_write} "
            f"{'ok' if row.ok else 'EXCEEDED'}"
            for row in self.rows
        ]


def _within(seen: int, expected: int, headers: int, tolerance: float) -> bool:
    return seen <= expected + max(tolerance * expected, headers)


def reconcile(
    measured: IoSnapshot,
    predicted: IoPrediction,
    tolerance: float = 0.05,
) -> ReconcileReport:
    """
    Signale les catégories où la mesure dépasse la prédiction de plus que la marge.

    La marge d'une catégorie est le plus grand de `tolerance` x prédiction et
    des octets d'en-têtes déclarés par la prédiction pour cette catégorie.

    Args:
        measured: E/S d'une itération (IterationStats.io)
        predicted: Prédiction pour la même itération
        tolerance: Marge relative pour les métadonnées non modélisées
    """
    rows = []
    for name in CATEGORIES:
        seen = measured.category(name)
        expected = predicted.by_category[name]
        headers = predicted.overhead.get(name, 0)
        ok = _within(seen.bytes_read, expected.bytes_read, headers, tolerance) and _within(
            seen.bytes_written, expected.bytes_written, headers, tolerance
        )
        rows.append(
            ReconcileRow(
                category=name,
                measured_read=seen.bytes_read,
                predicted_read=expected.bytes_read,
                measured_write=seen.bytes_written,
                predicted_write=expected.bytes_written,
                ok=ok,
            )
        )
    return ReconcileReport(rows=rows, ok=all(row.ok for row in rows))
