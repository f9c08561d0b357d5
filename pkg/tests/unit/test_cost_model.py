"""Tests du modèle de coût d'entrées/sorties."""

import io
from fractions import Fraction

import numpy as np
import pytest

from nxcore.core.errors import InfeasibleBudgetError
from nxcore.core.io_counters import CategoryTally, IoCounters
from nxcore.core.models import CostParams
from nxcore.services.cost_model import (
    IoPrediction,
    continuous_fraction,
    io_dpu,
    io_mpu,
    io_mpu_continuous,
    io_mpu_fraction,
    io_spu,
    io_turbograph_like,
    parse_budget,
    parse_budget_grid,
    ratio_curve,
    reconcile,
    resident_intervals,
    table_rows,
    total_mpu,
    total_turbograph_like,
    write_ratio_csv,
)
from nxcore.utils.size_parser import SizeParsingError

# Constantes du graphe Yahoo-web
YAHOO = {"n": 7.2e8, "m": 6.63e9, "b_a": 8, "b_v": 4, "b_e": 4, "d": 15}
PINGPONG = 2 * 7.2e8 * 8


def _params(b_m: float, **extra: float | int) -> CostParams:
    return CostParams(**YAHOO, b_m=b_m, **extra)


def test_spu_read_with_yahoo_constants():
    """Test SPU à B_M = 30e9: lecture = m·B_e + 2n·B_a - B_M = 8.04e9."""
    io_bytes = io_spu(_params(30e9))

    assert io_bytes.read == pytest.approx(8.04e9, rel=1e-12)
    assert io_bytes.write == 0


def test_spu_reads_nothing_when_everything_fits():
    """Test que SPU ne lit rien quand le budget couvre aussi les sous-shards."""
    assert io_spu(_params(1e11)).read == 0


def test_spu_exact_pingpong_budget_is_feasible():
    """Test que B_M = 2n·B_a est accepté par SPU."""
    assert io_spu(_params(PINGPONG)).read == pytest.approx(6.63e9 * 4)


def test_spu_below_pingpong_is_infeasible():
    """Test que SPU sous 2n·B_a lève InfeasibleBudgetError."""
    with pytest.raises(InfeasibleBudgetError):
        io_spu(_params(PINGPONG - 1))


def test_dpu_with_yahoo_constants():
    """Test DPU: lecture 37.584e9, écriture 11.064e9, indépendant de B_M."""
    low, high = io_dpu(_params(1e6)), io_dpu(_params(1e10))

    assert low.read == pytest.approx(37.584e9, rel=1e-12)
    assert low.write == pytest.approx(11.064e9, rel=1e-12)
    assert low == high


def test_mpu_half_resident_with_yahoo_constants():
    """Test MPU à B_M = n·B_a (f = 0.5): lecture 30.726e9."""
    params = _params(7.2e8 * 8)

    assert continuous_fraction(params) == pytest.approx(0.5)
    assert io_mpu_continuous(params).read == pytest.approx(30.726e9, rel=1e-12)


def test_mpu_endpoints_match_dpu_and_spu():
    """Test que Q = 0 redonne DPU et Q = P ne lit que les arêtes."""
    params = _params(1e9, partitions=8)

    assert io_mpu(params.model_copy(update={"resident": 0})) == io_dpu(params)
    full = io_mpu(params.model_copy(update={"resident": 8}))
    assert full.read == pytest.approx(6.63e9 * 4)
    assert full.write == 0


def test_resident_intervals_from_budget():
    """Test que Q = floor(B_M / (2n·B_a) · P), borné à P."""
    assert resident_intervals(_params(PINGPONG / 2, partitions=16)) == 8
    assert resident_intervals(_params(PINGPONG * 3, partitions=16)) == 16
    assert resident_intervals(_params(1.0, partitions=16)) == 0
    assert resident_intervals(_params(1.0, partitions=16, resident=5)) == 5


def test_mpu_fraction_is_monotone():
    """Test que le trafic MPU croît avec la part hors mémoire."""
    params = _params(1e9)
    totals = [io_mpu_fraction(params, f / 10).total for f in range(11)]

    assert totals == sorted(totals)


def test_turbograph_like_formula():
    """Test de la formule TurboGraph-like: m·B_e + 2(n·B_a)²/B_M + n·B_a."""
    params = _params(PINGPONG)
    vertex_bytes = 7.2e8 * 8

    expected = 6.63e9 * 4 + 2 * vertex_bytes**2 / PINGPONG + vertex_bytes
    assert io_turbograph_like(params).read == pytest.approx(expected, rel=1e-12)
    assert total_turbograph_like(params) == pytest.approx(38.04e9, rel=1e-12)


def test_ratio_endpoint_with_yahoo_constants():
    """Test du rapport MPU / TurboGraph-like à B_M = 2n·B_a: environ 0.6972."""
    params = _params(PINGPONG)

    ratio = total_mpu(params) / total_turbograph_like(params)

    assert ratio == pytest.approx(0.6972, abs=5e-4)


def test_ratio_below_one_over_the_grid():
    """Test que MPU bat TurboGraph-like sur 100 points de (0, 2n·B_a]."""
    budgets = parse_budget_grid(f"0:{PINGPONG}:100")

    points = ratio_curve(_params(PINGPONG), budgets)

    assert len(points) == 100
    assert points[-1].b_m == pytest.approx(PINGPONG)
    assert all(0 < point.ratio < 1 for point in points)
    assert points[-1].ratio == pytest.approx(0.6972, abs=5e-4)


def test_ratio_csv_format():
    """Test de l'en-tête et du format décimal du CSV."""
    points = ratio_curve(_params(PINGPONG), [PINGPONG])
    stream = io.StringIO()

    write_ratio_csv(points, stream)

    lines = stream.getvalue().splitlines()
    assert lines[0] == "b_m,b_mpu,b_tg,ratio"
    assert lines[1].startswith("11520000000.0,26520000000.0,38040000000.0,0.697")
    assert "e+" not in lines[1]


def test_table_rows_marks_spu_infeasible():
    """Test que la table signale SPU comme infaisable sous 2n·B_a."""
    rows = dict(table_rows(_params(1e9, partitions=16)))

    assert rows["SPU"] is None
    assert rows["DPU"] is not None
    assert "MPU(Q=1)" in rows
    assert rows["MPU(continuous)"] is not None


@pytest.mark.parametrize(
    "text,expected",
    [("1e9", 1e9), ("30e9", 30e9), ("512M", 512 * 1024**2), ("4096", 4096.0)],
)
def test_parse_budget(text: str, expected: float):
    """Test du parsing des budgets numériques ou avec suffixe."""
    assert parse_budget(text) == expected


@pytest.mark.parametrize("text", ["1:2", "5:1:10", "0:1e9:0", "0:1e9:x", "a:b:3"])
def test_parse_budget_grid_rejects_bad_grids(text: str):
    """Test que les grilles mal formées sont rejetées."""
    with pytest.raises(SizeParsingError):
        parse_budget_grid(text)


def test_parse_budget_grid_points():
    """Test des points de la grille LO + (HI - LO)·k/STEPS."""
    assert parse_budget_grid("0:100:4") == [25.0, 50.0, 75.0, 100.0]


def _exact_rows(p: CostParams) -> dict[str, tuple[Fraction, Fraction]]:
    """Lignes de la table des coûts recalculées en arithmétique rationnelle."""
    n, m, b_a, b_v, b_e, b_m, d = (
        Fraction(value) for value in (p.n, p.m, p.b_a, p.b_v, p.b_e, p.b_m, p.d)
    )
    vertex = n * b_a
    f = min(Fraction(1), max(Fraction(0), 1 - b_m / (2 * vertex)))
    hub = f * f * m * (b_a + b_v) / d
    rows = {
        "DPU": (m * (b_e + (b_a + b_v) / d) + vertex, m * (b_a + b_v) / d + vertex),
        "MPU": (m * b_e + hub + f * vertex, hub + f * vertex),
        "TG": (m * b_e + 2 * vertex * vertex / b_m + vertex, vertex),
    }
    if b_m >= 2 * vertex:
        rows["SPU"] = (max(Fraction(0), m * b_e + 2 * vertex - b_m), Fraction(0))
    return rows


def test_cost_formulas_at_random_points():
    """Test des quatre lignes de la table des coûts en 1000 points aléatoires."""
    rng = np.random.default_rng(2024)
    for _ in range(1000):
        n = float(rng.uniform(1e3, 1e9))
        b_a = float(rng.choice([4, 8]))
        b_e = float(rng.uniform(2, 8))
        m = n * float(rng.uniform(1, 50))
        b_m = float(rng.uniform(0.01, 1.5)) * (2 * n * b_a + m * b_e)
        p = CostParams(n=n, m=m, b_a=b_a, b_v=4, b_e=b_e, b_m=b_m, d=float(rng.uniform(1, 50)))
        computed = {
            "DPU": io_dpu(p),
            "MPU": io_mpu_continuous(p),
            "TG": io_turbograph_like(p),
        }
        if b_m >= 2 * n * b_a:
            computed["SPU"] = io_spu(p)

        for name, (read, write) in _exact_rows(p).items():
            assert computed[name].read == pytest.approx(float(read), rel=1e-12, abs=1e-3), name
            assert computed[name].write == pytest.approx(float(write), rel=1e-12, abs=1e-3), name


def test_reconcile_allows_declared_header_bytes():
    """Test que la marge de réconciliation couvre les en-têtes déclarés."""
    predicted = IoPrediction()
    predicted.by_category["hub"] = CategoryTally(bytes_read=100, bytes_written=100)
    predicted.overhead["hub"] = 16

    within = IoCounters()
    within.add_read("hub", 116)
    within.add_write("hub", 100)
    beyond = IoCounters()
    beyond.add_read("hub", 117)

    assert reconcile(within.snapshot(), predicted).ok
    report = reconcile(beyond.snapshot(), predicted)
    assert not report.ok
    assert "hub: read 117/100 write 0/100 EXCEEDED" in report.lines()


def test_reconcile_uses_relative_tolerance_above_headers():
    """Test que la tolérance relative l'emporte quand elle dépasse les en-têtes."""
    predicted = IoPrediction()
    predicted.by_category["subshard"] = CategoryTally(bytes_read=1000)

    measured = IoCounters()
    measured.add_read("subshard", 1050)

    assert reconcile(measured.snapshot(), predicted).ok
    assert not reconcile(measured.snapshot(), predicted, tolerance=0.01).ok
