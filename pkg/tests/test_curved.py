import math

import pytest

from cli.tables import EXPONENTIAL_GRID, read_expected
from curved import (
    DiscretizationRule,
    ExponentialCurve,
    LinearPriceCurve,
    PriceCurve,
    QuantileCurve,
    TabulatedCurve,
    curved_contract,
    discretize,
    price_curved,
    refinement_study,
    survival_prob,
)
from domain.errors import NonPositiveCurve
from domain.models import BarrierSpec, Direction, MarketParams, OptionContract, OptionType, TimeGrid
from pricing import price

HALF_YEAR_10 = TimeGrid.uniform(0.5, 10)
SURVIVAL_MARKET = MarketParams(spot=100.0, rate=0.0, vol=0.2, drift=0.01)


@pytest.mark.parametrize("text,rule", [
    ("left", DiscretizationRule.LEFT),
    ("RIGHT", DiscretizationRule.RIGHT),
    ("midpoint", DiscretizationRule.MIDPOINT_LOG),
    ("midprice", DiscretizationRule.MIDPOINT_PRICE),
])
def test_rule_parsing(text, rule):
    assert DiscretizationRule.parse(text) is rule


def test_unknown_rule():
    with pytest.raises(ValueError):
        DiscretizationRule.parse("average")


def test_midprice_is_log_of_average_price():
    a, b = 104.0, 112.0
    level = DiscretizationRule.MIDPOINT_PRICE.combine(math.log(a / 100), math.log(b / 100))
    assert level == pytest.approx(math.log((a + b) / 200), abs=1e-14)
    assert DiscretizationRule.MIDPOINT_LOG.combine(0.1, 0.3) == pytest.approx(0.2)


@pytest.mark.parametrize("rule", list(DiscretizationRule))
def test_flat_curve_gives_flat_levels(rule):
    levels = discretize(LinearPriceCurve(c0=110.0, c1=0.0), TimeGrid.uniform(1.0, 4), rule, 100.0)
    assert levels == pytest.approx((math.log(1.1),) * 4, abs=1e-14)


def test_levels_follow_the_grid():
    grid = TimeGrid(times=(0.0, 0.1, 0.4))
    curve = LinearPriceCurve(c0=100.0, c1=100.0)
    left = discretize(curve, grid, "left", 100.0)
    right = discretize(curve, grid, "right", 100.0)
    assert left == pytest.approx((0.0, math.log(1.1)))
    assert right == pytest.approx((math.log(1.1), math.log(1.4)))


def test_non_positive_curve_is_rejected():
    with pytest.raises(NonPositiveCurve):
        discretize(LinearPriceCurve(c0=20.0, c1=-100.0), TimeGrid.uniform(0.5, 5), "left", 100.0)


def test_quantile_curve_from_confidence():
    curve = QuantileCurve.from_confidence(0.9, mu=0.01, sigma=0.2)
    assert curve.z == pytest.approx(1.2815515655446004, abs=1e-10)
    assert curve.log_level(0.25, 100.0) == pytest.approx(0.0025 + curve.z * 0.1)
    with pytest.raises(ValueError):
        QuantileCurve.from_confidence(1.0, mu=0.0, sigma=0.2)


def test_tabulated_curve_from_file(tmp_path):
    path = tmp_path / "curve.csv"
    path.write_text("# time, level\n0.0, 110\n0.5 115\n\n1.0,130  # end\n", encoding="utf-8")
    curve = TabulatedCurve.from_file(path)
    assert curve.times == (0.0, 0.5, 1.0)
    assert curve.level(0.75) == pytest.approx(122.5)
    with pytest.raises(ValueError):
        curve.level(1.5)


def test_tabulated_curve_rejects_bad_rows(tmp_path):
    path = tmp_path / "curve.csv"
    path.write_text("0.0, 110, 3\n", encoding="utf-8")
    with pytest.raises(ValueError):
        TabulatedCurve.from_file(path)
    with pytest.raises(NonPositiveCurve):
        TabulatedCurve.from_points([(0.0, 100.0), (1.0, 0.0)])


def test_linear_curve_survival_table_cell():
    curve = LinearPriceCurve(c0=105.0, c1=50.0)
    result = survival_prob(curve, HALF_YEAR_10, "midlog", SURVIVAL_MARKET, engine="kernel")
    assert result.engine == "kernel"
    assert result.probability == pytest.approx(0.6530, abs=5e-4)
    assert len(result.levels) == 10


def test_auto_engine_switches_on_grid_size():
    curve = LinearPriceCurve(c0=110.0, c1=20.0)
    coarse = survival_prob(curve, TimeGrid.uniform(0.5, 4), "midlog", SURVIVAL_MARKET)
    fine = survival_prob(curve, TimeGrid.uniform(0.5, 30), "midlog", SURVIVAL_MARKET)
    assert coarse.engine == "reflection"
    assert fine.engine == "kernel"
    with pytest.raises(ValueError):
        survival_prob(curve, TimeGrid.uniform(0.5, 4), "midlog", SURVIVAL_MARKET, engine="exact")


def test_engines_agree():
    curve = LinearPriceCurve(c0=107.5, c1=25.0)
    grid = TimeGrid.uniform(0.5, 6)
    reflected = survival_prob(curve, grid, "midlog", SURVIVAL_MARKET, engine="reflection")
    kernel = survival_prob(curve, grid, "midlog", SURVIVAL_MARKET, engine="kernel")
    assert reflected.probability == pytest.approx(kernel.probability, abs=1e-4)


def test_rules_bracket_the_midpoint():
    curve = LinearPriceCurve(c0=105.0, c1=40.0)
    grid = TimeGrid.uniform(0.5, 8)
    values = {rule: survival_prob(curve, grid, rule, SURVIVAL_MARKET, engine="kernel").probability
              for rule in ("left", "midlog", "right")}
    assert values["left"] < values["midlog"] < values["right"]


def test_down_curve_survival():
    curve = LinearPriceCurve(c0=95.0, c1=-20.0)
    grid = TimeGrid.uniform(0.5, 5)
    down = survival_prob(curve, grid, "midlog", SURVIVAL_MARKET, direction=Direction.DOWN)
    kernel = survival_prob(curve, grid, "midlog", SURVIVAL_MARKET, direction=Direction.DOWN, engine="kernel")
    assert 0.0 < down.probability < 1.0
    assert down.probability == pytest.approx(kernel.probability, abs=1e-4)


def test_quantile_survival_hardly_depends_on_volatility():
    grid = TimeGrid.uniform(0.5, 10)
    values = []
    for mu in (0.01, 0.02, 0.03):
        for vol in (0.1, 0.2, 0.3):
            curve = QuantileCurve.from_confidence(0.9, mu=mu, sigma=vol)
            market = MarketParams(spot=100.0, rate=0.0, vol=vol, drift=mu)
            values.append(survival_prob(curve, grid, "midlog", market, engine="kernel").probability)
    assert max(values[:3]) - min(values[:3]) <= 1e-3
    assert max(values) - min(values) <= 5e-3


def test_refinement_converges():
    points = refinement_study(LinearPriceCurve(c0=105.0, c1=50.0), 0.5, [5, 10, 20, 40], "midlog",
                              SURVIVAL_MARKET, engine="kernel")
    assert [p.steps for p in points] == [5, 10, 20, 40]
    assert points[0].change is None
    changes = [p.change for p in points[1:]]
    assert changes[-1] < changes[0]
    assert all(0.0 < p.probability < 1.0 for p in points)


def test_flat_exponential_curve_is_the_flat_barrier():
    market = MarketParams(spot=100.0, rate=0.03, vol=0.2)
    grid = TimeGrid(times=EXPONENTIAL_GRID)
    curved = price_curved(OptionType.UOP, 100.0, ExponentialCurve(a=105.0, delta=0.0), grid, "midprice", market)
    flat = OptionContract(option_type=OptionType.UOP, strike=100.0, grid=grid,
                          barrier=BarrierSpec.full(Direction.UP, [105.0] * grid.n))
    assert curved.price == pytest.approx(price(flat, market).price, abs=1e-10)


def test_curved_contract_levels():
    grid = TimeGrid(times=EXPONENTIAL_GRID)
    contract = curved_contract("DOC", 100.0, ExponentialCurve(a=95.0, delta=-0.1), grid, "midprice", 100.0)
    assert contract.barrier.direction is Direction.DOWN
    assert contract.barrier.g == 8
    first = (95.0 + 95.0 * math.exp(-0.1 / 24)) / 2
    assert contract.barrier.levels[1] == pytest.approx(first)


@pytest.mark.parametrize("option_type,a,delta,strike,expected", [
    ("UOP", 105.0, 0.1, 90.0, 1.1597),
    ("DOC", 95.0, -0.1, 100.0, 4.7246),
])
def test_exponential_barrier_prices(option_type, a, delta, strike, expected):
    market = MarketParams(spot=100.0, rate=0.03, vol=0.2)
    result = price_curved(option_type, strike, ExponentialCurve(a=a, delta=delta),
                          TimeGrid(times=EXPONENTIAL_GRID), DiscretizationRule.MIDPOINT_PRICE, market)
    assert result.price == pytest.approx(expected, abs=1e-3)


@pytest.mark.slow
@pytest.mark.parametrize("table_id", ["ex4", "ex5"])
def test_survival_tables(table_id):
    for row in read_expected(table_id):
        mu, vol = float(row["mu"]), float(row["vol"])
        if table_id == "ex4":
            curve = QuantileCurve.from_confidence(float(row["confidence"]), mu=mu, sigma=vol)
        else:
            curve = LinearPriceCurve(c0=100 * float(row["c0_ratio"]), c1=100 * float(row["c1_ratio"]))
        grid = TimeGrid.uniform(float(row["maturity"]), int(row["steps"]))
        market = MarketParams(spot=100.0, rate=0.0, vol=vol, drift=mu)
        result = survival_prob(curve, grid, "midlog", market, engine="reflection")
        assert result.probability == pytest.approx(float(row["expected"]), abs=float(row["tolerance"]))


def test_price_curves_must_define_their_level():
    class Unleveled(PriceCurve):
        family = "unleveled"

    with pytest.raises(TypeError):
        PriceCurve()
    with pytest.raises(TypeError):
        Unleveled()
