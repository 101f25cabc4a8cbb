"""
Multi-step approximation of curved barriers.

A continuously monitored curve is replaced by a flat level on every step
of a monitoring grid, then priced or evaluated with the multi-step
machinery. Grids need not be uniform.
"""

from typing import List, Optional, Sequence, Tuple, Union

import numpy as np
from pydantic import BaseModel, Field

from domain.models import BarrierSpec, Direction, MarketParams, OptionContract, OptionType, TimeGrid
from pricing.engine import PriceResult, price
from reflection.probability import ReflectionOptions, survival_prob_no_icicles
from reflection.transition import survival_prob_by_quadrature
from utils.logger import get_logger
from .barriers import CurvedBarrier, DiscretizationRule

logger = get_logger(__name__)

ENGINES = ("auto", "reflection", "kernel")

# Beyond this many steps the 2^n reflection sum gives way to the kernel engine
AUTO_REFLECTION_STEPS = 12


class CurveSurvival(BaseModel):
    """Survival probability of a discretized curve."""
    probability: float
    error_bound: float = Field(ge=0.0)
    engine: str
    steps: int
    levels: List[float] = Field(description="Step log-levels m_1..m_n")


class RefinementPoint(BaseModel):
    steps: int
    probability: float
    error_bound: float
    change: Optional[float] = Field(default=None, description="Difference from the previous grid size")


def discretize(curve: CurvedBarrier, grid: TimeGrid, rule: Union[str, DiscretizationRule],
               spot: float) -> Tuple[float, ...]:
    """
    Step log-levels m_1..m_n of a curve on a monitoring grid.

    Args:
        curve: Barrier curve
        grid: Monitoring times t_1 < ... < t_n (t_0 = 0)
        rule: Which point of each step the level is read from
        spot: Initial price S0

    Returns:
        Tuple of ln(B_i/S0) in step order

    Raises:
        NonPositiveCurve: a price-space curve is not positive on the grid
    """
    rule = DiscretizationRule.parse(rule)
    ends = [curve.log_level(t, spot) for t in grid.times]
    return tuple(rule.combine(ends[i - 1], ends[i]) for i in range(1, len(ends)))


def _resolve_engine(engine: str, steps: int) -> str:
    if engine not in ENGINES:
        raise ValueError(f"engine must be one of {ENGINES}, got {engine!r}")
    if engine == "auto":
        return "reflection" if steps <= AUTO_REFLECTION_STEPS else "kernel"
    return engine


def _drift(market: MarketParams) -> float:
    return market.drift if market.drift is not None else market.risk_neutral_drift


def survival_prob(curve: CurvedBarrier, grid: TimeGrid, rule: Union[str, DiscretizationRule],
                  market: MarketParams, direction: Direction = Direction.UP,
                  options: Optional[ReflectionOptions] = None, engine: str = "auto") -> CurveSurvival:
    """
    P(the log-price stays on the safe side of the discretized curve up to T).

    The log-price drifts at market.drift when given, otherwise at r - sigma^2/2.
    ``engine`` picks the inclusion-exclusion sum ("reflection"), the killed
    kernel quadrature ("kernel"), or the former up to a dozen steps ("auto").
    """
    levels = discretize(curve, grid, rule, market.spot)
    chosen = _resolve_engine(engine, grid.n)
    mu = _drift(market)
    direction = Direction(direction)

    if chosen == "reflection":
        result = survival_prob_no_icicles(mu, market.vol, levels, grid, options, direction=direction)
        probability, error = result.probability, result.error_bound
    else:
        estimate = survival_prob_by_quadrature(mu, market.vol, None, levels, grid, direction=direction)
        probability, error = float(np.clip(estimate.value, 0.0, 1.0)), estimate.error_bound

    logger.debug(f"{curve.describe()} n={grid.n} rule={DiscretizationRule.parse(rule).value} "
                 f"engine={chosen}: survival={probability:.6f}")
    return CurveSurvival(probability=probability, error_bound=error, engine=chosen,
                         steps=grid.n, levels=list(levels))


def curved_contract(option_type: OptionType, strike: float, curve: CurvedBarrier, grid: TimeGrid,
                    rule: Union[str, DiscretizationRule], spot: float) -> OptionContract:
    """Multi-step contract whose step levels come from the curve."""
    option_type = OptionType(option_type)
    levels = discretize(curve, grid, rule, spot)
    barrier = BarrierSpec.full(option_type.direction, [spot * float(np.exp(m)) for m in levels])
    return OptionContract(option_type=option_type, strike=strike, grid=grid, barrier=barrier)


def price_curved(option_type: OptionType, strike: float, curve: CurvedBarrier, grid: TimeGrid,
                 rule: Union[str, DiscretizationRule], market: MarketParams,
                 options: Optional[ReflectionOptions] = None) -> PriceResult:
    """
    Multi-step price of a barrier option with a curved barrier.

    Args:
        option_type: One of the eight barrier types; its direction is the curve's side
        strike: Strike K
        curve: Barrier curve
        grid: Monitoring grid
        rule: Discretization rule
        market: Spot, rate and volatility
        options: Reflection and MVN accuracy settings

    Returns:
        PriceResult from the multi-step pricer
    """
    contract = curved_contract(option_type, strike, curve, grid, rule, market.spot)
    return price(contract, market, options)


def refinement_study(curve: CurvedBarrier, maturity: float, ns: Sequence[int],
                     rule: Union[str, DiscretizationRule], market: MarketParams,
                     direction: Direction = Direction.UP, options: Optional[ReflectionOptions] = None,
                     engine: str = "auto") -> List[RefinementPoint]:
    """Survival probabilities on uniform grids of increasing size."""
    points: List[RefinementPoint] = []
    previous = None
    for steps in ns:
        result = survival_prob(curve, TimeGrid.uniform(maturity, steps), rule, market,
                               direction=direction, options=options, engine=engine)
        change = None if previous is None else abs(result.probability - previous)
        points.append(RefinementPoint(steps=steps, probability=result.probability,
                                      error_bound=result.error_bound, change=change))
        previous = result.probability
    logger.info(f"Refinement of {curve.describe()}: " +
                ", ".join(f"n={p.steps}: {p.probability:.6f}" for p in points))
    return points
