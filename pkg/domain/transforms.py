"""
Validation and log-space transformation of barrier inputs.
"""

import math
from dataclasses import dataclass
from typing import Mapping, Optional, Tuple

from utils.logger import get_logger
from .errors import (
    BarrierDirectionMismatch,
    ImmediateKnock,
    InvalidBarrierLevel,
    NonIncreasingGrid,
    NonPositiveSpot,
    NonPositiveVol,
)
from .models import (
    MIN_TIME_GAP,
    BarrierSpec,
    Direction,
    LogBarrier,
    MarketParams,
    OptionContract,
    TimeGrid,
)

logger = get_logger(__name__)


@dataclass(frozen=True)
class ValidatedBundle:
    """Inputs that passed every invariant check."""

    grid: TimeGrid
    market: MarketParams
    barrier: BarrierSpec
    knocked_at_start: bool = False


def _validate_grid(grid: TimeGrid) -> None:
    times = grid.times
    if len(times) < 2:
        raise NonIncreasingGrid("time grid needs at least one step (n >= 1)", times=list(times))
    if times[0] != 0.0:
        raise NonIncreasingGrid(f"time grid must start at 0, got t0={times[0]}", times=list(times))
    for i in range(1, len(times)):
        gap = times[i] - times[i - 1]
        if not gap >= MIN_TIME_GAP:
            raise NonIncreasingGrid(
                f"times must increase by at least {MIN_TIME_GAP:g}: "
                f"t{i - 1}={times[i - 1]} and t{i}={times[i]}",
                index=i,
                times=list(times),
            )


def _validate_market(market: MarketParams) -> None:
    if not market.vol > 0.0 or not math.isfinite(market.vol):
        raise NonPositiveVol(f"volatility must be positive, got {market.vol}", vol=market.vol)
    if not market.spot > 0.0 or not math.isfinite(market.spot):
        raise NonPositiveSpot(f"spot must be positive, got {market.spot}", spot=market.spot)


def _validate_levels(barrier: BarrierSpec, n: int) -> None:
    for name, levels in (("barrier", barrier.levels), ("icicle", barrier.icicles)):
        for i, level in levels.items():
            if not 1 <= i <= n:
                raise InvalidBarrierLevel(f"{name} index {i} outside 1..{n}", index=i)
            if not level > 0.0:
                raise InvalidBarrierLevel(f"{name} level at index {i} must be positive, got {level}",
                                          index=i, level=level)


def is_knocked_at_start(barrier: BarrierSpec, spot: float) -> bool:
    """True when B1 lies strictly on the knocked side of the spot."""
    if 1 not in barrier.levels:
        return False
    b1 = barrier.levels[1]
    if barrier.direction is Direction.UP:
        return b1 < spot
    return b1 > spot


def validate(
    grid: TimeGrid,
    market: MarketParams,
    barrier: BarrierSpec,
    allow_immediate_knock: bool = False,
) -> ValidatedBundle:
    """
    Check every type invariant of a pricing problem.

    Args:
        grid: Monitoring time grid
        market: Market parameters
        barrier: Barrier specification
        allow_immediate_knock: Report a knocked-at-start barrier in the bundle
                               instead of raising ImmediateKnock

    Returns:
        ValidatedBundle with the same inputs

    Raises:
        NonIncreasingGrid, NonPositiveVol, NonPositiveSpot,
        InvalidBarrierLevel, ImmediateKnock
    """
    _validate_grid(grid)
    _validate_market(market)
    _validate_levels(barrier, grid.n)

    knocked = is_knocked_at_start(barrier, market.spot)
    if knocked and not allow_immediate_knock:
        side = "below" if barrier.direction is Direction.UP else "above"
        raise ImmediateKnock(
            f"{barrier.direction.value} barrier B1={barrier.levels[1]} is {side} spot {market.spot}",
            level=barrier.levels[1],
            spot=market.spot,
        )
    return ValidatedBundle(grid=grid, market=market, barrier=barrier, knocked_at_start=knocked)


def validate_contract(
    contract: OptionContract,
    market: MarketParams,
    allow_immediate_knock: bool = True,
) -> ValidatedBundle:
    """Validate a contract, including the option/barrier direction match."""
    if contract.option_type.direction is not contract.barrier.direction:
        raise BarrierDirectionMismatch(
            f"{contract.option_type.value} needs a {contract.option_type.direction.value} barrier, "
            f"got {contract.barrier.direction.value}",
            option_type=contract.option_type.value,
        )
    if not contract.strike > 0.0:
        raise InvalidBarrierLevel(f"strike must be positive, got {contract.strike}", strike=contract.strike)
    return validate(contract.grid, market, contract.barrier, allow_immediate_knock=allow_immediate_knock)


def to_log_space(barrier: BarrierSpec, spot: float, strike: Optional[float] = None,
                 n: Optional[int] = None) -> LogBarrier:
    """
    Map price levels to log-levels relative to the spot.

    Absent icicles become the direction's no-constraint sentinel.

    Args:
        barrier: Barrier specification (validated)
        spot: S(0)
        strike: Optional strike K
        n: Number of steps; defaults to the largest index mentioned

    Returns:
        LogBarrier with m_i = ln(B_i/S0), x_i = ln(L_i/S0), k = ln(K/S0)
    """
    if n is None:
        n = max(list(barrier.levels.keys()) + list(barrier.icicles.keys()) + [1])
    sentinel = barrier.direction.no_constraint
    m = {i: math.log(b / spot) for i, b in barrier.levels.items()}
    x = tuple(
        math.log(barrier.icicles[i] / spot) if i in barrier.icicles else sentinel
        for i in range(1, n + 1)
    )
    k = math.log(strike / spot) if strike is not None else None
    return LogBarrier(direction=barrier.direction, m=m, x=x, k=k)


def default_icicles(m: Mapping[int, float], n: int,
                    direction: Direction = Direction.UP) -> Tuple[float, ...]:
    """
    Icicles implied by the barriers alone.

    x_i is the tighter of the barriers on the two steps meeting at t_i
    (m_i and m_{i+1} when present); times touching no barrier get the
    no-constraint sentinel.

    Args:
        m: Log-levels over the barrier index set
        n: Number of steps
        direction: Barrier direction (min for UP, max for DOWN)

    Returns:
        Tuple x_1..x_n
    """
    pick = min if direction is Direction.UP else max
    sentinel = direction.no_constraint
    x = []
    for i in range(1, n + 1):
        candidates = [m[j] for j in (i, i + 1) if j in m]
        x.append(pick(candidates) if candidates else sentinel)
    return tuple(x)


def effective_icicles(log_barrier: LogBarrier) -> LogBarrier:
    """
    Combine user icicles with the barrier-implied ones.

    Survival on a step already forces S(t_i) onto the safe side of the
    adjacent barriers, so the tighter of the two levels describes the same
    event and always meets the reflection preconditions.
    """
    implied = default_icicles(log_barrier.m, log_barrier.n, log_barrier.direction)
    pick = min if log_barrier.direction is Direction.UP else max
    combined = tuple(pick(a, b) for a, b in zip(log_barrier.x, implied))
    if combined != log_barrier.x:
        logger.debug(f"Icicles tightened by adjacent barriers: {log_barrier.x} -> {combined}")
    return log_barrier.with_icicles(combined)
