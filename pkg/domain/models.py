"""
Core value types shared by every module: time grid, market, barrier and contract.

All types are frozen after construction and safe to share between threads.
"""

import math
from dataclasses import dataclass, field, replace
from enum import Enum
from types import MappingProxyType
from typing import Dict, Mapping, Optional, Sequence, Tuple

import numpy as np


# Smallest admissible step between monitoring times, in years
MIN_TIME_GAP = 1e-9


class Direction(str, Enum):
    """Side of the barrier relative to the spot."""

    UP = "UP"
    DOWN = "DOWN"

    @property
    def no_constraint(self) -> float:
        """Log-space sentinel for an absent icicle."""
        return math.inf if self is Direction.UP else -math.inf


class OptionType(str, Enum):
    """The eight icicled multi-step barrier option types."""

    UOP = "UOP"
    UIP = "UIP"
    UOC = "UOC"
    UIC = "UIC"
    DOP = "DOP"
    DIP = "DIP"
    DOC = "DOC"
    DIC = "DIC"

    @property
    def direction(self) -> Direction:
        return Direction.UP if self.value[0] == "U" else Direction.DOWN

    @property
    def is_call(self) -> bool:
        return self.value[2] == "C"

    @property
    def is_knock_in(self) -> bool:
        return self.value[1] == "I"

    @property
    def partner(self) -> "OptionType":
        """The in/out counterpart sharing barrier and payoff."""
        swapped = "O" if self.is_knock_in else "I"
        return OptionType(self.value[0] + swapped + self.value[2])


@dataclass(frozen=True)
class TimeGrid:
    """Monitoring times 0 = t0 < t1 < ... < tn = T in years."""

    times: Tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "times", tuple(float(t) for t in self.times))

    @classmethod
    def uniform(cls, maturity: float, steps: int) -> "TimeGrid":
        return cls(tuple(maturity * i / steps for i in range(steps + 1)))

    @classmethod
    def from_steps(cls, step_lengths: Sequence[float]) -> "TimeGrid":
        return cls(tuple(np.concatenate(([0.0], np.cumsum(step_lengths))).tolist()))

    @property
    def n(self) -> int:
        return len(self.times) - 1

    @property
    def maturity(self) -> float:
        return self.times[-1]

    @property
    def t(self) -> np.ndarray:
        """Step-end times t1..tn."""
        return np.asarray(self.times[1:], dtype=float)

    @property
    def steps(self) -> np.ndarray:
        return np.diff(np.asarray(self.times, dtype=float))


@dataclass(frozen=True)
class MarketParams:
    """Black-Scholes market: spot, continuous rate, volatility and optional physical drift."""

    spot: float
    rate: float
    vol: float
    drift: Optional[float] = None

    @property
    def risk_neutral_drift(self) -> float:
        """Log-price drift r - sigma^2/2."""
        return self.rate - 0.5 * self.vol * self.vol


def _frozen_levels(levels: Mapping[int, float]) -> Mapping[int, float]:
    return MappingProxyType({int(i): float(v) for i, v in sorted(dict(levels).items())})


@dataclass(frozen=True)
class BarrierSpec:
    """
    Piecewise-constant barrier with optional icicles.

    ``levels`` maps a step index i in 1..n to the barrier B_i active on
    [t_{i-1}, t_i]; steps without an entry are unmonitored. ``icicles``
    maps i to the level L_i imposed on S(t_i).
    """

    direction: Direction
    levels: Mapping[int, float]
    icicles: Mapping[int, float] = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "direction", Direction(self.direction))
        object.__setattr__(self, "levels", _frozen_levels(self.levels))
        object.__setattr__(self, "icicles", _frozen_levels(self.icicles))

    @classmethod
    def full(cls, direction: Direction, levels: Sequence[float],
             icicles: Optional[Sequence[float]] = None) -> "BarrierSpec":
        """Barrier on every step, levels listed in step order."""
        return cls(
            direction=direction,
            levels={i + 1: b for i, b in enumerate(levels)},
            icicles={i + 1: v for i, v in enumerate(icicles)} if icicles is not None else {},
        )

    @property
    def index_set(self) -> Tuple[int, ...]:
        return tuple(self.levels.keys())

    @property
    def g(self) -> int:
        return len(self.levels)


@dataclass(frozen=True)
class LogBarrier:
    """
    Log-space image of a barrier relative to the spot.

    ``m`` maps i in I to ln(B_i/S0); ``x`` holds ln(L_i/S0) for i = 1..n with
    the direction's no-constraint sentinel where no icicle applies; ``k`` is
    ln(K/S0) when a strike is attached.
    """

    direction: Direction
    m: Mapping[int, float]
    x: Tuple[float, ...]
    k: Optional[float] = None

    def __post_init__(self):
        object.__setattr__(self, "m", _frozen_levels(self.m))
        object.__setattr__(self, "x", tuple(float(v) for v in self.x))

    @property
    def n(self) -> int:
        return len(self.x)

    def mirror(self) -> "LogBarrier":
        """Reflect through zero: a Down barrier becomes its Up image and vice versa."""
        flipped = Direction.UP if self.direction is Direction.DOWN else Direction.DOWN
        return LogBarrier(
            direction=flipped,
            m={i: -v for i, v in self.m.items()},
            x=tuple(-v for v in self.x),
            k=None if self.k is None else -self.k,
        )

    def with_icicles(self, x: Sequence[float]) -> "LogBarrier":
        return replace(self, x=tuple(x))


@dataclass(frozen=True)
class OptionContract:
    """A barrier option: type, strike, monitoring grid and barrier."""

    option_type: OptionType
    strike: float
    grid: TimeGrid
    barrier: BarrierSpec

    def __post_init__(self):
        object.__setattr__(self, "option_type", OptionType(self.option_type))
        object.__setattr__(self, "strike", float(self.strike))

    def with_strike(self, strike: float) -> "OptionContract":
        return replace(self, strike=strike)

    def with_type(self, option_type: OptionType) -> "OptionContract":
        return replace(self, option_type=option_type)

    def describe(self) -> Dict[str, object]:
        return {
            "type": self.option_type.value,
            "strike": self.strike,
            "maturity": self.grid.maturity,
            "steps": self.grid.n,
            "levels": ",".join(f"{b:g}" for b in self.barrier.levels.values()),
        }
