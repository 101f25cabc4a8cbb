"""
Curved barrier families and the rules that turn them into step levels.
"""

import math
from abc import ABC, abstractmethod
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Sequence, Tuple, Union

import numpy as np

from domain.errors import NonPositiveCurve
from gaussian.univariate import std_normal_ppf
from utils.logger import get_logger

logger = get_logger(__name__)


class DiscretizationRule(str, Enum):
    """How a step level is read off the curve on [t_{i-1}, t_i]."""

    LEFT = "left"
    RIGHT = "right"
    MIDPOINT_LOG = "midlog"
    MIDPOINT_PRICE = "midprice"

    @classmethod
    def parse(cls, value: Union[str, "DiscretizationRule"]) -> "DiscretizationRule":
        if isinstance(value, cls):
            return value
        key = str(value).strip().lower()
        if key == "midpoint":
            return cls.MIDPOINT_LOG
        return cls(key)

    def combine(self, left: float, right: float) -> float:
        """Step log-level from the curve's log-levels at both ends."""
        if self is DiscretizationRule.LEFT:
            return left
        if self is DiscretizationRule.RIGHT:
            return right
        if self is DiscretizationRule.MIDPOINT_LOG:
            return 0.5 * (left + right)
        # log of the average price level
        return max(left, right) + math.log1p(math.exp(-abs(left - right))) - math.log(2.0)


class CurvedBarrier(ABC):
    """A continuously monitored barrier level as a function of time."""

    family: str = "curve"

    @abstractmethod
    def log_level(self, t: float, spot: float) -> float:
        """ln(c(t)/S0)."""

    def price_level(self, t: float, spot: float) -> float:
        return spot * math.exp(self.log_level(t, spot))

    def describe(self) -> str:
        return self.family


@dataclass(frozen=True)
class PriceCurve(CurvedBarrier):
    """Base for curves defined in price space."""

    @abstractmethod
    def level(self, t: float) -> float:
        """Barrier price c(t)."""

    def log_level(self, t: float, spot: float) -> float:
        value = self.level(t)
        if not value > 0.0:
            raise NonPositiveCurve(f"{self.describe()} is not positive at t={t:g}: {value:g}", t=t, level=value)
        return math.log(value / spot)

    def price_level(self, t: float, spot: float) -> float:
        return self.level(t)


@dataclass(frozen=True)
class QuantileCurve(CurvedBarrier):
    """g(t) = mu t + z sigma sqrt(t) in log space: the (1 - alpha) quantile of X(t)."""

    z: float
    mu: float
    sigma: float
    family = "quantile"

    @classmethod
    def from_confidence(cls, confidence: float, mu: float, sigma: float) -> "QuantileCurve":
        if not 0.0 < confidence < 1.0:
            raise ValueError(f"confidence must lie in (0, 1), got {confidence}")
        return cls(z=std_normal_ppf(confidence), mu=mu, sigma=sigma)

    def log_level(self, t: float, spot: float) -> float:
        return self.mu * t + self.z * self.sigma * math.sqrt(t)

    def describe(self) -> str:
        return f"quantile(z={self.z:.4f}, mu={self.mu:g}, sigma={self.sigma:g})"


@dataclass(frozen=True)
class LinearPriceCurve(PriceCurve):
    """c(t) = C0 + C1 t."""

    c0: float
    c1: float
    family = "linear"

    def level(self, t: float) -> float:
        return self.c0 + self.c1 * t

    def describe(self) -> str:
        return f"linear(C0={self.c0:g}, C1={self.c1:g})"


@dataclass(frozen=True)
class ExponentialCurve(PriceCurve):
    """c(t) = A exp(delta t)."""

    a: float
    delta: float
    family = "exponential"

    def level(self, t: float) -> float:
        return self.a * math.exp(self.delta * t)

    def describe(self) -> str:
        return f"exponential(A={self.a:g}, delta={self.delta:g})"


@dataclass(frozen=True)
class TabulatedCurve(PriceCurve):
    """Piecewise-linear price curve through (time, level) points."""

    times: Tuple[float, ...]
    levels: Tuple[float, ...]
    family = "tabulated"

    def __post_init__(self):
        times = tuple(float(t) for t in self.times)
        levels = tuple(float(v) for v in self.levels)
        if len(times) != len(levels) or len(times) < 2:
            raise ValueError("tabulated curve needs at least two (time, level) points of equal length")
        if any(b <= a for a, b in zip(times, times[1:])):
            raise ValueError("tabulated curve times must be strictly increasing")
        if min(levels) <= 0.0:
            raise NonPositiveCurve(f"tabulated curve has a non-positive level {min(levels):g}")
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "levels", levels)

    @classmethod
    def from_points(cls, points: Sequence[Tuple[float, float]]) -> "TabulatedCurve":
        ordered = sorted(points)
        return cls(times=tuple(p[0] for p in ordered), levels=tuple(p[1] for p in ordered))

    @classmethod
    def from_file(cls, path: Union[str, Path]) -> "TabulatedCurve":
        """
        Read a two-column (time, level) table.

        Columns may be separated by commas or whitespace; blank lines and
        lines starting with '#' are skipped.
        """
        points = []
        for lineno, raw in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            fields = line.replace(",", " ").split()
            if len(fields) != 2:
                raise ValueError(f"{path}:{lineno}: expected two columns, got {len(fields)}")
            try:
                points.append((float(fields[0]), float(fields[1])))
            except ValueError as exc:
                raise ValueError(f"{path}:{lineno}: {exc}") from exc
        logger.debug(f"Loaded {len(points)} curve points from {path}")
        return cls.from_points(points)

    def level(self, t: float) -> float:
        if t < self.times[0] - 1e-12 or t > self.times[-1] + 1e-12:
            raise ValueError(f"t={t:g} outside the tabulated range [{self.times[0]:g}, {self.times[-1]:g}]")
        return float(np.interp(t, self.times, self.levels))

    def describe(self) -> str:
        return f"tabulated({len(self.times)} points)"
