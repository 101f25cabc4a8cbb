"""
Exception hierarchy for the pricing engine.

Every error carries a stable ``code`` and can render itself as a
machine-readable record for the command-line front end.
"""

from typing import Any, Dict, Optional, Sequence


class PricingError(Exception):
    """Base class for all engine errors."""

    def __init__(self, message: str, **details: Any):
        super().__init__(message)
        self.message = message
        self.details = details

    @property
    def code(self) -> str:
        return type(self).__name__

    def to_record(self) -> Dict[str, Any]:
        """Render the error as a JSON-serializable dict."""
        record: Dict[str, Any] = {"error": self.code, "message": self.message}
        for key, value in self.details.items():
            if isinstance(value, (set, frozenset, tuple)):
                value = sorted(value) if isinstance(value, (set, frozenset)) else list(value)
            record[key] = value
        return record


# Input validation

class ValidationError(PricingError):
    """An input violates a domain invariant."""


class NonIncreasingGrid(ValidationError):
    pass


class NonPositiveVol(ValidationError):
    pass


class NonPositiveSpot(ValidationError):
    pass


class InvalidBarrierLevel(ValidationError):
    """Barrier or icicle index outside 1..n, or a non-positive level."""


class BarrierDirectionMismatch(ValidationError):
    pass


class ImmediateKnock(ValidationError):
    """The first barrier sits on the knocked side of the spot at time 0."""


# Numerical engine

class DimensionTooLarge(PricingError):
    pass


class NotPSD(PricingError):
    pass


# Probability layer

class HypothesisViolated(PricingError):
    """Reflection identity preconditions fail for a barrier subset."""

    def __init__(self, message: str, subset: Optional[Sequence[int]] = None, inequality: str = ""):
        super().__init__(message, subset=list(subset or []), inequality=inequality)
        self.subset = tuple(subset or ())
        self.inequality = inequality


# Curved barriers

class NonPositiveCurve(PricingError):
    pass


# Monte Carlo validation

class ZeroReference(PricingError):
    """An analytic reference value of zero makes the relative error undefined."""

    def __init__(self, message: str, excluded: Sequence[int]):
        super().__init__(message, excluded=list(excluded))
        self.excluded = tuple(excluded)


# Command line

class ScenarioError(ValidationError):
    """A scenario file is malformed or contains unknown keys."""
