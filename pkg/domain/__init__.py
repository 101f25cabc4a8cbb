"""Domain types, validation and log-space transforms."""

from .errors import (
    PricingError,
    ValidationError,
    NonIncreasingGrid,
    NonPositiveVol,
    NonPositiveSpot,
    InvalidBarrierLevel,
    BarrierDirectionMismatch,
    ImmediateKnock,
    DimensionTooLarge,
    NotPSD,
    HypothesisViolated,
    NonPositiveCurve,
    ZeroReference,
    ScenarioError,
)
from .models import (
    MIN_TIME_GAP,
    Direction,
    OptionType,
    TimeGrid,
    MarketParams,
    BarrierSpec,
    LogBarrier,
    OptionContract,
)
from .transforms import (
    ValidatedBundle,
    validate,
    validate_contract,
    is_knocked_at_start,
    to_log_space,
    default_icicles,
    effective_icicles,
)

__all__ = [
    "PricingError",
    "ValidationError",
    "NonIncreasingGrid",
    "NonPositiveVol",
    "NonPositiveSpot",
    "InvalidBarrierLevel",
    "BarrierDirectionMismatch",
    "ImmediateKnock",
    "DimensionTooLarge",
    "NotPSD",
    "HypothesisViolated",
    "NonPositiveCurve",
    "ZeroReference",
    "ScenarioError",
    "MIN_TIME_GAP",
    "Direction",
    "OptionType",
    "TimeGrid",
    "MarketParams",
    "BarrierSpec",
    "LogBarrier",
    "OptionContract",
    "ValidatedBundle",
    "validate",
    "validate_contract",
    "is_knocked_at_start",
    "to_log_space",
    "default_icicles",
    "effective_icicles",
]
