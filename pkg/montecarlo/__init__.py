"""Monte Carlo pricing with Brownian-bridge hit tests and validation helpers."""

from .bridge import bridge_hit_prob
from .simulator import (
    McConfig,
    McEstimate,
    PathSampler,
    batch_generator,
    simulate_price,
    simulate_prices,
    simulate_survival_prob,
)
from .validation import TableValidation, rms_relative_error, validate_table

__all__ = [
    "bridge_hit_prob",
    "McConfig",
    "McEstimate",
    "PathSampler",
    "batch_generator",
    "simulate_price",
    "simulate_prices",
    "simulate_survival_prob",
    "TableValidation",
    "rms_relative_error",
    "validate_table",
]
