"""Curved barriers approximated by multi-step barriers."""

from .barriers import (
    CurvedBarrier,
    DiscretizationRule,
    ExponentialCurve,
    LinearPriceCurve,
    PriceCurve,
    QuantileCurve,
    TabulatedCurve,
)
from .approximation import (
    CurveSurvival,
    RefinementPoint,
    curved_contract,
    discretize,
    price_curved,
    refinement_study,
    survival_prob,
)

__all__ = [
    "CurvedBarrier",
    "DiscretizationRule",
    "ExponentialCurve",
    "LinearPriceCurve",
    "PriceCurve",
    "QuantileCurve",
    "TabulatedCurve",
    "CurveSurvival",
    "RefinementPoint",
    "curved_contract",
    "discretize",
    "price_curved",
    "refinement_study",
    "survival_prob",
]
