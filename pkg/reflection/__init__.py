"""Multi-step reflection principle and inclusion-exclusion survival probabilities."""

from .sequence import ReflectionSequence, reflection_sequence
from .probability import (
    ReflectionOptions,
    SubsetTerm,
    PaResult,
    as_level_map,
    check_hypotheses,
    reflected_upper_prob,
    pa_u,
    pa_d,
    subset_terms,
    survival_prob_no_icicles,
)
from .transition import KilledKernelQuadrature, survival_prob_by_quadrature

__all__ = [
    "ReflectionSequence",
    "reflection_sequence",
    "ReflectionOptions",
    "SubsetTerm",
    "PaResult",
    "as_level_map",
    "check_hypotheses",
    "reflected_upper_prob",
    "pa_u",
    "pa_d",
    "subset_terms",
    "survival_prob_no_icicles",
    "KilledKernelQuadrature",
    "survival_prob_by_quadrature",
]
