"""
Multi-step reflection probabilities and their inclusion-exclusion assembly.

For a drifted Brownian motion X(t) = mu t + sigma W(t) and an up barrier that
is m_i on [t_{i-1}, t_i] for i in I, the survival probability with icicles

    PA_u = P(X stays below m_i on every step of I, X(t_i) <= x_i for all i)

is the alternating sum over subsets J of I of reflected orthant probabilities.
Down barriers are handled by mirroring.
"""

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from itertools import combinations
from typing import Dict, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np

from config import settings
from domain.errors import HypothesisViolated
from domain.models import Direction, TimeGrid
from domain.transforms import default_icicles
from gaussian.mvn import MvnOptions, MvnProblem, mvn_cdf_with
from utils.logger import get_logger
from .sequence import reflection_sequence

logger = get_logger(__name__)

# Slack on the reflection preconditions for levels computed in floating point
HYPOTHESIS_SLACK = 1e-12

Levels = Union[Mapping[int, float], Sequence[float]]


@dataclass(frozen=True)
class ReflectionOptions:
    """Controls for the inclusion-exclusion sum."""

    prune_eps: float = field(default_factory=lambda: settings.prune_eps)
    mvn: MvnOptions = field(default_factory=MvnOptions)
    workers: int = field(default_factory=lambda: settings.workers)
    keep_terms: bool = False

    def __post_init__(self):
        if self.prune_eps < 0.0:
            raise ValueError(f"prune_eps must be >= 0, got {self.prune_eps}")
        if self.workers < 1:
            raise ValueError(f"workers must be >= 1, got {self.workers}")


@dataclass(frozen=True)
class SubsetTerm:
    """One inclusion-exclusion term: weight * P(reflected orthant) for subset J."""

    subset: Tuple[int, ...]
    weight: float
    probability: float
    mvn_error: float

    @property
    def sign(self) -> int:
        return -1 if len(self.subset) % 2 else 1

    @property
    def value(self) -> float:
        """Unsigned term e^{2 mu m[n] / sigma^2} * P(...)."""
        return self.weight * self.probability

    @property
    def signed_value(self) -> float:
        return self.sign * self.value

    @property
    def error(self) -> float:
        return self.weight * self.mvn_error


@dataclass(frozen=True)
class PaResult:
    """Survival probability with its error budget and enumeration diagnostics."""

    probability: float
    raw_sum: float
    error_bound: float
    subsets_evaluated: int
    subsets_pruned: int = 0
    skipped_mass_bound: float = 0.0
    terms: Tuple[SubsetTerm, ...] = ()

    def as_dict(self) -> Dict[str, float]:
        return {
            "probability": self.probability,
            "raw_sum": self.raw_sum,
            "error_bound": self.error_bound,
            "subsets_evaluated": self.subsets_evaluated,
            "subsets_pruned": self.subsets_pruned,
        }


def as_level_map(m: Levels) -> Dict[int, float]:
    """Accept {i: m_i} or a full list m_1..m_n."""
    if isinstance(m, Mapping):
        return {int(i): float(v) for i, v in m.items()}
    return {i + 1: float(v) for i, v in enumerate(m)}


def check_hypotheses(x: Sequence[float], m: Mapping[int, float], subset: Sequence[int]) -> None:
    """
    Verify the reflection preconditions for a subset J.

    Requires m_1 >= 0 when 1 is in J, and x_{i-1} <= m_i, x_i <= m_i for
    every i in J. Checking against the full barrier set covers every subset.

    Raises:
        HypothesisViolated: naming J and the failing inequality
    """
    J = tuple(sorted(subset))
    for i in J:
        if i == 1 and m[1] < -HYPOTHESIS_SLACK:
            raise HypothesisViolated(f"m_1 = {m[1]:.6g} is negative", subset=J, inequality="m_1 >= 0")
        if x[i - 1] > m[i] + HYPOTHESIS_SLACK:
            raise HypothesisViolated(
                f"icicle x_{i} = {x[i - 1]:.6g} exceeds barrier m_{i} = {m[i]:.6g}",
                subset=J, inequality=f"x_{i} <= m_{i}",
            )
        if i >= 2 and x[i - 2] > m[i] + HYPOTHESIS_SLACK:
            raise HypothesisViolated(
                f"icicle x_{i - 1} = {x[i - 2]:.6g} exceeds barrier m_{i} = {m[i]:.6g}",
                subset=J, inequality=f"x_{i - 1} <= m_{i}",
            )


def _term(subset: Tuple[int, ...], x: np.ndarray, m: Mapping[int, float], t: np.ndarray,
          mu: float, sigma: float, mvn: MvnOptions) -> SubsetTerm:
    seq = reflection_sequence(subset, m, len(t))
    s = np.asarray(seq.s, dtype=float)
    folded = np.asarray(seq.m[1:], dtype=float)
    with np.errstate(invalid="ignore"):
        z = (x - 2.0 * folded - s * mu * t) / (sigma * np.sqrt(t))
    z[np.isposinf(x)] = math.inf
    z[np.isneginf(x)] = -math.inf
    corr = np.outer(s, s) * np.sqrt(np.minimum.outer(t, t) / np.maximum.outer(t, t))
    estimate = mvn_cdf_with(MvnProblem(z, corr), mvn)
    weight = math.exp(2.0 * mu * seq.terminal / (sigma * sigma)) if mu != 0.0 else 1.0
    return SubsetTerm(subset=subset, weight=weight, probability=estimate.value, mvn_error=estimate.error_bound)


def _prepare(x: Sequence[float], m: Levels, grid: TimeGrid) -> Tuple[np.ndarray, Dict[int, float], np.ndarray]:
    levels = as_level_map(m)
    limits = np.asarray(x, dtype=float)
    if limits.shape[0] != grid.n:
        raise ValueError(f"expected {grid.n} icicle limits, got {limits.shape[0]}")
    for i in levels:
        if not 1 <= i <= grid.n:
            raise ValueError(f"barrier index {i} outside 1..{grid.n}")
    return limits, levels, grid.t


def reflected_upper_prob(x: Sequence[float], subset: Sequence[int], m: Levels, grid: TimeGrid,
                         mu: float, sigma: float, mvn: Optional[MvnOptions] = None) -> SubsetTerm:
    """
    e^{2 mu m[n] / sigma^2} * P(s_i X(t_i) + 2 m[i] <= x_i for all i).

    Args:
        x: Limits x_1..x_n (+inf where unconstrained)
        subset: J
        m: Log-levels over I (J must be a subset of I)
        grid: Monitoring times
        mu: Drift of X
        sigma: Volatility of X
        mvn: MVN accuracy options

    Returns:
        SubsetTerm holding the weight, the orthant probability and its error

    Raises:
        HypothesisViolated: a reflection precondition fails for J
    """
    limits, levels, t = _prepare(x, m, grid)
    J = tuple(sorted(set(subset)))
    check_hypotheses(limits, levels, J)
    return _term(J, limits, levels, t, mu, sigma, mvn or MvnOptions())


def _mask(subset: Sequence[int]) -> int:
    bits = 0
    for i in subset:
        bits |= 1 << i
    return bits


def pa_u(mu: float, sigma: float, x: Sequence[float], m: Levels, grid: TimeGrid,
         options: Optional[ReflectionOptions] = None) -> PaResult:
    """
    Up-barrier survival probability with icicles by inclusion-exclusion.

    Subsets are enumerated by nondecreasing size, lexicographically within
    a size. With prune_eps > 0, a subset whose unsigned term (the probability
    that the path ends inside the icicles after crossing every barrier in J)
    falls below prune_eps blocks all of its supersets. A superset's term is
    never larger, so each skipped subset adds prune_eps to the reported error.

    Args:
        mu: Drift of the log-price
        sigma: Volatility
        x: Icicle limits x_1..x_n in log space (+inf for none)
        m: Barrier log-levels over I
        grid: Monitoring times
        options: Pruning, MVN accuracy and worker settings

    Returns:
        PaResult with the clamped probability, raw sum and diagnostics

    Raises:
        HypothesisViolated: naming the offending subset
    """
    options = options or ReflectionOptions()
    limits, levels, t = _prepare(x, m, grid)
    index_set = tuple(sorted(levels))
    check_hypotheses(limits, levels, index_set)

    blocked: List[int] = []
    evaluated: List[SubsetTerm] = []
    pruned = 0
    skipped_mass = 0.0

    executor = ThreadPoolExecutor(max_workers=options.workers) if options.workers > 1 else None
    try:
        for size in range(len(index_set) + 1):
            level = []
            for subset in combinations(index_set, size):
                bits = _mask(subset)
                if any(b & bits == b for b in blocked):
                    pruned += 1
                    skipped_mass += options.prune_eps
                    continue
                level.append(subset)
            if not level:
                continue

            def evaluate(subset: Tuple[int, ...]) -> SubsetTerm:
                return _term(subset, limits, levels, t, mu, sigma, options.mvn)

            terms = list(executor.map(evaluate, level)) if executor else [evaluate(s) for s in level]
            evaluated.extend(terms)
            if options.prune_eps > 0.0:
                blocked.extend(_mask(term.subset) for term in terms
                               if term.subset and term.value < options.prune_eps)
    finally:
        if executor is not None:
            executor.shutdown(wait=True)

    raw = math.fsum(term.signed_value for term in evaluated)
    mvn_error = sum(term.error for term in evaluated)
    logger.debug(
        f"PA_u over |I|={len(index_set)}: evaluated={len(evaluated)} pruned={pruned} "
        f"raw={raw:.10f} mvn_error={mvn_error:.2e}"
    )
    return PaResult(
        probability=min(1.0, max(0.0, raw)),
        raw_sum=raw,
        error_bound=mvn_error + skipped_mass,
        subsets_evaluated=len(evaluated),
        subsets_pruned=pruned,
        skipped_mass_bound=skipped_mass,
        terms=tuple(evaluated) if options.keep_terms else (),
    )


def pa_d(mu: float, sigma: float, x: Sequence[float], m: Levels, grid: TimeGrid,
         options: Optional[ReflectionOptions] = None) -> PaResult:
    """
    Down-barrier survival probability: PA_u of the mirrored problem.

    x uses -inf where unconstrained; negation maps it to the up sentinel.
    """
    levels = as_level_map(m)
    return pa_u(-mu, sigma, [-v for v in x], {i: -v for i, v in levels.items()}, grid, options)


def subset_terms(mu: float, sigma: float, x: Sequence[float], m: Levels, grid: TimeGrid,
                 subsets: Optional[Sequence[Sequence[int]]] = None,
                 mvn: Optional[MvnOptions] = None) -> List[SubsetTerm]:
    """
    Individual inclusion-exclusion terms, without pruning.

    Args:
        subsets: Subsets to evaluate; defaults to every subset of I in enumeration order

    Returns:
        List of SubsetTerm in the order requested
    """
    limits, levels, t = _prepare(x, m, grid)
    index_set = tuple(sorted(levels))
    check_hypotheses(limits, levels, index_set)
    if subsets is None:
        subsets = [s for size in range(len(index_set) + 1) for s in combinations(index_set, size)]
    mvn = mvn or MvnOptions()
    result = []
    for subset in subsets:
        J = tuple(sorted(set(subset)))
        if not set(J) <= set(index_set):
            raise ValueError(f"subset {J} is not contained in the barrier set {index_set}")
        result.append(_term(J, limits, levels, t, mu, sigma, mvn))
    return result


def survival_prob_no_icicles(mu: float, sigma: float, m: Levels, grid: TimeGrid,
                             options: Optional[ReflectionOptions] = None,
                             direction: Direction = Direction.UP) -> PaResult:
    """
    P(no barrier crossing on any step) for a barrier on every step.

    Uses the barrier-implied icicles x_i = m_i ^ m_{i+1} (x_n = m_n) for an
    up barrier and the mirrored rule for a down barrier.
    """
    levels = as_level_map(m)
    if sorted(levels) != list(range(1, grid.n + 1)):
        raise ValueError(f"expected barrier levels on all {grid.n} steps, got indices {sorted(levels)}")
    x = default_icicles(levels, grid.n, direction)
    if direction is Direction.UP:
        return pa_u(mu, sigma, x, levels, grid, options)
    return pa_d(mu, sigma, x, levels, grid, options)
