"""
Multivariate normal orthant probabilities P(Z <= b) with error estimates.

Dispatch order:
    - limits of -inf give 0, limits of +inf are marginalized out
    - dimensions 1-3 use the univariate, bivariate and trivariate routines
    - Gauss-Markov correlation chains (the Brownian-time structure) use a
      sequential Gauss-Legendre recursion over transition densities
    - everything else uses Genz's separation-of-variables transform
      integrated with a randomly shifted Richtmyer lattice
"""

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Optional, Sequence, Tuple

import numpy as np
from scipy import special

from config import settings
from domain.errors import DimensionTooLarge, NotPSD
from utils.logger import get_logger
from .bivariate import bvn_cdf, tvn_cdf
from .univariate import std_normal_cdf

logger = get_logger(__name__)

MAX_DIMENSION = 16
MIN_TARGET_ERROR = 1e-8
SYMMETRY_TOL = 1e-14
PIVOT_TOL = 1e-12
CHAIN_TOL = 1e-12
PSD_TOL = 1e-10
METHODS = ("auto", "qmc")

# Richtmyer lattice generators are square roots of these
PRIMES = (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53)


@dataclass(frozen=True, eq=False)
class MvnProblem:
    """Upper orthant problem: limits b (entries may be +/-inf) and correlation matrix R."""

    limits: np.ndarray
    corr: np.ndarray

    def __post_init__(self):
        b = np.array(self.limits, dtype=float).reshape(-1)
        r = np.array(self.corr, dtype=float)
        n = b.shape[0]
        if n < 1:
            raise ValueError("MVN problem needs at least one dimension")
        if r.shape != (n, n):
            raise NotPSD(f"correlation matrix shape {r.shape} does not match {n} limits", dimension=n)
        if np.isnan(b).any() or np.isnan(r).any():
            raise ValueError("MVN problem contains NaN")
        if np.max(np.abs(r - r.T)) > SYMMETRY_TOL:
            raise NotPSD("correlation matrix is not symmetric", dimension=n)
        if np.max(np.abs(np.diag(r) - 1.0)) > SYMMETRY_TOL:
            raise NotPSD("correlation matrix must have a unit diagonal", dimension=n)
        if np.max(np.abs(r)) > 1.0 + SYMMETRY_TOL:
            raise NotPSD("correlations must lie in [-1, 1]", dimension=n)
        if n > 2 and smallest_eigenvalue(n, _sign_normalized(r)) < -PSD_TOL:
            raise NotPSD("correlation matrix is not positive semidefinite", dimension=n)
        b.setflags(write=False)
        r.setflags(write=False)
        object.__setattr__(self, "limits", b)
        object.__setattr__(self, "corr", r)

    @property
    def n(self) -> int:
        return self.limits.shape[0]

    def reduced(self, keep: Sequence[int]) -> "MvnProblem":
        idx = np.asarray(keep, dtype=int)
        return MvnProblem(self.limits[idx], self.corr[np.ix_(idx, idx)])


@dataclass(frozen=True)
class CdfEstimate:
    """An orthant probability, its estimated absolute error and the integration effort."""

    value: float
    error_bound: float
    evaluations: int = 0
    method: str = "exact"


@dataclass(frozen=True)
class MvnOptions:
    """Accuracy controls for mvn_cdf."""

    target_abs_error: float = field(default_factory=lambda: settings.mvn_tol)
    seed: int = field(default_factory=lambda: settings.mvn_seed)
    method: str = "auto"

    def __post_init__(self):
        if self.method not in METHODS:
            raise ValueError(f"unknown MVN method '{self.method}', expected one of {METHODS}")
        if not self.target_abs_error >= MIN_TARGET_ERROR:
            raise ValueError(f"target_abs_error must be >= {MIN_TARGET_ERROR:g}, got {self.target_abs_error}")


def _clamp(value: float) -> float:
    return min(1.0, max(0.0, float(value)))


@lru_cache(maxsize=None)
def legendre_rule(count: int) -> Tuple[np.ndarray, np.ndarray]:
    """Gauss-Legendre nodes and weights on [-1, 1], shared read-only."""
    nodes, weights = np.polynomial.legendre.leggauss(count)
    nodes.setflags(write=False)
    weights.setflags(write=False)
    return nodes, weights


def _sign_normalized(r: np.ndarray) -> bytes:
    # D R D with D = diag(sign of row 0) has the same spectrum as R
    d = np.where(r[0] < 0.0, -1.0, 1.0)
    return (d[:, None] * r * d[None, :] + 0.0).tobytes()


@lru_cache(maxsize=4096)
def smallest_eigenvalue(n: int, key: bytes) -> float:
    """Smallest eigenvalue of the n x n matrix stored in key."""
    return float(np.linalg.eigvalsh(np.frombuffer(key, dtype=float).reshape(n, n))[0])


# Gauss-Markov chains

class MarkovChainRecursion:
    """
    Orthant probability of a Gauss-Markov chain Y_{i+1} = rho_i Y_i + sqrt(1 - rho_i^2) E_i.

    Each step pushes the truncated density through the Gaussian transition
    kernel on a Gauss-Legendre grid over [-LOWER, b_i]; the final step
    integrates the conditional survival of the last coordinate.
    """

    LOWER = 9.0
    MIN_NODES = 96
    MAX_NODES = 1500
    REFINE_NODES = 2400
    NODES_PER_SD = 3.0
    MIN_TRANSITION_SD = 0.02

    def __init__(self, limits: np.ndarray, rho: np.ndarray):
        self.limits = np.minimum(np.asarray(limits, dtype=float), self.LOWER)
        self.rho = np.asarray(rho, dtype=float)
        self.sd = np.sqrt(np.maximum(0.0, 1.0 - self.rho * self.rho))

    @classmethod
    def detect(cls, corr: np.ndarray) -> Optional[np.ndarray]:
        """Return the consecutive correlations when corr is a Markov chain, else None."""
        n = corr.shape[0]
        rho = np.array([corr[i, i + 1] for i in range(n - 1)])
        for i in range(n):
            running = 1.0
            for k in range(i + 1, n):
                running *= rho[k - 1]
                if abs(corr[i, k] - running) > CHAIN_TOL:
                    return None
        return rho

    @property
    def usable(self) -> bool:
        return bool(self.sd.min() >= self.MIN_TRANSITION_SD)

    def node_count(self) -> int:
        length = float(np.max(self.limits + self.LOWER))
        n = math.ceil(self.NODES_PER_SD * length / float(self.sd.min()))
        return int(min(self.MAX_NODES, max(self.MIN_NODES, n)))

    def _nodes(self, upper: float, count: int) -> Tuple[np.ndarray, np.ndarray]:
        x, w = legendre_rule(count)
        half = 0.5 * (upper + self.LOWER)
        return half * x + (upper - half), half * w

    def evaluate(self, count: int) -> float:
        b = self.limits
        if np.any(b <= -self.LOWER):
            return 0.0
        y, w = self._nodes(b[0], count)
        density = np.exp(-0.5 * y * y) / math.sqrt(2.0 * math.pi)
        last = len(b) - 1
        for i in range(last):
            rho, sd = self.rho[i], self.sd[i]
            mass = w * density
            if i == last - 1:
                return _clamp(np.dot(mass, special.ndtr((b[last] - rho * y) / sd)))
            y_next, w_next = self._nodes(b[i + 1], count)
            u = (y_next[:, None] - rho * y[None, :]) / sd
            density = np.exp(-0.5 * u * u) @ mass / (sd * math.sqrt(2.0 * math.pi))
            y, w = y_next, w_next
        return _clamp(np.dot(w, density))

    def estimate(self, target: float) -> Optional[CdfEstimate]:
        """
        Refine the grid by half again until two successive grids agree to target.

        Returns None when the next grid would exceed REFINE_NODES; the caller then
        falls back to the lattice integrator.
        """
        count = self.node_count()
        coarse = self.evaluate(count)
        evaluations = count
        abs_change = math.inf
        while True:
            fine_count = math.ceil(1.5 * count)
            if fine_count > self.REFINE_NODES:
                logger.debug(f"Markov chain recursion stalled at {count} nodes, last change {abs_change:.2e}")
                return None
            fine = self.evaluate(fine_count)
            evaluations += fine_count
            error = abs(fine - coarse) + 1e-14
            if error <= target:
                return CdfEstimate(value=fine, error_bound=error,
                                   evaluations=evaluations * len(self.limits), method="markov")
            count, coarse, abs_change = fine_count, fine, error


# Genz separation of variables with lattice QMC

def _permuted_cholesky(corr: np.ndarray, b: np.ndarray) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """
    Variable-prioritized Cholesky factor with rows scaled to a unit diagonal.

    At each step the remaining variable with the smallest conditional
    probability goes next. Pivots below PIVOT_TOL are treated as exact
    zeros: the row then carries its conditional mean only and the
    constraint becomes an indicator.

    Returns:
        Tuple (factor, scaled upper limits, degenerate-row mask)
    """
    n = corr.shape[0]
    c = corr.copy()
    bp = b.copy()
    y = np.zeros(n)
    degenerate = np.zeros(n, dtype=bool)
    sqrt_two_pi = math.sqrt(2.0 * math.pi)
    eps = np.finfo(float).eps

    for k in range(n):
        im, ckk, dem, bm = k, 0.0, 1.0, 0.0
        for i in range(k, n):
            if c[i, i] > eps:
                cii = math.sqrt(max(c[i, i], 0.0))
                s = float(c[i, :k] @ y[:k]) if k > 0 else 0.0
                bi = (bp[i] - s) / cii
                de = std_normal_cdf(bi)
                if de <= dem:
                    ckk, dem, bm, im = cii, de, bi, i
        if im > k:
            bp[[im, k]] = bp[[k, im]]
            c[im, im] = c[k, k]
            t = c[im, :k].copy()
            c[im, :k] = c[k, :k]
            c[k, :k] = t
            t = c[im + 1:, im].copy()
            c[im + 1:, im] = c[im + 1:, k]
            c[im + 1:, k] = t
            t = c[k + 1:im, k].copy()
            c[k + 1:im, k] = c[im, k + 1:im]
            c[im, k + 1:im] = t
        if ckk > PIVOT_TOL * (k + 1):
            c[k, k] = ckk
            c[k, k + 1:] = 0.0
            for i in range(k + 1, n):
                c[i, k] = c[i, k] / ckk
                c[i, k + 1:i + 1] -= c[i, k] * c[k + 1:i + 1, k]
            if dem > PIVOT_TOL:
                y[k] = -math.exp(-0.5 * bm * bm) / (sqrt_two_pi * dem)
            else:
                y[k] = bm
            c[k, :k + 1] /= ckk
            bp[k] /= ckk
        else:
            c[k:, k] = 0.0
            c[k, k + 1:] = 0.0
            degenerate[k] = True
            s = float(c[k, :k] @ y[:k]) if k > 0 else 0.0
            y[k] = s
    return np.tril(c), bp, degenerate


class GenzLattice:
    """
    Randomized-QMC integration of the separation-of-variables integrand.

    Uses a Richtmyer rank-1 lattice (square roots of primes) with independent
    uniform shifts per randomization and the baker's periodizing transform.
    The lattice size doubles until three standard errors across
    randomizations fall below the target.
    """

    RANDOMIZATIONS = 12
    START_POINTS = 2 ** 10
    MAX_POINTS = 2 ** 20
    CHUNK = 2 ** 15

    def __init__(self, problem: MvnProblem):
        try:
            self.factor, self.limits, self.degenerate = _permuted_cholesky(problem.corr, problem.limits)
        except (ValueError, FloatingPointError) as exc:
            raise NotPSD(f"factorization failed: {exc}", dimension=problem.n) from exc
        if np.isnan(self.factor).any():
            raise NotPSD("factorization produced NaN entries", dimension=problem.n)
        self.generators = np.sqrt(np.asarray(PRIMES[: max(problem.n - 1, 1)], dtype=float))

    def _integrand(self, points: np.ndarray) -> np.ndarray:
        """Evaluate the integrand at lattice points of shape (n-1, P)."""
        n = self.limits.shape[0]
        count = points.shape[1]
        values = np.ones(count)
        partial = np.zeros((n, count))
        upper = np.ones(count)
        for i in range(n):
            if i > 0:
                y = special.ndtri(np.clip(points[i - 1] * upper, 1e-300, 1.0 - 1e-16))
                partial[i:] += self.factor[i:, i - 1:i] * y
            bi = self.limits[i] - partial[i]
            if self.degenerate[i]:
                upper = (bi >= 0.0).astype(float)
                values *= upper
                upper = np.full(count, 0.5)
                continue
            upper = special.ndtr(bi)
            values *= upper
        return values

    def _shifted_mean(self, points_count: int, shift: np.ndarray) -> float:
        total = 0.0
        for start in range(1, points_count + 1, self.CHUNK):
            j = np.arange(start, min(points_count, start + self.CHUNK - 1) + 1, dtype=float)
            lattice = np.mod(self.generators[:, None] * j[None, :] + shift[:, None], 1.0)
            total += float(np.sum(self._integrand(np.abs(2.0 * lattice - 1.0))))
        return total / points_count

    def estimate(self, target: float, seed: int) -> CdfEstimate:
        rng = np.random.default_rng(seed)
        points = self.START_POINTS
        evaluations = 0
        while True:
            shifts = rng.random((self.RANDOMIZATIONS, self.generators.shape[0]))
            means = np.array([self._shifted_mean(points, s) for s in shifts])
            evaluations += points * self.RANDOMIZATIONS
            value = float(np.mean(means))
            error = 3.0 * float(np.std(means, ddof=1)) / math.sqrt(self.RANDOMIZATIONS)
            logger.debug(f"Lattice QMC: points={points} value={value:.10f} error={error:.2e}")
            if error <= target:
                break
            if points >= self.MAX_POINTS:
                logger.warning(
                    f"MVN target {target:.1e} not reached at {points} lattice points "
                    f"(dimension {len(self.limits)}): error estimate {error:.2e}"
                )
                break
            points *= 2
        return CdfEstimate(value=_clamp(value), error_bound=error, evaluations=evaluations, method="qmc")


def mvn_cdf(problem: MvnProblem, target_abs_error: Optional[float] = None,
            seed: Optional[int] = None, method: str = "auto") -> CdfEstimate:
    """
    P(Z_1 <= b_1, ..., Z_n <= b_n) for Z ~ N(0, R).

    Args:
        problem: Limits and correlation matrix
        target_abs_error: Requested absolute accuracy (>= 1e-8); defaults to settings
        seed: Seed for the lattice randomizations; defaults to settings
        method: "auto" (specialized routines when available) or "qmc"

    Returns:
        CdfEstimate, deterministic for fixed (problem, target, seed, method)

    Raises:
        DimensionTooLarge: n > 16
        NotPSD: R has no Cholesky-type factorization
    """
    options = MvnOptions(
        target_abs_error=settings.mvn_tol if target_abs_error is None else target_abs_error,
        seed=settings.mvn_seed if seed is None else seed,
        method=method,
    )
    if problem.n > MAX_DIMENSION:
        raise DimensionTooLarge(f"MVN dimension {problem.n} exceeds {MAX_DIMENSION}", dimension=problem.n)

    b = problem.limits
    if np.any(b == -math.inf):
        return CdfEstimate(value=0.0, error_bound=0.0)
    keep = np.flatnonzero(b != math.inf)
    if keep.size == 0:
        return CdfEstimate(value=1.0, error_bound=0.0)
    if keep.size < problem.n:
        problem = problem.reduced(keep)
    return _dispatch(problem, options)


def mvn_cdf_with(problem: MvnProblem, options: MvnOptions) -> CdfEstimate:
    """mvn_cdf driven by an options bundle."""
    return mvn_cdf(problem, options.target_abs_error, options.seed, options.method)


def _dispatch(problem: MvnProblem, options: MvnOptions) -> CdfEstimate:
    b, r = problem.limits, problem.corr
    n = problem.n

    if n == 1:
        return CdfEstimate(value=std_normal_cdf(b[0]), error_bound=1e-16, evaluations=1)
    if n == 2:
        return CdfEstimate(value=bvn_cdf(b[0], b[1], float(r[0, 1])), error_bound=1e-15,
                           evaluations=1, method="bvn")
    if n == 3:
        try:
            value, error, evaluations = tvn_cdf(b, r)
            return CdfEstimate(value=value, error_bound=error + 1e-15, evaluations=evaluations,
                               method="tvn")
        except ValueError:
            logger.debug("Degenerate trivariate problem, using the lattice integrator")
            return GenzLattice(problem).estimate(options.target_abs_error, options.seed)

    if options.method == "auto":
        rho = MarkovChainRecursion.detect(r)
        if rho is not None:
            chain = MarkovChainRecursion(b, rho)
            if chain.usable:
                estimate = chain.estimate(options.target_abs_error)
                if estimate is not None:
                    return estimate
            else:
                logger.debug("Markov chain transition too narrow for quadrature, using the lattice integrator")

    return GenzLattice(problem).estimate(options.target_abs_error, options.seed)
