"""
Bivariate and trivariate standard normal distribution functions.

The bivariate routine follows Genz's BVND refinement of the Drezner and
Wesolowsky method: Gauss-Legendre quadrature of the Plackett integral for
moderate correlations and an asymptotic expansion near |rho| = 1. Absolute
accuracy is about 1e-15 on the whole parameter range.
"""

import math
from functools import lru_cache
from typing import Tuple

import numpy as np
from scipy import integrate

from .univariate import std_normal_cdf, std_normal_pdf

TWO_PI = 2.0 * math.pi


@lru_cache(maxsize=None)
def _legendre(order: int) -> Tuple[np.ndarray, np.ndarray]:
    # nodes shifted from [-1, 1] to [0, 2]
    nodes, weights = np.polynomial.legendre.leggauss(order)
    return 1.0 + nodes, weights


def _phi(z: float) -> float:
    return std_normal_cdf(z)


def _bvn_upper(h: float, k: float, r: float) -> float:
    """P(X > h, Y > k) for a standard bivariate normal with correlation r."""
    if h == math.inf or k == math.inf:
        return 0.0
    if h == -math.inf:
        return 1.0 if k == -math.inf else _phi(-k)
    if k == -math.inf:
        return _phi(-h)
    if r == 0.0:
        return _phi(-h) * _phi(-k)

    abs_r = abs(r)
    if abs_r < 0.3:
        x, w = _legendre(6)
    elif abs_r < 0.75:
        x, w = _legendre(12)
    else:
        x, w = _legendre(20)

    hk = h * k
    if abs_r < 0.925:
        hs = 0.5 * (h * h + k * k)
        asr = 0.5 * math.asin(r)
        sn = np.sin(asr * x)
        bvn = float(np.dot(np.exp((sn * hk - hs) / (1.0 - sn * sn)), w))
        bvn = bvn * asr / TWO_PI + _phi(-h) * _phi(-k)
        return min(1.0, max(0.0, bvn))

    if r < 0.0:
        k = -k
        hk = -hk
    bvn = 0.0
    if abs_r < 1.0:
        a_s = 1.0 - r * r
        a = math.sqrt(a_s)
        bs = (h - k) ** 2
        asr = -0.5 * (bs / a_s + hk)
        c = (4.0 - hk) / 8.0
        d = (12.0 - hk) / 80.0
        if asr > -100.0:
            bvn = a * math.exp(asr) * (1.0 - c * (bs - a_s) * (1.0 - d * bs) / 3.0 + c * d * a_s * a_s)
        if hk > -100.0:
            b = math.sqrt(bs)
            sp = math.sqrt(TWO_PI) * _phi(-b / a)
            bvn -= math.exp(-0.5 * hk) * sp * b * (1.0 - c * bs * (1.0 - d * bs) / 3.0)
        a *= 0.5
        xs = (a * x) ** 2
        asr_v = -0.5 * (bs / xs + hk)
        keep = asr_v > -100.0
        xs = xs[keep]
        sp = 1.0 + c * xs * (1.0 + 5.0 * d * xs)
        rs = np.sqrt(1.0 - xs)
        ep = np.exp(-0.5 * hk * xs / (1.0 + rs) ** 2) / rs
        bvn = (a * float(np.dot(np.exp(asr_v[keep]) * (sp - ep), w[keep])) - bvn) / TWO_PI

    if r > 0.0:
        bvn += _phi(-max(h, k))
    elif h >= k:
        bvn = -bvn
    else:
        if h < 0.0:
            span = _phi(k) - _phi(h)
        else:
            span = _phi(-h) - _phi(-k)
        bvn = span - bvn
    return min(1.0, max(0.0, bvn))


def bvn_cdf(a: float, b: float, rho: float) -> float:
    """
    P(Z1 <= a, Z2 <= b) for standard normals with correlation rho.

    Args:
        a: Upper limit of the first coordinate (may be +/-inf)
        b: Upper limit of the second coordinate (may be +/-inf)
        rho: Correlation in [-1, 1]

    Returns:
        Probability in [0, 1]
    """
    if not -1.0 <= rho <= 1.0:
        raise ValueError(f"correlation must lie in [-1, 1], got {rho}")
    if a == math.inf:
        return _phi(b)
    if b == math.inf:
        return _phi(a)
    return _bvn_upper(-a, -b, rho)


def _conditional_pair(r_aj: float, r_bj: float, r_ab: float) -> Tuple[float, float, float]:
    sa = math.sqrt(max(0.0, 1.0 - r_aj * r_aj))
    sb = math.sqrt(max(0.0, 1.0 - r_bj * r_bj))
    rho = (r_ab - r_aj * r_bj) / (sa * sb)
    return sa, sb, min(1.0, max(-1.0, rho))


def tvn_cdf(limits, corr, epsabs: float = 1e-13) -> Tuple[float, float, int]:
    """
    Trivariate orthant probability P(Z <= limits) by one-dimensional quadrature.

    Conditions on the coordinate with the weakest correlations to the other
    two and integrates the conditional bivariate CDF against its density.

    Args:
        limits: Three finite upper limits
        corr: 3x3 correlation matrix
        epsabs: Absolute tolerance handed to scipy.integrate.quad

    Returns:
        Tuple (value, error_estimate, integrand_evaluations)

    Raises:
        ValueError: When every conditioning choice leaves a degenerate pair
    """
    b = np.asarray(limits, dtype=float)
    r = np.asarray(corr, dtype=float)
    best = None
    for j in range(3):
        a_idx, b_idx = [i for i in range(3) if i != j]
        strength = max(abs(r[j, a_idx]), abs(r[j, b_idx]))
        if best is None or strength < best[0]:
            best = (strength, j, a_idx, b_idx)
    strength, j, ia, ib = best
    if strength > 1.0 - 1e-12:
        raise ValueError("trivariate problem is degenerate for every conditioning coordinate")

    r_aj, r_bj = r[ia, j], r[ib, j]
    sa, sb, rho = _conditional_pair(r_aj, r_bj, r[ia, ib])
    evaluations = 0

    def integrand(z: float) -> float:
        nonlocal evaluations
        evaluations += 1
        return std_normal_pdf(z) * bvn_cdf((b[ia] - r_aj * z) / sa, (b[ib] - r_bj * z) / sb, rho)

    value, error = integrate.quad(integrand, -math.inf, b[j], epsabs=epsabs, epsrel=1e-12, limit=200)
    return min(1.0, max(0.0, value)), float(error), evaluations
