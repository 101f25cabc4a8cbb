"""
Standard normal distribution function.
"""

import math
from typing import Union

import numpy as np
from scipy import special

ArrayLike = Union[float, np.ndarray]


def std_normal_cdf(z: ArrayLike) -> ArrayLike:
    """
    Phi(z) for scalars or arrays.

    Uses the Cephes ``ndtr`` evaluation (erf/erfc rational approximations),
    accurate to a few ulps over the whole real line; +/-inf map to 1/0.

    Args:
        z: Point(s) at which to evaluate

    Returns:
        Probability with the same shape as z
    """
    if np.isscalar(z):
        return float(special.ndtr(float(z)))
    return special.ndtr(np.asarray(z, dtype=float))


def std_normal_pdf(z: ArrayLike) -> ArrayLike:
    """phi(z) for scalars or arrays."""
    if np.isscalar(z):
        z = float(z)
        return math.exp(-0.5 * z * z) / math.sqrt(2.0 * math.pi)
    z = np.asarray(z, dtype=float)
    return np.exp(-0.5 * z * z) / math.sqrt(2.0 * math.pi)


def std_normal_ppf(p: ArrayLike) -> ArrayLike:
    """Inverse of Phi."""
    if np.isscalar(p):
        return float(special.ndtri(float(p)))
    return special.ndtri(np.asarray(p, dtype=float))
