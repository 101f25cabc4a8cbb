"""
Brownian-bridge barrier crossing probability.
"""

import math
from typing import Union

import numpy as np

ArrayLike = Union[float, np.ndarray]


def bridge_hit_prob(a: ArrayLike, b: ArrayLike, m: float, sigma: float, dt: float) -> ArrayLike:
    """
    P(a Brownian bridge from a to b over dt touches the up level m).

    exp(-2 (m - a)(m - b) / (sigma^2 dt)) when both ends lie below m, 1 otherwise.
    Mirror all three levels for a down barrier.

    Args:
        a: Log-level at the start of the step
        b: Log-level at the end of the step
        m: Barrier log-level
        sigma: Volatility
        dt: Step length (> 0)

    Returns:
        Hit probability, scalar or array like a and b
    """
    if not dt > 0.0:
        raise ValueError(f"step length must be positive, got {dt}")
    scale = sigma * sigma * dt
    if np.isscalar(a) and np.isscalar(b):
        if a >= m or b >= m:
            return 1.0
        if m == math.inf:
            return 0.0
        return math.exp(-2.0 * (m - a) * (m - b) / scale)

    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if m == math.inf:
        return np.zeros(np.broadcast(a, b).shape)
    gap_a = m - a
    gap_b = m - b
    crossed = (gap_a <= 0.0) | (gap_b <= 0.0)
    prob = np.exp(-2.0 * np.maximum(gap_a, 0.0) * np.maximum(gap_b, 0.0) / scale)
    return np.where(crossed, 1.0, prob)
