"""
Black-Scholes closed forms written in the log-strike parameterization k = ln(K/S0).
"""

import math
from dataclasses import dataclass
from typing import Optional, Tuple

from gaussian.univariate import std_normal_cdf

CALL = "call"
PUT = "put"


@dataclass(frozen=True)
class EsscherParams:
    """
    Esscher tilt taking a log-price drift mu to the risk-neutral one.

    h_star solves mu + h_star * sigma^2 = r - sigma^2/2; the call/put legs are
    probabilities under the drifts d_minus = r - sigma^2/2 (tilt h_star) and
    d_plus = r + sigma^2/2 (tilt h_star + 1).
    """

    h_star: float
    d_minus: float
    d_plus: float

    @classmethod
    def from_market(cls, rate: float, vol: float, drift: Optional[float] = None) -> "EsscherParams":
        d_minus, d_plus = esscher_drifts(rate, vol)
        mu = d_minus if drift is None else drift
        return cls(h_star=(d_minus - mu) / (vol * vol), d_minus=d_minus, d_plus=d_plus)


def esscher_drifts(rate: float, vol: float) -> Tuple[float, float]:
    """(r - sigma^2/2, r + sigma^2/2)."""
    if not vol > 0.0:
        raise ValueError(f"volatility must be positive, got {vol}")
    half_var = 0.5 * vol * vol
    return rate - half_var, rate + half_var


def vanilla_bs(kind: str, spot: float, strike: float, rate: float, vol: float, maturity: float) -> float:
    """
    European call or put price.

    Args:
        kind: "call" or "put"
        spot: S0
        strike: K (K -> 0 is allowed)
        rate: Continuous risk-free rate
        vol: Volatility
        maturity: T in years

    Returns:
        Price in currency units
    """
    if kind not in (CALL, PUT):
        raise ValueError(f"kind must be 'call' or 'put', got {kind!r}")
    d_minus, d_plus = esscher_drifts(rate, vol)
    discount = strike * math.exp(-rate * maturity)
    if strike <= 0.0:
        return spot if kind == CALL else 0.0
    k = math.log(strike / spot)
    sd = vol * math.sqrt(maturity)
    if kind == CALL:
        return spot * std_normal_cdf(-(k - d_plus * maturity) / sd) - discount * std_normal_cdf(-(k - d_minus * maturity) / sd)
    return discount * std_normal_cdf((k - d_minus * maturity) / sd) - spot * std_normal_cdf((k - d_plus * maturity) / sd)


def ordinary_doc(spot: float, strike: float, barrier: float, rate: float, vol: float, maturity: float) -> float:
    """
    Continuously monitored down-and-out call with a single flat barrier B1 < S0.

    Four normal CDF terms with reflection weights e^{(2r/sigma^2 +/- 1) m1}
    and limits built from (-k) ^ (-m1).
    """
    if not 0.0 <= barrier < spot:
        raise ValueError(f"barrier must lie in [0, spot), got {barrier}")
    if barrier == 0.0:
        return vanilla_bs(CALL, spot, strike, rate, vol, maturity)
    d_minus, d_plus = esscher_drifts(rate, vol)
    k = math.log(strike / spot)
    m1 = math.log(barrier / spot)
    cap = min(-k, -m1)
    sd = vol * math.sqrt(maturity)
    ratio = 2.0 * rate / (vol * vol)
    discount = strike * math.exp(-rate * maturity)

    asset_leg = (std_normal_cdf((cap + d_plus * maturity) / sd)
                 - math.exp((ratio + 1.0) * m1) * std_normal_cdf((cap + 2.0 * m1 + d_plus * maturity) / sd))
    cash_leg = (std_normal_cdf((cap + d_minus * maturity) / sd)
                - math.exp((ratio - 1.0) * m1) * std_normal_cdf((cap + 2.0 * m1 + d_minus * maturity) / sd))
    return spot * asset_leg - discount * cash_leg
