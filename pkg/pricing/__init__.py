"""Analytic prices of icicled multi-step barrier options and closed-form references."""

from .black_scholes import CALL, PUT, EsscherParams, esscher_drifts, ordinary_doc, vanilla_bs
from .engine import (
    BarrierPricer,
    LegCache,
    LegValue,
    ParityCheck,
    PriceResult,
    parity_gap,
    price,
    price_many,
)

__all__ = [
    "CALL",
    "PUT",
    "EsscherParams",
    "esscher_drifts",
    "ordinary_doc",
    "vanilla_bs",
    "BarrierPricer",
    "LegCache",
    "LegValue",
    "ParityCheck",
    "PriceResult",
    "parity_gap",
    "price",
    "price_many",
]
