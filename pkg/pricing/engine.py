"""
Prices of the eight icicled multi-step barrier options.

Every price is a combination of survival probabilities under the two
Esscher drifts: S0 * PA(d+) - K e^{-rT} * PA(d-) for the out-options, with
the strike folded into the last icicle, and the normal-CDF-minus-PA forms
for the in-options.
"""

import math
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

from pydantic import BaseModel, Field

from domain.models import Direction, LogBarrier, MarketParams, OptionContract, OptionType
from domain.transforms import effective_icicles, to_log_space, validate_contract
from gaussian.univariate import std_normal_cdf
from reflection.probability import PaResult, ReflectionOptions, pa_d, pa_u
from utils.logger import get_logger
from .black_scholes import CALL, PUT, esscher_drifts, vanilla_bs

logger = get_logger(__name__)


class LegValue(BaseModel):
    """One survival probability entering a price."""
    drift_name: str
    drift: float
    last_limit: float
    probability: float
    error_bound: float
    subsets_evaluated: int = 0
    subsets_pruned: int = 0


class PriceResult(BaseModel):
    """Analytic price with its legs and error budget."""
    option_type: str
    strike: float
    price: float
    vanilla: float
    error_bound: float = 0.0
    branch: str = "formula"
    legs: List[LegValue] = Field(default_factory=list)

    @property
    def subsets_evaluated(self) -> int:
        return sum(leg.subsets_evaluated for leg in self.legs)

    @property
    def subsets_pruned(self) -> int:
        return sum(leg.subsets_pruned for leg in self.legs)


class ParityCheck(BaseModel):
    """out + in - vanilla for a contract and its partner."""
    out_price: float
    in_price: float
    vanilla: float
    gap: float
    error_bound: float


class LegCache:
    """Memoizes survival probabilities shared by contracts on the same barrier."""

    def __init__(self):
        self._values: Dict[Tuple, PaResult] = {}
        self.hits = 0

    def get(self, direction: Direction, mu: float, sigma: float, x: Tuple[float, ...],
            m: Dict[int, float], times: Tuple[float, ...], options: ReflectionOptions, compute) -> PaResult:
        key = (direction, mu, sigma, x, tuple(sorted(m.items())), times, options.prune_eps,
               options.mvn.target_abs_error, options.mvn.seed, options.mvn.method)
        if key in self._values:
            self.hits += 1
            return self._values[key]
        value = compute()
        self._values[key] = value
        return value


@dataclass(frozen=True)
class _Setup:
    contract: OptionContract
    market: MarketParams
    log_barrier: LogBarrier
    d_minus: float
    d_plus: float
    discount: float

    @property
    def sd(self) -> float:
        return self.market.vol * math.sqrt(self.contract.grid.maturity)

    @property
    def maturity(self) -> float:
        return self.contract.grid.maturity

    @property
    def k(self) -> float:
        return self.log_barrier.k

    @property
    def x_n(self) -> float:
        return self.log_barrier.x[-1]


class BarrierPricer:
    """
    Evaluates the pricing formulas for one validated contract.

    Survival legs go through PA_u for up barriers and PA_d for down barriers;
    a LegCache lets a batch of contracts share them.
    """

    def __init__(self, options: Optional[ReflectionOptions] = None, cache: Optional[LegCache] = None):
        self.options = options or ReflectionOptions()
        self.cache = cache if cache is not None else LegCache()

    def _leg(self, setup: _Setup, drift_name: str, last_limit: float) -> LegValue:
        mu = setup.d_minus if drift_name == "d-" else setup.d_plus
        sigma = setup.market.vol
        barrier = setup.log_barrier
        x = barrier.x[:-1] + (last_limit,)
        survival = pa_u if barrier.direction is Direction.UP else pa_d

        def compute() -> PaResult:
            return survival(mu, sigma, x, dict(barrier.m), setup.contract.grid, self.options)

        result = self.cache.get(barrier.direction, mu, sigma, x, dict(barrier.m),
                                setup.contract.grid.times, self.options, compute)
        return LegValue(
            drift_name=drift_name,
            drift=mu,
            last_limit=last_limit,
            probability=result.raw_sum,
            error_bound=result.error_bound,
            subsets_evaluated=result.subsets_evaluated,
            subsets_pruned=result.subsets_pruned,
        )

    def _error(self, setup: _Setup, legs: Sequence[LegValue]) -> float:
        spot = setup.market.spot
        return sum((spot if leg.drift_name == "d+" else setup.discount) * leg.error_bound for leg in legs)

    def _cdf_up(self, setup: _Setup, drift: float) -> float:
        """P(X(T) <= k) under the given drift."""
        return std_normal_cdf((setup.k - drift * setup.maturity) / setup.sd)

    def _cdf_down(self, setup: _Setup, drift: float) -> float:
        """P(X(T) >= k) under the given drift."""
        return std_normal_cdf((-setup.k + drift * setup.maturity) / setup.sd)

    def up_put(self, setup: _Setup, knock_in: bool) -> Tuple[float, List[LegValue], str]:
        limit = min(setup.x_n, setup.k)
        cash, asset = self._leg(setup, "d-", limit), self._leg(setup, "d+", limit)
        if not knock_in:
            price = setup.discount * cash.probability - setup.market.spot * asset.probability
        else:
            price = (setup.discount * (self._cdf_up(setup, setup.d_minus) - cash.probability)
                     - setup.market.spot * (self._cdf_up(setup, setup.d_plus) - asset.probability))
        return price, [cash, asset], "formula"

    def up_call(self, setup: _Setup, knock_in: bool) -> Tuple[float, List[LegValue], str]:
        if setup.k >= setup.x_n:
            if knock_in:
                return self._vanilla(setup, CALL), [], "strike_above_icicle"
            return 0.0, [], "strike_above_icicle"
        asset_x, asset_k = self._leg(setup, "d+", setup.x_n), self._leg(setup, "d+", setup.k)
        cash_x, cash_k = self._leg(setup, "d-", setup.x_n), self._leg(setup, "d-", setup.k)
        asset = asset_x.probability - asset_k.probability
        cash = cash_x.probability - cash_k.probability
        if knock_in:
            asset = self._cdf_down(setup, setup.d_plus) - asset
            cash = self._cdf_down(setup, setup.d_minus) - cash
        price = setup.market.spot * asset - setup.discount * cash
        return price, [asset_x, asset_k, cash_x, cash_k], "formula"

    def down_call(self, setup: _Setup, knock_in: bool) -> Tuple[float, List[LegValue], str]:
        limit = max(setup.x_n, setup.k)
        cash, asset = self._leg(setup, "d-", limit), self._leg(setup, "d+", limit)
        if not knock_in:
            price = setup.market.spot * asset.probability - setup.discount * cash.probability
        else:
            price = (setup.market.spot * (self._cdf_down(setup, setup.d_plus) - asset.probability)
                     - setup.discount * (self._cdf_down(setup, setup.d_minus) - cash.probability))
        return price, [cash, asset], "formula"

    def down_put(self, setup: _Setup, knock_in: bool) -> Tuple[float, List[LegValue], str]:
        if setup.k <= setup.x_n:
            if knock_in:
                return self._vanilla(setup, PUT), [], "strike_below_icicle"
            return 0.0, [], "strike_below_icicle"
        cash_x, cash_k = self._leg(setup, "d-", setup.x_n), self._leg(setup, "d-", setup.k)
        asset_x, asset_k = self._leg(setup, "d+", setup.x_n), self._leg(setup, "d+", setup.k)
        cash = cash_x.probability - cash_k.probability
        asset = asset_x.probability - asset_k.probability
        if knock_in:
            cash = self._cdf_up(setup, setup.d_minus) - cash
            asset = self._cdf_up(setup, setup.d_plus) - asset
        price = setup.discount * cash - setup.market.spot * asset
        return price, [cash_x, cash_k, asset_x, asset_k], "formula"

    def _vanilla(self, setup: _Setup, kind: str) -> float:
        m = setup.market
        return vanilla_bs(kind, m.spot, setup.contract.strike, m.rate, m.vol, setup.maturity)

    def price(self, contract: OptionContract, market: MarketParams) -> PriceResult:
        bundle = validate_contract(contract, market, allow_immediate_knock=True)
        option_type = contract.option_type
        kind = CALL if option_type.is_call else PUT
        maturity = contract.grid.maturity
        vanilla = vanilla_bs(kind, market.spot, contract.strike, market.rate, market.vol, maturity)

        if bundle.knocked_at_start:
            logger.debug(f"{option_type.value}: barrier breached at t=0")
            return PriceResult(option_type=option_type.value, strike=contract.strike,
                               price=vanilla if option_type.is_knock_in else 0.0,
                               vanilla=vanilla, branch="immediate_knock")

        log_barrier = effective_icicles(
            to_log_space(contract.barrier, market.spot, contract.strike, n=contract.grid.n)
        )
        d_minus, d_plus = esscher_drifts(market.rate, market.vol)
        setup = _Setup(contract=contract, market=market, log_barrier=log_barrier, d_minus=d_minus,
                       d_plus=d_plus, discount=contract.strike * math.exp(-market.rate * maturity))

        if option_type.direction is Direction.UP:
            handler = self.up_call if option_type.is_call else self.up_put
        else:
            handler = self.down_call if option_type.is_call else self.down_put
        value, legs, branch = handler(setup, option_type.is_knock_in)

        result = PriceResult(option_type=option_type.value, strike=contract.strike, price=value,
                             vanilla=vanilla, error_bound=self._error(setup, legs), branch=branch, legs=legs)
        logger.debug(f"{option_type.value} K={contract.strike:g}: price={value:.6f} "
                     f"error={result.error_bound:.2e} branch={branch}")
        return result


def price(contract: OptionContract, market: MarketParams,
          options: Optional[ReflectionOptions] = None) -> PriceResult:
    """
    Analytic price of an icicled multi-step barrier option.

    Args:
        contract: Option type, strike, grid and barrier
        market: Spot, rate and volatility
        options: Reflection and MVN accuracy settings

    Returns:
        PriceResult

    Raises:
        ValidationError: invalid inputs (an immediate knock is priced, not raised)
        HypothesisViolated: icicles inconsistent with the barrier
    """
    return BarrierPricer(options).price(contract, market)


def price_many(contracts: Sequence[OptionContract], market: MarketParams,
               options: Optional[ReflectionOptions] = None) -> List[PriceResult]:
    """Price a batch in input order, sharing survival legs between contracts."""
    pricer = BarrierPricer(options)
    results = [pricer.price(contract, market) for contract in contracts]
    logger.debug(f"Priced {len(results)} contracts, {pricer.cache.hits} shared legs reused")
    return results


def parity_gap(contract: OptionContract, market: MarketParams,
               options: Optional[ReflectionOptions] = None) -> ParityCheck:
    """
    out + in - vanilla for the contract's type and its in/out partner.

    Both prices are computed from their own formulas, so the gap is an
    independent check bounded by the combined error.
    """
    pricer = BarrierPricer(options)
    first = pricer.price(contract, market)
    second = pricer.price(contract.with_type(contract.option_type.partner), market)
    out_result, in_result = (second, first) if contract.option_type.is_knock_in else (first, second)
    return ParityCheck(
        out_price=out_result.price,
        in_price=in_result.price,
        vanilla=first.vanilla,
        gap=out_result.price + in_result.price - first.vanilla,
        error_bound=out_result.error_bound + in_result.error_bound,
    )
