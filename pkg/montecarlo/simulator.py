"""
Monte Carlo pricing with exact step sampling and Brownian-bridge hit tests.

Log-prices are sampled exactly at the monitoring times. On each monitored
step the barrier is flat, so drawing a uniform against the bridge crossing
probability decides a hit without discretization bias.

Every batch owns a Philox stream keyed by (seed, batch index); the per-batch
means are reduced in batch order, so estimates do not depend on the number
of workers.
"""

import math
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, Field

from config import settings
from domain.models import Direction, LogBarrier, MarketParams, OptionContract, TimeGrid
from domain.transforms import to_log_space, validate_contract
from utils.logger import get_logger
from .bridge import bridge_hit_prob

logger = get_logger(__name__)

SEED_MASK = (1 << 64) - 1


class McConfig(BaseModel):
    """Simulation size, seed and batching."""
    paths: int = Field(default_factory=lambda: settings.paths, ge=1, description="Total sample paths")
    seed: int = Field(default_factory=lambda: settings.seed, ge=0, description="Master seed")
    batches: int = Field(default_factory=lambda: settings.batches, ge=2, description="Batches for the SE")
    bridge: bool = Field(default_factory=lambda: settings.bridge, description="Brownian-bridge hit test")
    workers: int = Field(default_factory=lambda: settings.workers, ge=1, description="Worker threads")

    def batch_sizes(self) -> List[int]:
        base, extra = divmod(self.paths, self.batches)
        return [base + (1 if i < extra else 0) for i in range(self.batches)]


class McEstimate(BaseModel):
    """Monte Carlo estimate with its batch-means standard error."""
    price: float
    standard_error: float = Field(ge=0.0)
    paths: int


def batch_generator(seed: int, batch: int) -> np.random.Generator:
    """Counter-based stream for one batch."""
    key = ((seed & SEED_MASK) << 64) | (batch & SEED_MASK)
    return np.random.Generator(np.random.Philox(key=key))


class PathSampler:
    """
    Samples surviving-path indicators and terminal log-prices for one barrier.

    Down barriers are simulated as up barriers of the mirrored path.
    """

    def __init__(self, log_barrier: LogBarrier, grid: TimeGrid, mu: float, sigma: float,
                 bridge: bool = True, knocked_at_start: bool = False):
        self.direction = log_barrier.direction
        flip = -1.0 if self.direction is Direction.DOWN else 1.0
        self.flip = flip
        self.levels = {i: flip * v for i, v in log_barrier.m.items()}
        self.icicles = np.asarray([flip * v for v in log_barrier.x], dtype=float)
        self.dt = grid.steps
        self.mu = mu
        self.sigma = sigma
        self.bridge = bridge
        self.knocked_at_start = knocked_at_start

    def sample(self, rng: np.random.Generator, count: int):
        """
        Returns:
            Tuple (alive indicator, terminal log-price) arrays of length count
        """
        n = self.dt.shape[0]
        increments = rng.standard_normal((count, n)) * (self.sigma * np.sqrt(self.dt)) + self.mu * self.dt
        path = np.cumsum(self.flip * increments, axis=1)
        uniforms = rng.random((count, n)) if self.bridge else None

        alive = np.full(count, not self.knocked_at_start)
        previous = np.zeros(count)
        for i in range(n):
            current = path[:, i]
            level = self.levels.get(i + 1)
            if level is not None:
                if self.bridge:
                    hit = uniforms[:, i] < bridge_hit_prob(previous, current, level, self.sigma, self.dt[i])
                else:
                    hit = (previous >= level) | (current >= level)
                alive &= ~hit
            alive &= current <= self.icicles[i]
            previous = current
        return alive, self.flip * path[:, -1]


def _run_batches(config: McConfig, evaluate: Callable[[np.random.Generator, int], np.ndarray]
                 ) -> Tuple[np.ndarray, np.ndarray]:
    """Evaluate every batch; returns (batch means of shape (batches, outputs), batch sizes)."""
    sizes = config.batch_sizes()

    def run(batch: int) -> np.ndarray:
        if sizes[batch] == 0:
            return None
        return evaluate(batch_generator(config.seed, batch), sizes[batch])

    if config.workers > 1:
        with ThreadPoolExecutor(max_workers=config.workers) as executor:
            sums = list(executor.map(run, range(config.batches)))
    else:
        sums = [run(b) for b in range(config.batches)]
    kept = [(s, n) for s, n in zip(sums, sizes) if s is not None]
    return np.array([s / n for s, n in kept]), np.array([n for _, n in kept], dtype=float)


def _summarize(means: np.ndarray, sizes: np.ndarray, column: int, paths: int) -> McEstimate:
    values = means[:, column]
    estimate = float(np.dot(values, sizes) / sizes.sum())
    se = float(np.std(values, ddof=1) / math.sqrt(len(values))) if len(values) > 1 else 0.0
    return McEstimate(price=estimate, standard_error=se, paths=paths)


def simulate_prices(contracts: Sequence[OptionContract], market: MarketParams,
                    config: Optional[McConfig] = None) -> List[McEstimate]:
    """
    Price several contracts on one set of paths.

    The contracts must share grid and barrier; types and strikes may differ.
    Knock-in and knock-out payoffs use complementary indicators on the same
    paths, so in + out equals the simulated vanilla exactly.

    Args:
        contracts: Contracts with a common grid and barrier
        market: Market parameters
        config: Simulation settings

    Returns:
        One McEstimate per contract, in input order
    """
    if not contracts:
        return []
    config = config or McConfig()
    first = contracts[0]
    for contract in contracts[1:]:
        if contract.grid != first.grid or contract.barrier != first.barrier:
            raise ValueError("simulate_prices needs contracts sharing grid and barrier")
    bundles = [validate_contract(c, market, allow_immediate_knock=True) for c in contracts]

    log_barrier = to_log_space(first.barrier, market.spot, n=first.grid.n)
    sampler = PathSampler(log_barrier, first.grid, market.risk_neutral_drift, market.vol,
                          bridge=config.bridge, knocked_at_start=bundles[0].knocked_at_start)
    maturity = first.grid.maturity
    discount = math.exp(-market.rate * maturity)
    strikes = np.array([c.strike for c in contracts])
    is_call = np.array([c.option_type.is_call for c in contracts])
    knock_in = np.array([c.option_type.is_knock_in for c in contracts])

    def evaluate(rng: np.random.Generator, count: int) -> np.ndarray:
        alive, terminal = sampler.sample(rng, count)
        spot_t = market.spot * np.exp(terminal)
        payoff = np.where(is_call[None, :], spot_t[:, None] - strikes[None, :],
                          strikes[None, :] - spot_t[:, None])
        payoff = np.maximum(payoff, 0.0)
        active = np.where(knock_in[None, :], ~alive[:, None], alive[:, None])
        return discount * np.sum(payoff * active, axis=0)

    means, sizes = _run_batches(config, evaluate)
    results = [_summarize(means, sizes, j, config.paths) for j in range(len(contracts))]
    logger.info(
        f"Simulated {config.paths} paths for {len(contracts)} contracts "
        f"(bridge={'on' if config.bridge else 'off'})"
    )
    return results


def simulate_price(contract: OptionContract, market: MarketParams,
                   config: Optional[McConfig] = None) -> McEstimate:
    """Monte Carlo price of one contract."""
    return simulate_prices([contract], market, config)[0]


def simulate_survival_prob(mu: float, sigma: float, log_barrier: LogBarrier, grid: TimeGrid,
                           config: Optional[McConfig] = None) -> McEstimate:
    """
    Monte Carlo survival probability of a log-space barrier with icicles.

    The ``price`` field of the result holds the probability.
    """
    config = config or McConfig()
    if log_barrier.n != grid.n:
        raise ValueError(f"barrier has {log_barrier.n} icicle slots, grid has {grid.n} steps")
    start_knocked = False
    if 1 in log_barrier.m:
        m1 = log_barrier.m[1]
        start_knocked = m1 < 0.0 if log_barrier.direction is Direction.UP else m1 > 0.0
    sampler = PathSampler(log_barrier, grid, mu, sigma, bridge=config.bridge, knocked_at_start=start_knocked)

    def evaluate(rng: np.random.Generator, count: int) -> np.ndarray:
        alive, _ = sampler.sample(rng, count)
        return np.array([float(np.count_nonzero(alive))])

    means, sizes = _run_batches(config, evaluate)
    return _summarize(means, sizes, 0, config.paths)
