"""
Scenario files: TOML batch inputs for the command line.

A scenario holds one market, one monitoring grid, either a multi-step
barrier or a curved barrier, a list of contracts and optional engine and
Monte Carlo overrides. Unknown keys are rejected.

Example:
    [market]
    spot = 100.0
    rate = 0.03
    vol = 0.2

    [grid]
    maturity = 0.5
    steps = 6

    [barrier]
    direction = "UP"
    levels = [105, 108, 110, 113, 115, 118]

    [[contracts]]
    type = "UOC"
    strike = 100
"""

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib
from pathlib import Path
from typing import Dict, List, Literal, Optional, Union

from pydantic import BaseModel, ConfigDict, Field, PrivateAttr, ValidationError as SchemaError, model_validator

from curved.barriers import (
    CurvedBarrier,
    DiscretizationRule,
    ExponentialCurve,
    LinearPriceCurve,
    QuantileCurve,
    TabulatedCurve,
)
from domain.errors import ScenarioError
from domain.models import BarrierSpec, Direction, MarketParams, OptionContract, OptionType, TimeGrid
from gaussian.mvn import MvnOptions
from montecarlo.simulator import McConfig
from reflection.probability import ReflectionOptions
from utils.logger import get_logger

logger = get_logger(__name__)


class _Section(BaseModel):
    model_config = ConfigDict(extra="forbid")


class MarketSection(_Section):
    spot: float
    rate: float
    vol: float
    drift: Optional[float] = Field(default=None, description="Physical log-price drift for probabilities")

    def to_market(self) -> MarketParams:
        return MarketParams(spot=self.spot, rate=self.rate, vol=self.vol, drift=self.drift)


class GridSection(_Section):
    """Either explicit monitoring times t_1..t_n or a uniform maturity/steps pair."""
    times: Optional[List[float]] = None
    maturity: Optional[float] = None
    steps: Optional[int] = Field(default=None, ge=1)

    @model_validator(mode="after")
    def _one_form(self) -> "GridSection":
        uniform = self.maturity is not None or self.steps is not None
        if (self.times is None) == (not uniform):
            raise ValueError("grid needs either 'times' or both 'maturity' and 'steps'")
        if uniform and (self.maturity is None or self.steps is None):
            raise ValueError("a uniform grid needs both 'maturity' and 'steps'")
        return self

    def to_grid(self) -> TimeGrid:
        if self.times is not None:
            times = [float(t) for t in self.times]
            if times and times[0] == 0.0:
                times = times[1:]
            return TimeGrid(times=(0.0, *times))
        return TimeGrid.uniform(self.maturity, self.steps)


class BarrierSection(_Section):
    """
    Price-space barrier.

    ``levels`` is either a list covering every step or a table keyed by the
    1-based step index; ``icicles`` is keyed the same way.
    """
    direction: Direction
    levels: Union[List[float], Dict[int, float]] = Field(default_factory=dict)
    icicles: Dict[int, float] = Field(default_factory=dict)

    def to_barrier(self) -> BarrierSpec:
        levels = self.levels
        if isinstance(levels, list):
            levels = {i + 1: level for i, level in enumerate(levels)}
        return BarrierSpec(direction=self.direction, levels=levels, icicles=self.icicles)


class CurveSection(_Section):
    family: Literal["quantile", "linear", "exponential", "tabulated"]
    direction: Direction = Direction.UP
    rule: Optional[str] = None
    # quantile: either z or confidence (1 - alpha); mu and sigma default to the market's
    z: Optional[float] = None
    confidence: Optional[float] = Field(default=None, gt=0.0, lt=1.0)
    # linear
    c0: Optional[float] = None
    c1: Optional[float] = None
    # exponential
    a: Optional[float] = None
    delta: Optional[float] = None
    # tabulated
    file: Optional[str] = None
    points: Optional[List[List[float]]] = None

    @model_validator(mode="after")
    def _family_fields(self) -> "CurveSection":
        needed = {
            "quantile": (("z", "confidence"),),
            "linear": (("c0",), ("c1",)),
            "exponential": (("a",), ("delta",)),
            "tabulated": (("file", "points"),),
        }[self.family]
        for options in needed:
            if all(getattr(self, name) is None for name in options):
                raise ValueError(f"{self.family} curve needs {' or '.join(options)}")
        if self.rule is not None:
            DiscretizationRule.parse(self.rule)
        return self

    def to_curve(self, market: MarketParams, base_dir: Optional[Path] = None) -> CurvedBarrier:
        if self.family == "quantile":
            mu = market.drift if market.drift is not None else market.risk_neutral_drift
            if self.z is not None:
                return QuantileCurve(z=self.z, mu=mu, sigma=market.vol)
            return QuantileCurve.from_confidence(self.confidence, mu, market.vol)
        if self.family == "linear":
            return LinearPriceCurve(c0=self.c0, c1=self.c1)
        if self.family == "exponential":
            return ExponentialCurve(a=self.a, delta=self.delta)
        if self.points is not None:
            return TabulatedCurve.from_points([tuple(p) for p in self.points])
        path = Path(self.file)
        if not path.is_absolute() and base_dir is not None:
            path = base_dir / path
        return TabulatedCurve.from_file(path)


class ContractEntry(_Section):
    type: OptionType
    strike: float


class EngineSection(_Section):
    mvn_tol: Optional[float] = None
    mvn_seed: Optional[int] = Field(default=None, ge=0)
    method: Optional[Literal["auto", "qmc"]] = None
    prune_eps: Optional[float] = Field(default=None, ge=0.0)
    workers: Optional[int] = Field(default=None, ge=1)


class McSection(_Section):
    paths: Optional[int] = Field(default=None, ge=1)
    seed: Optional[int] = Field(default=None, ge=0)
    batches: Optional[int] = Field(default=None, ge=2)
    bridge: Optional[bool] = None
    workers: Optional[int] = Field(default=None, ge=1)


def _pick(**values) -> Dict[str, object]:
    return {key: value for key, value in values.items() if value is not None}


class Scenario(_Section):
    """A validated scenario file."""
    market: MarketSection
    grid: GridSection
    barrier: Optional[BarrierSection] = None
    curve: Optional[CurveSection] = None
    contracts: List[ContractEntry] = Field(default_factory=list)
    engine: EngineSection = Field(default_factory=EngineSection)
    mc: McSection = Field(default_factory=McSection)

    _source: Optional[Path] = PrivateAttr(default=None)

    @property
    def base_dir(self) -> Optional[Path]:
        """Directory relative file references are resolved against."""
        return self._source.parent if self._source is not None else None

    @model_validator(mode="after")
    def _one_barrier(self) -> "Scenario":
        if (self.barrier is None) == (self.curve is None):
            raise ValueError("scenario needs exactly one of [barrier] or [curve]")
        return self

    def contract_list(self) -> List[OptionContract]:
        """Contracts on the scenario's multi-step barrier, in file order."""
        if self.barrier is None:
            raise ScenarioError("scenario has a [curve] section, not a [barrier]")
        grid = self.grid.to_grid()
        barrier = self.barrier.to_barrier()
        return [OptionContract(option_type=c.type, strike=c.strike, grid=grid, barrier=barrier)
                for c in self.contracts]

    def reflection_options(self, mvn_tol: Optional[float] = None, prune_eps: Optional[float] = None,
                           workers: Optional[int] = None) -> ReflectionOptions:
        """Engine options; explicit arguments win over the file, the file over the environment."""
        mvn = MvnOptions(**_pick(
            target_abs_error=mvn_tol if mvn_tol is not None else self.engine.mvn_tol,
            seed=self.engine.mvn_seed,
            method=self.engine.method,
        ))
        return ReflectionOptions(mvn=mvn, **_pick(
            prune_eps=prune_eps if prune_eps is not None else self.engine.prune_eps,
            workers=workers if workers is not None else self.engine.workers,
        ))

    def mc_config(self, paths: Optional[int] = None, seed: Optional[int] = None,
                  bridge: Optional[bool] = None) -> McConfig:
        return McConfig(**_pick(
            paths=paths if paths is not None else self.mc.paths,
            seed=seed if seed is not None else self.mc.seed,
            batches=self.mc.batches,
            bridge=bridge if bridge is not None else self.mc.bridge,
            workers=self.mc.workers,
        ))


def parse_scenario(data: Dict[str, object], source: Optional[Path] = None) -> Scenario:
    """
    Validate an already-parsed scenario mapping.

    Raises:
        ScenarioError: missing, malformed or unknown keys
    """
    try:
        scenario = Scenario.model_validate(data)
    except SchemaError as exc:
        problems = [
            {"field": ".".join(str(p) for p in err["loc"]), "message": err["msg"]}
            for err in exc.errors()
        ]
        raise ScenarioError(f"invalid scenario{f' {source}' if source else ''}: "
                            f"{len(problems)} problem(s)", problems=problems) from exc
    scenario._source = source
    return scenario


def load_scenario(path: Union[str, Path]) -> Scenario:
    """Read and validate a TOML scenario file."""
    path = Path(path)
    try:
        with path.open("rb") as handle:
            data = tomllib.load(handle)
    except FileNotFoundError as exc:
        raise ScenarioError(f"scenario file not found: {path}", path=str(path)) from exc
    except tomllib.TOMLDecodeError as exc:
        raise ScenarioError(f"scenario {path} is not valid TOML: {exc}", path=str(path)) from exc
    logger.debug(f"Loaded scenario {path}")
    return parse_scenario(data, source=path)
