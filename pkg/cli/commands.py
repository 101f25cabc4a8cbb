"""
Command-line front end.

Subcommands:
    price      analytic prices of the contracts in a scenario
    prob       survival probability of the scenario barrier (PA_u / PA_d)
    mc         Monte Carlo prices next to the analytic ones
    curve      discretized curved barrier: survival probability or prices
    reproduce  recompute a published table against data/expected/<id>.csv

Results go to stdout (or --out) as CSV; logs and error records go to stderr.
Exit status is 0 on success, 2 on invalid input and 1 on any other failure,
including a reproduced cell outside its tolerance.
"""

import argparse
import json
import math
import sys
from pathlib import Path
from typing import Dict, List, Optional, Sequence

from config import settings
from curved.approximation import ENGINES, discretize, price_curved, survival_prob
from curved.barriers import DiscretizationRule
from domain.errors import PricingError, ScenarioError, ValidationError
from domain.models import Direction
from domain.transforms import effective_icicles, to_log_space, validate
from gaussian.mvn import MvnOptions
from montecarlo.simulator import McConfig, simulate_prices
from pricing.engine import BarrierPricer
from reflection.probability import ReflectionOptions, pa_d, pa_u
from reflection.transition import survival_prob_by_quadrature
from utils.logger import get_logger, setup_logger, timed
from .output import emit_csv
from .scenario import Scenario, load_scenario
from .tables import reproduce, table_ids

logger = get_logger(__name__)

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_INVALID = 2


def _given(**values) -> Dict[str, object]:
    return {key: value for key, value in values.items() if value is not None}


def _engine_flags() -> argparse.ArgumentParser:
    parent = argparse.ArgumentParser(add_help=False)
    parent.add_argument("--out", type=Path, help="Write CSV here instead of stdout")
    parent.add_argument("--mvn-tol", type=float, help="Target absolute error per MVN CDF")
    parent.add_argument("--prune-eps", type=float, help="Superset pruning threshold (0 = off)")
    parent.add_argument("--workers", type=int, help="Worker threads")
    parent.add_argument("--log-level", default=None, help="DEBUG, INFO, WARNING or ERROR")
    return parent


def _mc_flags() -> argparse.ArgumentParser:
    parent = argparse.ArgumentParser(add_help=False)
    parent.add_argument("--seed", type=int, help="Master seed for path simulation")
    parent.add_argument("--paths", type=int, help="Number of simulated paths")
    parent.add_argument("--no-bridge", action="store_true", help="Check barriers at step times only")
    return parent


def build_parser() -> argparse.ArgumentParser:
    engine, mc = _engine_flags(), _mc_flags()
    parser = argparse.ArgumentParser(prog="multistep-barrier",
                                     description="Analytic pricing of icicled multi-step barrier options")
    commands = parser.add_subparsers(dest="command", required=True)

    price = commands.add_parser("price", parents=[engine], help="Analytic prices of scenario contracts")
    price.add_argument("--scenario", type=Path, required=True)

    prob = commands.add_parser("prob", parents=[engine], help="Survival probability of the scenario barrier")
    prob.add_argument("--scenario", type=Path, required=True)
    prob.add_argument("--engine", choices=("reflection", "kernel"), default="reflection")

    simulate = commands.add_parser("mc", parents=[engine, mc], help="Monte Carlo vs analytic prices")
    simulate.add_argument("--scenario", type=Path, required=True)

    curve = commands.add_parser("curve", parents=[engine], help="Curved barrier via multi-step levels")
    curve.add_argument("--scenario", type=Path, required=True)
    curve.add_argument("--rule", choices=[r.value for r in DiscretizationRule] + ["midpoint"])
    curve.add_argument("--engine", choices=ENGINES, default="auto")

    table = commands.add_parser("reproduce", parents=[engine, mc], help="Recompute a published table")
    table.add_argument("table_id", nargs="?", choices=table_ids(), help="Table to reproduce")
    table.add_argument("--table", dest="table_flag", choices=table_ids(), help="Same as the positional id")
    table.add_argument("--mc", action="store_true", help="Add fresh Monte Carlo columns")
    table.add_argument("--limit", type=int, help="Only the first N cells")
    table.add_argument("--tables-dir", type=Path, help="Directory with expected-values files")
    return parser


def _reflection_options(args: argparse.Namespace, scenario: Optional[Scenario] = None) -> ReflectionOptions:
    if scenario is not None:
        return scenario.reflection_options(args.mvn_tol, args.prune_eps, args.workers)
    mvn = MvnOptions(**_given(target_abs_error=args.mvn_tol))
    return ReflectionOptions(mvn=mvn, **_given(prune_eps=args.prune_eps, workers=args.workers))


def _mc_config(args: argparse.Namespace, scenario: Optional[Scenario] = None) -> McConfig:
    bridge = False if args.no_bridge else None
    if scenario is not None:
        return scenario.mc_config(args.paths, args.seed, bridge)
    return McConfig(**_given(paths=args.paths, seed=args.seed, bridge=bridge, workers=args.workers))


def cmd_price(args: argparse.Namespace) -> int:
    scenario = load_scenario(args.scenario)
    market = scenario.market.to_market()
    pricer = BarrierPricer(_reflection_options(args, scenario))
    rows = []
    for contract in scenario.contract_list():
        result = pricer.price(contract, market)
        rows.append({
            "type": result.option_type, "strike": result.strike, "price": result.price,
            "error_bound": result.error_bound, "vanilla": result.vanilla, "branch": result.branch,
            "subsets_evaluated": result.subsets_evaluated, "subsets_pruned": result.subsets_pruned,
        })
    emit_csv(rows, args.out, columns=["type", "strike", "price", "error_bound", "vanilla", "branch",
                                      "subsets_evaluated", "subsets_pruned"], precise="price")
    return EXIT_OK


def cmd_prob(args: argparse.Namespace) -> int:
    scenario = load_scenario(args.scenario)
    if scenario.barrier is None:
        raise ScenarioError("prob needs a [barrier] section")
    market = scenario.market.to_market()
    grid = scenario.grid.to_grid()
    barrier = scenario.barrier.to_barrier()
    bundle = validate(grid, market, barrier, allow_immediate_knock=True)
    mu = market.drift if market.drift is not None else market.risk_neutral_drift
    row = {"direction": barrier.direction.value, "steps": grid.n, "barrier_steps": barrier.g, "mu": mu}

    log_barrier = effective_icicles(to_log_space(barrier, market.spot, n=grid.n))
    if bundle.knocked_at_start:
        row.update(probability=0.0, error_bound=0.0, engine="immediate_knock")
    elif args.engine == "kernel":
        estimate = survival_prob_by_quadrature(mu, market.vol, log_barrier.x, log_barrier.m, grid,
                                               direction=barrier.direction)
        row.update(probability=estimate.value, error_bound=estimate.error_bound, engine="kernel")
    else:
        survival = pa_u if barrier.direction is Direction.UP else pa_d
        result = survival(mu, market.vol, log_barrier.x, log_barrier.m, grid, _reflection_options(args, scenario))
        row.update(probability=result.probability, error_bound=result.error_bound, engine="reflection",
                   subsets_evaluated=result.subsets_evaluated, subsets_pruned=result.subsets_pruned)
    emit_csv([row], args.out, columns=["direction", "steps", "barrier_steps", "mu", "probability", "error_bound",
                                       "engine", "subsets_evaluated", "subsets_pruned"], precise="probability")
    return EXIT_OK


def cmd_mc(args: argparse.Namespace) -> int:
    scenario = load_scenario(args.scenario)
    market = scenario.market.to_market()
    contracts = scenario.contract_list()
    config = _mc_config(args, scenario)
    pricer = BarrierPricer(_reflection_options(args, scenario))
    analytic = [pricer.price(contract, market) for contract in contracts]
    with timed(logger, f"Simulation of {config.paths} paths"):
        estimates = simulate_prices(contracts, market, config)
    rows = [{
        "type": result.option_type, "strike": result.strike, "analytic": result.price,
        "mc": estimate.price, "se": estimate.standard_error, "abs_err": abs(result.price - estimate.price),
        "paths": estimate.paths,
    } for result, estimate in zip(analytic, estimates)]
    emit_csv(rows, args.out, columns=["type", "strike", "analytic", "mc", "se", "abs_err", "paths"],
             precise="analytic")
    return EXIT_OK


def cmd_curve(args: argparse.Namespace) -> int:
    scenario = load_scenario(args.scenario)
    if scenario.curve is None:
        raise ScenarioError("curve needs a [curve] section")
    section = scenario.curve
    market = scenario.market.to_market()
    grid = scenario.grid.to_grid()
    rule = DiscretizationRule.parse(args.rule or section.rule or settings.rule)
    curve = section.to_curve(market, scenario.base_dir)
    options = _reflection_options(args, scenario)

    levels = discretize(curve, grid, rule, market.spot)
    logger.info(f"{curve.describe()} on {grid.n} steps ({rule.value}): "
                f"levels={', '.join(f'{market.spot * math.exp(m):.4f}' for m in levels)}")
    joined = ";".join(f"{m:.10g}" for m in levels)
    rows: List[Dict[str, object]] = []
    if not scenario.contracts:
        result = survival_prob(curve, grid, rule, market, direction=section.direction,
                               options=options, engine=args.engine)
        rows.append({"kind": "survival", "value": result.probability, "error_bound": result.error_bound,
                     "engine": result.engine, "rule": rule.value, "levels": joined})
    for entry in scenario.contracts:
        result = price_curved(entry.type, entry.strike, curve, grid, rule, market, options)
        rows.append({"kind": result.option_type, "strike": result.strike, "value": result.price,
                     "error_bound": result.error_bound, "engine": "reflection", "rule": rule.value,
                     "levels": joined})
    emit_csv(rows, args.out, columns=["kind", "strike", "value", "error_bound", "engine", "rule", "levels"],
             precise="value")
    return EXIT_OK


def cmd_reproduce(args: argparse.Namespace) -> int:
    table_id = args.table_flag or args.table_id
    if table_id is None:
        raise ScenarioError(f"reproduce needs a table id, one of {list(table_ids())}")
    mc = _mc_config(args) if args.mc else None
    report = reproduce(table_id, _reflection_options(args), mc=mc, directory=args.tables_dir, limit=args.limit)
    emit_csv([cell.as_row() for cell in report.cells], args.out, columns=report.columns, precise="analytic")
    for line in report.summary_lines():
        print(line)
    return EXIT_OK if report.ok else EXIT_FAILURE


COMMANDS = {
    "price": cmd_price,
    "prob": cmd_prob,
    "mc": cmd_mc,
    "curve": cmd_curve,
    "reproduce": cmd_reproduce,
}


def _report(record: Dict[str, object]) -> None:
    print(json.dumps(record, default=str), file=sys.stderr)


def run(argv: Optional[Sequence[str]] = None) -> int:
    """
    Parse the command line and run one subcommand.

    Returns:
        Process exit status
    """
    args = build_parser().parse_args(argv)
    if args.log_level:
        setup_logger(args.log_level)
    try:
        return COMMANDS[args.command](args)
    except ValidationError as exc:
        logger.error(f"Invalid input: {exc.message}")
        _report(exc.to_record())
        return EXIT_INVALID
    except PricingError as exc:
        logger.error(f"{exc.code}: {exc.message}")
        _report(exc.to_record())
        return EXIT_FAILURE
    except (ValueError, OSError) as exc:
        logger.error(f"{type(exc).__name__}: {exc}")
        _report({"error": type(exc).__name__, "message": str(exc)})
        return EXIT_FAILURE
