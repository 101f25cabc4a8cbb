"""Command-line front end: scenarios, CSV output and table reproduction."""

from .commands import build_parser, run
from .output import emit_csv, format_value
from .scenario import Scenario, load_scenario, parse_scenario
from .tables import TABLES, TableReport, read_expected, reproduce

__all__ = [
    "build_parser",
    "run",
    "emit_csv",
    "format_value",
    "Scenario",
    "load_scenario",
    "parse_scenario",
    "TABLES",
    "TableReport",
    "read_expected",
    "reproduce",
]
