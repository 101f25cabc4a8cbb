"""
CSV output for prices, probabilities and reproduced tables.
"""

import csv
import sys
from pathlib import Path
from typing import IO, Iterable, List, Mapping, Optional, Sequence, Union

from utils.logger import get_logger

logger = get_logger(__name__)

SIGNIFICANT_DIGITS = 6


def format_value(value: object) -> str:
    """Floats with 6 significant digits, None as an empty cell, everything else via str()."""
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return f"{value:.{SIGNIFICANT_DIGITS}g}"
    return str(value)


def full_precision(value: Optional[float]) -> str:
    """Shortest repr that round-trips the float."""
    return "" if value is None else repr(float(value))


def _with_precise(rows: Iterable[Mapping[str, object]], columns: List[str],
                  precise: Optional[str]) -> List[List[str]]:
    table = []
    for row in rows:
        line = [format_value(row.get(column)) for column in columns]
        if precise is not None:
            line.append(full_precision(row.get(precise)))
        table.append(line)
    return table


def write_csv(rows: Sequence[Mapping[str, object]], stream: IO[str], columns: Sequence[str],
              precise: Optional[str] = None) -> None:
    """Write rows to an open text stream (see emit_csv)."""
    header = list(columns)
    if precise is not None:
        header.append(f"{precise}_full")
    writer = csv.writer(stream, lineterminator="\r\n")
    writer.writerow(header)
    writer.writerows(_with_precise(rows, list(columns), precise))


def emit_csv(rows: Sequence[Mapping[str, object]], path: Union[str, Path, None] = None,
             columns: Optional[Sequence[str]] = None, precise: Optional[str] = None) -> None:
    """
    Write rows as CSV in input order.

    Args:
        rows: Mappings from column name to value
        path: Output file; None writes to stdout
        columns: Column order; defaults to the keys of the first row
        precise: Column repeated at full precision as '<name>_full'

    Raises:
        OSError: the file cannot be written
    """
    if columns is None:
        columns = list(rows[0].keys()) if rows else []
    if path is None:
        write_csv(rows, sys.stdout, columns, precise)
        return
    path = Path(path)
    if path.parent and not path.parent.exists():
        path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8", newline="") as handle:
        write_csv(rows, handle, columns, precise)
    logger.info(f"Wrote {len(rows)} rows to {path}")
