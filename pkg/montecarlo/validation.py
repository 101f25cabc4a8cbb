"""
Comparison of Monte Carlo estimates with analytic prices.
"""

import math
from typing import List, Sequence, Tuple

from pydantic import BaseModel, Field

from domain.errors import ZeroReference
from utils.logger import get_logger

logger = get_logger(__name__)


class TableValidation(BaseModel):
    """Summary of a table of (analytic, MC, SE) cells."""
    rms_relative_error: float
    within_3se: float = Field(description="Fraction of cells with |MC - analytic| <= 3 SE")
    cells: int
    excluded: List[int] = Field(default_factory=list, description="Cells with a zero analytic value")


def rms_relative_error(pairs: Sequence[Tuple[float, float]]) -> float:
    """
    sqrt(mean((C_i - C~_i)^2 / C_i^2)) over (analytic C_i, estimate C~_i) pairs.

    Raises:
        ZeroReference: some C_i is zero
        ValueError: no pairs
    """
    if not pairs:
        raise ValueError("rms_relative_error needs at least one pair")
    zeros = [i for i, (reference, _) in enumerate(pairs) if reference == 0.0]
    if zeros:
        raise ZeroReference(f"{len(zeros)} analytic values are zero", excluded=zeros)
    total = math.fsum(((c - e) / c) ** 2 for c, e in pairs)
    return math.sqrt(total / len(pairs))


def validate_table(cells: Sequence[Tuple[float, float, float]]) -> TableValidation:
    """
    RMS relative error and 3-SE coverage of (analytic, estimate, se) cells.

    Cells with a zero analytic value are left out of the RMS and reported.
    """
    excluded = [i for i, (c, _, _) in enumerate(cells) if c == 0.0]
    kept = [(c, e) for c, e, _ in cells if c != 0.0]
    rms = rms_relative_error(kept) if kept else 0.0
    inside = sum(1 for c, e, se in cells if abs(c - e) <= 3.0 * se)
    coverage = inside / len(cells) if cells else 1.0
    if excluded:
        logger.info(f"RMS relative error excludes {len(excluded)} zero-valued cells: {excluded}")
    return TableValidation(rms_relative_error=rms, within_3se=coverage, cells=len(cells), excluded=excluded)
