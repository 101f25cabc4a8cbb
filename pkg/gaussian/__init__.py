"""Standard normal distribution functions in one, two, three and n dimensions."""

from .univariate import std_normal_cdf, std_normal_pdf, std_normal_ppf
from .bivariate import bvn_cdf, tvn_cdf
from .mvn import (
    MAX_DIMENSION,
    MvnProblem,
    CdfEstimate,
    MvnOptions,
    MarkovChainRecursion,
    GenzLattice,
    mvn_cdf,
    mvn_cdf_with,
)

__all__ = [
    "std_normal_cdf",
    "std_normal_pdf",
    "std_normal_ppf",
    "bvn_cdf",
    "tvn_cdf",
    "MAX_DIMENSION",
    "MvnProblem",
    "CdfEstimate",
    "MvnOptions",
    "MarkovChainRecursion",
    "GenzLattice",
    "mvn_cdf",
    "mvn_cdf_with",
]
