"""
Robust Dunnett-type multiple contrast tests for the one-way layout.

Classical, Satterthwaite, sandwich, M-estimation and nonparametric variants
of the many-to-one comparison, the most likely transformation family (normal
and logistic links, odds ratios, multiple marginal models), and a Monte Carlo
study of their size and power.
"""

from robust_mct.errors import (
    ConfigError,
    ConvergenceError,
    DataFormatError,
    DegenerateDataError,
    InvalidDesignError,
    NumericDomainError,
    RobustMCTError,
)
from robust_mct.models import ContrastEstimate, ContrastMatrix, Group, GroupedSample, MaxTResult, TailSpec

__version__ = "0.1.0"

__all__ = [
    "ConfigError",
    "ConvergenceError",
    "DataFormatError",
    "DegenerateDataError",
    "InvalidDesignError",
    "NumericDomainError",
    "RobustMCTError",
    "ContrastEstimate",
    "ContrastMatrix",
    "Group",
    "GroupedSample",
    "MaxTResult",
    "TailSpec",
]
