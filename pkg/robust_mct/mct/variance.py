"""
Variance backends for the Dunnett-type max-t test: pooled, Satterthwaite
plug-in and HC3 sandwich.
"""

import logging
from dataclasses import dataclass
from typing import Optional, Tuple, Union

import numpy as np
import statsmodels.api as sm

from robust_mct.errors import DegenerateDataError, InvalidDesignError
from robust_mct.mct.mvt import CorrelationMatrix
from robust_mct.models import ContrastMatrix, GroupedSample

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class HeteroSummary:
    """Per-group means, sample variances and sizes."""

    means: np.ndarray
    variances: np.ndarray
    sizes: np.ndarray

    def __post_init__(self):
        variances = np.asarray(self.variances, dtype=float)
        sizes = np.asarray(self.sizes, dtype=int)
        if np.any(variances < 0.0):
            raise InvalidDesignError("Group variances must be nonnegative")
        if np.any(sizes < 2):
            raise InvalidDesignError("Every group needs at least 2 observations", {"sizes": sizes.tolist()})
        object.__setattr__(self, "means", np.asarray(self.means, dtype=float))
        object.__setattr__(self, "variances", variances)
        object.__setattr__(self, "sizes", sizes)

    @classmethod
    def from_sample(cls, sample: GroupedSample) -> "HeteroSummary":
        return cls(means=sample.means, variances=sample.variances, sizes=sample.sizes)


def pooled_variance(sample: Union[GroupedSample, HeteroSummary]) -> Tuple[float, float]:
    """
    Common variance estimate S^2 and its degrees of freedom.

    S^2 = sum (n_i - 1) s_i^2 / sum (n_i - 1),  df = sum (n_i - 1)
    """
    summary = sample if isinstance(sample, HeteroSummary) else HeteroSummary.from_sample(sample)
    dfs = summary.sizes - 1
    total = float(dfs.sum())
    if total <= 0:
        raise DegenerateDataError("No group has more than one observation")
    return float(np.dot(dfs, summary.variances) / total), total


def satterthwaite(
    summary: Union[GroupedSample, HeteroSummary], contrasts: ContrastMatrix
) -> Tuple[np.ndarray, CorrelationMatrix]:
    """
    Per-contrast Satterthwaite dfs and the correlation under group-specific variances.

    Returns:
        (df vector of length q, CorrelationMatrix)
    """
    if isinstance(summary, GroupedSample):
        summary = HeteroSummary.from_sample(summary)
    C = contrasts.coefficients
    if C.shape[1] != summary.sizes.size:
        raise InvalidDesignError("Contrast columns and group count differ")
    used = np.any(C != 0.0, axis=0)
    if np.any(used & (summary.variances <= 0.0)):
        zero = [int(i) for i in np.flatnonzero(used & (summary.variances <= 0.0))]
        raise DegenerateDataError("Zero variance in a group entering a contrast", {"groups": zero})

    var_of_mean = summary.variances / summary.sizes
    terms = C**2 * var_of_mean
    numerator = terms.sum(axis=1) ** 2
    denominator = (terms**2 / (summary.sizes - 1)).sum(axis=1)
    dfs = numerator / denominator

    cov = (C * var_of_mean) @ C.T
    return dfs, CorrelationMatrix.from_covariance(cov)


def sandwich_covariance(
    sample: GroupedSample, contrasts: ContrastMatrix, df: Optional[float] = None
) -> Tuple[np.ndarray, CorrelationMatrix, float]:
    """
    HC3 sandwich covariance of the contrast estimates.

    The cell-means regression has leverage 1/n_i in group i, so the HC3
    variance of a group mean is s_i^2 / (n_i - 1), i.e. v_i / n_i with
    v_i = s_i^2 (n_i - 1)/n_i * (n_i/(n_i - 1))^2.

    Returns:
        (q x q contrast covariance, CorrelationMatrix, df); df is inf unless overridden.
    """
    contrasts.check_compatible(sample)
    y = sample.values
    design = (sample.group_index[:, None] == np.arange(len(sample.groups))[None, :]).astype(float)
    fit = sm.OLS(y, design).fit(cov_type="HC3")
    mean_cov = np.asarray(fit.cov_params())

    C = contrasts.coefficients
    cov = C @ mean_cov @ C.T
    cov = (cov + cov.T) / 2.0
    # residuals of constant groups are rounding noise
    floor = (1e-12 * max(1.0, float(np.max(np.abs(y))))) ** 2
    zero = np.flatnonzero(np.diag(cov) <= floor)
    if zero.size:
        raise DegenerateDataError(
            "Sandwich standard error is zero for a contrast",
            {"contrasts": [contrasts.labels[i] for i in zero]},
        )
    joint_df = float(np.inf) if df is None else float(df)
    logger.debug(f"[MVT] sandwich covariance for {contrasts.q} contrasts, df={joint_df}")
    return cov, CorrelationMatrix.from_covariance(cov), joint_df
