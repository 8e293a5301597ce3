"""
Max-t multiple contrast test engine.

``max_t_test`` covers the one-way layout with the built-in variance
backends; ``max_t_from_estimates`` is the entry point for any backend that
supplies its own estimates, covariance and df (robust, nparm, mlt, mmm).
"""

import logging
from enum import Enum
from typing import Any, Dict, Optional, Sequence, Union

import numpy as np
from scipy import stats

from robust_mct.errors import DegenerateDataError, InvalidDesignError, NumericDomainError
from robust_mct.mct.mvt import CorrelationMatrix, equicoordinate_quantile, mvt_rectangle
from robust_mct.mct.variance import HeteroSummary, pooled_variance, sandwich_covariance, satterthwaite
from robust_mct.models import ContrastEstimate, ContrastMatrix, GroupedSample, MaxTResult, TailSpec

logger = logging.getLogger(__name__)


class VarianceMethod(Enum):
    """Where the contrast covariance, correlation and df come from."""

    POOLED = "pooled"
    SATTERTHWAITE = "satterthwaite"
    SANDWICH = "sandwich"
    ROBUST = "robust"
    EXTERNAL = "external"

    @classmethod
    def parse(cls, value: Union["VarianceMethod", str]) -> "VarianceMethod":
        if isinstance(value, VarianceMethod):
            return value
        try:
            return cls(str(value).lower())
        except ValueError:
            raise InvalidDesignError(f"Unknown variance method '{value}'", {"valid": [m.value for m in cls]})


def dunnett_contrasts(k: int, labels: Optional[Sequence[str]] = None) -> ContrastMatrix:
    """
    Many-to-one contrasts: row i is -1 for the control and +1 for treatment i.

    Args:
        k: number of treatment groups
        labels: optional k+1 group labels (control first) used to name rows "dose - control"
    """
    if k < 1:
        raise InvalidDesignError("Dunnett contrasts need at least one treatment group", {"k": k})
    coef = np.hstack([-np.ones((k, 1)), np.eye(k)])
    if labels is not None:
        if len(labels) != k + 1:
            raise InvalidDesignError("Expected one label per group", {"k": k, "labels": len(labels)})
        names = tuple(f"{labels[i]} - {labels[0]}" for i in range(1, k + 1))
    else:
        names = tuple(f"{i} - 0" for i in range(1, k + 1))
    return ContrastMatrix(coef, names)


def _check_alpha(alpha: float) -> None:
    if not 0.0 < alpha < 1.0:
        raise InvalidDesignError("alpha must lie in (0, 1)", {"alpha": alpha})


def unadjusted_pvalues(tstats: Sequence[float], df: Optional[float], tail: Union[TailSpec, str]) -> np.ndarray:
    """Marginal t (or normal for df=inf) p-values."""
    tail = TailSpec.parse(tail)
    t = np.asarray(tstats, dtype=float)
    dist = stats.norm if df is None or np.isinf(df) else stats.t(df)
    if tail is TailSpec.TWO_SIDED:
        return np.minimum(2.0 * dist.sf(np.abs(t)), 1.0)
    if tail is TailSpec.GREATER:
        return dist.sf(t)
    return dist.cdf(t)


def adjusted_pvalues(
    tstats: Sequence[float],
    corr,
    df: Optional[float],
    tail: Union[TailSpec, str] = TailSpec.TWO_SIDED,
    *,
    seed: Optional[int] = None,
) -> np.ndarray:
    """
    Single-step max-t adjusted p-values.

    p_j = 1 - P(|T_i| <= |t_j| for all i) in the two-sided case; the
    one-sided versions use the half-open rectangles.
    """
    if df is not None and not np.isinf(df) and df <= 0:
        raise NumericDomainError("Degrees of freedom must be positive", {"df": df})
    tail = TailSpec.parse(tail)
    corr = corr if isinstance(corr, CorrelationMatrix) else CorrelationMatrix(corr)
    t = np.asarray(tstats, dtype=float).ravel()
    q = corr.dim
    if t.size != q:
        raise InvalidDesignError("Statistic and correlation dimensions differ", {"q": q, "t": t.size})

    p = np.empty(q)
    for j, tj in enumerate(t):
        if tail is TailSpec.TWO_SIDED:
            c = abs(tj)
            if c == 0.0:
                p[j] = 1.0
                continue
            lower, upper = np.full(q, -c), np.full(q, c)
        elif tail is TailSpec.GREATER:
            lower, upper = np.full(q, -np.inf), np.full(q, tj)
        else:
            lower, upper = np.full(q, tj), np.full(q, np.inf)
        p[j] = 1.0 - mvt_rectangle(lower, upper, corr, df, seed=seed).value

    p = np.clip(p, 0.0, 1.0)
    # the joint probability cannot beat a single marginal test
    return np.maximum(p, unadjusted_pvalues(t, df, tail))


def max_t_from_estimates(
    estimates: Sequence[float],
    covariance: np.ndarray,
    df: Optional[float],
    tail: Union[TailSpec, str] = TailSpec.TWO_SIDED,
    alpha: float = 0.05,
    labels: Optional[Sequence[str]] = None,
    method: str = "external",
    *,
    per_contrast_df: Optional[Sequence[float]] = None,
    correlation: Optional[CorrelationMatrix] = None,
    conf_int: bool = True,
    seed: Optional[int] = None,
    flags: Optional[Dict[str, Any]] = None,
) -> MaxTResult:
    """
    Max-t test for estimates with a known covariance matrix.

    Args:
        estimates: q contrast (or parameter) estimates
        covariance: q x q covariance of the estimates
        df: joint degrees of freedom, ``inf``/None for the normal case
        per_contrast_df: reported df per row (defaults to ``df``)
        conf_int: compute the critical value and simultaneous bounds

    Returns:
        MaxTResult in input order
    """
    _check_alpha(alpha)
    tail = TailSpec.parse(tail)
    est = np.asarray(estimates, dtype=float).ravel()
    cov = np.atleast_2d(np.asarray(covariance, dtype=float))
    q = est.size
    if cov.shape != (q, q):
        raise InvalidDesignError("Covariance shape does not match the estimates", {"q": q, "shape": list(cov.shape)})
    variances = np.diag(cov)
    if np.any(~np.isfinite(variances)) or np.any(variances <= 0.0):
        raise DegenerateDataError("Standard error is zero or undefined", {"variances": variances.tolist()})
    joint_df = float(np.inf) if df is None else float(df)
    se = np.sqrt(variances)
    corr = correlation if correlation is not None else CorrelationMatrix.from_covariance(cov)
    tstats = est / se

    p_adj = adjusted_pvalues(tstats, corr, joint_df, tail, seed=seed)
    p_raw = unadjusted_pvalues(tstats, joint_df, tail)
    crit = equicoordinate_quantile(corr, joint_df, alpha, tail, seed=seed) if conf_int else float("nan")

    if tail is TailSpec.TWO_SIDED:
        lower, upper = est - crit * se, est + crit * se
    elif tail is TailSpec.GREATER:
        lower, upper = est - crit * se, np.full(q, np.inf)
    else:
        lower, upper = np.full(q, -np.inf), est + crit * se

    labels = list(labels) if labels is not None else [f"C{i + 1}" for i in range(q)]
    row_df = np.asarray(per_contrast_df, dtype=float) if per_contrast_df is not None else np.full(q, joint_df)
    rows = tuple(
        ContrastEstimate(
            label=labels[j],
            estimate=float(est[j]),
            std_error=float(se[j]),
            statistic=float(tstats[j]),
            p_adjusted=float(p_adj[j]),
            lower=float(lower[j]),
            upper=float(upper[j]),
            df=float(row_df[j]),
            p_unadjusted=float(p_raw[j]),
        )
        for j in range(q)
    )
    logger.debug(f"[MVT] {method}: q={q} df={joint_df} crit={crit:.5f} min p={p_adj.min():.4g}")
    return MaxTResult(
        contrasts=rows,
        df=joint_df,
        critical_value=float(crit),
        alpha=alpha,
        tail=tail,
        correlation=np.array(corr.entries),
        method=method,
        flags=dict(flags or {}),
    )


def max_t_test(
    sample: GroupedSample,
    contrasts: Optional[ContrastMatrix] = None,
    variance: Union[VarianceMethod, str] = VarianceMethod.POOLED,
    tail: Union[TailSpec, str] = TailSpec.TWO_SIDED,
    alpha: float = 0.05,
    *,
    seed: Optional[int] = None,
    conf_int: bool = True,
    sandwich_df: Optional[float] = None,
    psi: str = "huber",
) -> MaxTResult:
    """
    Dunnett-type max-t test on a one-way layout.

    Args:
        sample: control plus k treatment groups
        contrasts: defaults to Dunnett many-to-one contrasts
        variance: pooled (classical Dunnett), satterthwaite, sandwich or robust
        sandwich_df: finite df for the sandwich variant (asymptotic by default)
        psi: psi function for the robust variant

    Raises:
        DegenerateDataError: zero pooled variance
    """
    _check_alpha(alpha)
    variance = VarianceMethod.parse(variance)
    if contrasts is None:
        contrasts = dunnett_contrasts(sample.k, labels=sample.labels)
    contrasts.check_compatible(sample)

    if variance is VarianceMethod.ROBUST:
        from robust_mct.mct.robust import robust_dunnett

        return robust_dunnett(sample, psi=psi, tail=tail, alpha=alpha, contrasts=contrasts, seed=seed, conf_int=conf_int)
    if variance is VarianceMethod.EXTERNAL:
        raise InvalidDesignError("External covariances go through max_t_from_estimates")

    C = contrasts.coefficients
    summary = HeteroSummary.from_sample(sample)
    estimates = C @ summary.means
    per_contrast_df = None

    if variance is VarianceMethod.POOLED:
        s2, df = pooled_variance(summary)
        if s2 <= 0.0:
            raise DegenerateDataError("Pooled variance is zero; all groups are constant")
        cov = s2 * (C / summary.sizes) @ C.T
        corr = None
        method = "dunnett"
    elif variance is VarianceMethod.SATTERTHWAITE:
        dfs, corr = satterthwaite(summary, contrasts)
        cov = (C * (summary.variances / summary.sizes)) @ C.T
        # one quantile df for the joint distribution
        df = float(np.min(dfs))
        per_contrast_df = dfs
        method = "satterthwaite"
    else:
        cov, corr, df = sandwich_covariance(sample, contrasts, df=sandwich_df)
        method = "sandwich"

    return max_t_from_estimates(
        estimates,
        cov,
        df,
        tail,
        alpha,
        labels=contrasts.labels,
        method=method,
        per_contrast_df=per_contrast_df,
        correlation=corr,
        conf_int=conf_int,
        seed=seed,
    )
