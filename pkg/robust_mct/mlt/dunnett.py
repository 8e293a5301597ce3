"""
Dunnett-type inference on the shift parameters of transformation models.

``mlt_dunnett`` tests the shifts of a fitted model; ``colr_dunnett`` fits the
logistic-link model and reports odds ratios exp(-beta), i.e. the odds of a
larger response in the dose group relative to control.
"""

import logging
from dataclasses import replace
from typing import Optional, Sequence, Tuple, Union

import numpy as np

from robust_mct.errors import NumericDomainError
from robust_mct.mct.contrast import max_t_from_estimates
from robust_mct.mlt.model import Link, TransformationModel, fit_mlt
from robust_mct.models import GroupedSample, MaxTResult, TailSpec

logger = logging.getLogger(__name__)


def linear_model_df(model: TransformationModel) -> float:
    """Residual df of the matching one-way linear model, N - (k + 1)."""
    return float(model.n_obs - (model.k + 1))


def _checked_shift_covariance(model: TransformationModel) -> np.ndarray:
    cov = model.shift_covariance
    if not np.all(np.isfinite(cov)) or np.any(np.diag(cov) <= 0.0):
        raise NumericDomainError("Shift covariance is singular", {"flags": model.flags})
    return cov


def shift_labels(model: TransformationModel, ratio: bool = False) -> list:
    control = model.labels[0]
    if ratio:
        return [f"{lab}/{control}" for lab in model.labels[1:]]
    return [f"{lab} - {control}" for lab in model.labels[1:]]


def odds_ratio_rows(result: MaxTResult) -> tuple:
    """Attach exp(-beta) and its bounds to every row of a shift test."""
    with np.errstate(over="ignore"):
        return tuple(
            replace(
                row,
                effect=float(np.exp(-row.estimate)),
                effect_lower=float(np.exp(-row.upper)),
                effect_upper=float(np.exp(-row.lower)),
            )
            for row in result.contrasts
        )


def mlt_dunnett(
    model: TransformationModel,
    df: Optional[float] = None,
    tail: Union[TailSpec, str] = TailSpec.TWO_SIDED,
    alpha: float = 0.05,
    *,
    seed: Optional[int] = None,
    conf_int: bool = True,
    labels: Optional[Sequence[str]] = None,
) -> MaxTResult:
    """
    Wald max-t test of the shifts beta_j / se(beta_j).

    Args:
        model: fitted transformation model
        df: None for the asymptotic normal version, or e.g. ``linear_model_df(model)``
        tail: direction on the beta scale (negative beta means larger responses)

    Raises:
        NumericDomainError: singular shift covariance
    """
    cov = _checked_shift_covariance(model)
    return max_t_from_estimates(
        model.beta,
        cov,
        df,
        tail,
        alpha,
        labels=list(labels) if labels is not None else shift_labels(model),
        method=f"mlt-{model.link.value}",
        conf_int=conf_int,
        seed=seed,
        flags={"converged": model.converged, "order": model.order, **model.flags},
    )


def colr_dunnett(
    sample: GroupedSample,
    order: int = 5,
    tail: Union[TailSpec, str] = TailSpec.TWO_SIDED,
    alpha: float = 0.05,
    *,
    support: Optional[Tuple[float, float]] = None,
    df: Optional[float] = None,
    model: Optional[TransformationModel] = None,
    seed: Optional[int] = None,
    conf_int: bool = True,
) -> MaxTResult:
    """
    Continuous outcome logistic regression with Dunnett-type odds ratios.

    The tail refers to the odds-ratio scale: "greater" tests for increased
    responses (OR > 1). Row estimates and bounds stay on the beta scale; the
    ``odds_ratio`` columns carry OR = exp(-beta) with bounds
    [exp(-upper), exp(-lower)].
    """
    tail = TailSpec.parse(tail)
    if model is None:
        model = fit_mlt(sample, order=order, link=Link.LOGISTIC, support=support)
    elif model.link is not Link.LOGISTIC:
        raise NumericDomainError("Odds ratios need a logistic-link model", {"link": model.link.value})

    result = mlt_dunnett(
        model,
        df,
        tail.flipped(),
        alpha,
        seed=seed,
        conf_int=conf_int,
        labels=shift_labels(model, ratio=True),
    )
    logger.debug(f"[MLT] colr odds ratios: {[round(float(np.exp(-b)), 4) for b in model.beta]}")
    return replace(result, contrasts=odds_ratio_rows(result), tail=tail, method="colr", effect_name="odds_ratio")
