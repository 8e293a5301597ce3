"""
Robust M-estimation for the one-way layout (the "Rob" procedure).

IRLS on group locations with the scale fixed at the normalized MAD of the
residuals from the group medians. The psi functions come from
``statsmodels.robust.norms``.
"""

import logging
from dataclasses import dataclass
from enum import Enum
from typing import Optional, Union

import numpy as np
from statsmodels.robust import norms
from statsmodels.robust import scale as robust_scale

from robust_mct.errors import DegenerateDataError, InvalidDesignError, NumericDomainError
from robust_mct.mct.contrast import dunnett_contrasts, max_t_from_estimates
from robust_mct.models import ContrastMatrix, GroupedSample, MaxTResult, TailSpec

logger = logging.getLogger(__name__)


class PsiFunction(Enum):
    HUBER = "huber"
    BISQUARE = "bisquare"

    @classmethod
    def parse(cls, value: Union["PsiFunction", str]) -> "PsiFunction":
        if isinstance(value, PsiFunction):
            return value
        try:
            return cls(str(value).lower())
        except ValueError:
            raise InvalidDesignError(f"Unknown psi function '{value}'", {"valid": [p.value for p in cls]})

    @property
    def default_tuning(self) -> float:
        return 1.345 if self is PsiFunction.HUBER else 4.685

    def norm(self, tuning: Optional[float] = None) -> norms.RobustNorm:
        c = self.default_tuning if tuning is None else tuning
        if self is PsiFunction.HUBER:
            return norms.HuberT(t=c)
        return norms.TukeyBiweight(c=c)


@dataclass(frozen=True, eq=False)
class MFit:
    """
    One-way M-estimation fit.

    Attributes:
        coefficients: control location followed by the k shifts (treatment - control)
        locations: k+1 group locations
        scale: fixed residual scale
        covariance: asymptotic covariance of ``coefficients``
        location_variances: asymptotic variances of the group locations
    """

    coefficients: np.ndarray
    locations: np.ndarray
    scale: float
    covariance: np.ndarray
    location_variances: np.ndarray
    iterations: int
    converged: bool
    psi: PsiFunction
    tuning: float
    n_obs: int

    @property
    def shifts(self) -> np.ndarray:
        return self.coefficients[1:]

    @property
    def df_resid(self) -> int:
        return self.n_obs - self.locations.size


def _treatment_coding(n_groups: int) -> np.ndarray:
    """Map group locations to (control, shift_1, ..., shift_k)."""
    A = np.eye(n_groups)
    A[1:, 0] = -1.0
    return A


def m_estimate_oneway(
    sample: GroupedSample,
    psi: Union[PsiFunction, str] = PsiFunction.HUBER,
    tuning: Optional[float] = None,
    max_iter: int = 200,
    tol: float = 1e-9,
) -> MFit:
    """
    Huber or bisquare M-estimates of the group locations.

    Raises:
        DegenerateDataError: residual MAD is zero
    """
    psi = PsiFunction.parse(psi)
    norm = psi.norm(tuning)
    c = psi.default_tuning if tuning is None else float(tuning)

    y = sample.values
    g = sample.group_index
    n_groups = len(sample.groups)
    loc = np.array([np.median(grp.responses) for grp in sample.groups])

    scale = float(robust_scale.mad(y - loc[g]))
    if not np.isfinite(scale) or scale <= 1e-12 * max(1.0, float(np.max(np.abs(y)))):
        raise DegenerateDataError(
            "Residual MAD is zero; more than half the residuals are identical",
            {"group_medians": loc.tolist()},
        )

    converged = False
    iterations = 0
    for iterations in range(1, max_iter + 1):
        weights = norm.weights((y - loc[g]) / scale)
        wsum = np.bincount(g, weights=weights, minlength=n_groups)
        wy = np.bincount(g, weights=weights * y, minlength=n_groups)
        new_loc = np.where(wsum > 0.0, wy / np.where(wsum > 0.0, wsum, 1.0), loc)
        step = float(np.max(np.abs(new_loc - loc))) / scale
        loc = new_loc
        if step < tol:
            converged = True
            break
    if not converged:
        logger.warning(f"[ROBUST] M-estimation stopped after {max_iter} iterations without converging")

    r = (y - loc[g]) / scale
    psi_vals = norm.psi(r)
    psi_deriv = norm.psi_deriv(r)
    mean_deriv = float(np.mean(psi_deriv))
    if mean_deriv <= 0.0:
        raise NumericDomainError("Average psi derivative is not positive", {"mean_psi_deriv": mean_deriv})
    efficiency = float(np.mean(psi_vals**2)) / mean_deriv**2
    n_obs = y.size
    correction = n_obs / (n_obs - n_groups)
    location_variances = scale**2 * efficiency / sample.sizes * correction

    A = _treatment_coding(n_groups)
    covariance = (A * location_variances) @ A.T
    return MFit(
        coefficients=A @ loc,
        locations=loc,
        scale=scale,
        covariance=covariance,
        location_variances=location_variances,
        iterations=iterations,
        converged=converged,
        psi=psi,
        tuning=c,
        n_obs=n_obs,
    )


def robust_dunnett(
    sample: GroupedSample,
    psi: Union[PsiFunction, str] = PsiFunction.HUBER,
    tail: Union[TailSpec, str] = TailSpec.TWO_SIDED,
    alpha: float = 0.05,
    *,
    contrasts: Optional[ContrastMatrix] = None,
    tuning: Optional[float] = None,
    seed: Optional[int] = None,
    conf_int: bool = True,
) -> MaxTResult:
    """Max-t test on M-estimated group locations with df = N - (k + 1)."""
    fit = m_estimate_oneway(sample, psi=psi, tuning=tuning)
    if contrasts is None:
        contrasts = dunnett_contrasts(sample.k, labels=sample.labels)
    contrasts.check_compatible(sample)
    C = contrasts.coefficients
    estimates = C @ fit.locations
    cov = (C * fit.location_variances) @ C.T
    return max_t_from_estimates(
        estimates,
        cov,
        float(fit.df_resid),
        tail,
        alpha,
        labels=contrasts.labels,
        method=f"robust-{fit.psi.value}",
        conf_int=conf_int,
        seed=seed,
        flags={"converged": fit.converged, "iterations": fit.iterations, "scale": fit.scale},
    )
