"""
Multiple contrast tests for the one-way layout.

This package contains the max-t machinery and its estimation backends:
- mvt: multivariate normal/t probabilities and equicoordinate quantiles
- contrast: Dunnett contrasts and the max-t engine
- variance: pooled, Satterthwaite and sandwich covariances
- robust: Huber/bisquare M-estimation
- nparm: nonparametric relative effects
"""

from .contrast import (
    VarianceMethod,
    adjusted_pvalues,
    dunnett_contrasts,
    max_t_from_estimates,
    max_t_test,
    unadjusted_pvalues,
)
from .mvt import (
    CorrelationMatrix,
    MvtProbability,
    dunnett_correlation,
    equicoordinate_quantile,
    factor_loadings,
    mvt_rectangle,
    regularize_correlation,
)
from .nparm import EffectLink, RelEffects, npar_dunnett, relative_effects
from .robust import MFit, PsiFunction, m_estimate_oneway, robust_dunnett
from .variance import HeteroSummary, pooled_variance, sandwich_covariance, satterthwaite

__all__ = [
    "CorrelationMatrix",
    "MvtProbability",
    "dunnett_correlation",
    "equicoordinate_quantile",
    "factor_loadings",
    "mvt_rectangle",
    "regularize_correlation",
    "VarianceMethod",
    "adjusted_pvalues",
    "dunnett_contrasts",
    "max_t_from_estimates",
    "max_t_test",
    "unadjusted_pvalues",
    "HeteroSummary",
    "pooled_variance",
    "sandwich_covariance",
    "satterthwaite",
    "MFit",
    "PsiFunction",
    "m_estimate_oneway",
    "robust_dunnett",
    "EffectLink",
    "RelEffects",
    "npar_dunnett",
    "relative_effects",
]
