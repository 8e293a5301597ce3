"""
Transformation models.

- bernstein: Bernstein basis and support selection
- model: maximum likelihood fit of monotone transformation models
- dunnett: Dunnett-type shift tests and odds ratios
- mmm: joint tests over stacked marginal models
"""

from .bernstein import BernsteinBasis, support_from_sample
from .dunnett import colr_dunnett, linear_model_df, mlt_dunnett
from .mmm import StackedFit, mmm_dunnett, stack_models
from .model import Link, TransformationModel, fit_mlt

__all__ = [
    "BernsteinBasis",
    "support_from_sample",
    "Link",
    "TransformationModel",
    "fit_mlt",
    "colr_dunnett",
    "linear_model_df",
    "mlt_dunnett",
    "StackedFit",
    "mmm_dunnett",
    "stack_models",
]
