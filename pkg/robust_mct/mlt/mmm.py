"""
Multiple marginal models: joint Dunnett-type inference over several
endpoints measured on the same subjects.

Each endpoint keeps its own transformation model. The joint covariance of
all shift estimates is the empirical sandwich of the stacked per-subject
scores, with bread = (information / N)^-1 and meat = scores' scores / N.
"""

import logging
from dataclasses import dataclass, replace
from typing import List, Optional, Sequence, Union

import numpy as np
from scipy import linalg

from robust_mct.errors import InvalidDesignError, NumericDomainError
from robust_mct.mct.contrast import max_t_from_estimates
from robust_mct.mlt.dunnett import odds_ratio_rows, shift_labels
from robust_mct.mlt.model import Link, TransformationModel
from robust_mct.models import MaxTResult, TailSpec

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class StackedFit:
    """
    Stacked marginal models.

    Attributes:
        covariance: joint covariance of all shift estimates, endpoint-major order
        raw_covariance: uncalibrated sandwich covariance of the same parameters
        df: mean of the per-model dfs
    """

    models: tuple
    names: tuple
    covariance: np.ndarray
    raw_covariance: np.ndarray
    n_subjects: int
    df: float

    @property
    def estimates(self) -> np.ndarray:
        return np.concatenate([m.beta for m in self.models])

    @property
    def labels(self) -> List[str]:
        out = []
        for name, model in zip(self.names, self.models):
            out.extend(f"{name}: {lab}" for lab in shift_labels(model, ratio=True))
        return out

    @property
    def correlation(self) -> np.ndarray:
        sd = np.sqrt(np.diag(self.covariance))
        return self.covariance / np.outer(sd, sd)


def _sym_power(matrix: np.ndarray, power: float) -> np.ndarray:
    eigval, eigvec = linalg.eigh(matrix)
    if np.any(eigval <= 0.0):
        raise NumericDomainError("Covariance block is not positive definite", {"min_eigenvalue": float(eigval.min())})
    return (eigvec * eigval**power) @ eigvec.T


def stack_models(
    models: Sequence[TransformationModel],
    subject_index: Optional[Sequence[Sequence]] = None,
    *,
    names: Optional[Sequence[str]] = None,
    calibrate: bool = True,
) -> StackedFit:
    """
    Joint sandwich covariance of the shift parameters of several models.

    Args:
        models: fitted models on the same subjects
        subject_index: optional subject ids per model row; rows are aligned by id
        names: endpoint names used in labels
        calibrate: map the sandwich correlation onto the model-based marginal
            covariances so diagonal blocks equal each model's own covariance

    Raises:
        InvalidDesignError: fewer than two models or mismatched subjects
        NumericDomainError: singular information matrix
    """
    models = tuple(models)
    if len(models) < 2:
        raise InvalidDesignError("Stacking needs at least two models", {"models": len(models)})
    n = models[0].n_obs
    if any(m.n_obs != n for m in models):
        raise InvalidDesignError("Models were fitted on different numbers of subjects", {"n_obs": [m.n_obs for m in models]})
    names = tuple(names) if names is not None else tuple(f"E{i + 1}" for i in range(len(models)))
    if len(names) != len(models):
        raise InvalidDesignError("One name per model is required")

    if subject_index is not None:
        orders = []
        reference = np.asarray(subject_index[0])
        ref_sorted = np.sort(reference)
        for ids in subject_index:
            ids = np.asarray(ids)
            if ids.size != n or not np.array_equal(np.sort(ids), ref_sorted):
                raise InvalidDesignError("Subject ids differ between models")
            orders.append(np.argsort(ids, kind="stable"))
    else:
        if any(not np.array_equal(m.group_index, models[0].group_index) for m in models):
            raise InvalidDesignError("Models disagree on the group of some subjects")
        orders = [np.arange(n)] * len(models)

    score_blocks = []
    breads = []
    shift_positions = []
    offset = 0
    for model, order in zip(models, orders):
        info = model.information()
        try:
            breads.append(np.linalg.inv(info))
        except np.linalg.LinAlgError as exc:
            raise NumericDomainError("Observed information is singular") from exc
        score_blocks.append(model.scores()[order])
        shift_positions.extend(range(offset + model.shift_index.start, offset + model.shift_index.stop))
        offset += model.n_params

    scores = np.hstack(score_blocks)
    bread = linalg.block_diag(*breads)
    # (N I^-1)(U'U / N)(N I^-1) / N
    full = bread @ (scores.T @ scores) @ bread.T
    raw = full[np.ix_(shift_positions, shift_positions)]
    raw = (raw + raw.T) / 2.0

    if calibrate:
        transforms = []
        start = 0
        for model in models:
            block = slice(start, start + model.k)
            transforms.append(_sym_power(model.shift_covariance, 0.5) @ _sym_power(raw[block, block], -0.5))
            start += model.k
        T = linalg.block_diag(*transforms)
        joint = T @ raw @ T.T
        joint = (joint + joint.T) / 2.0
    else:
        joint = raw

    df = float(np.mean([m.df for m in models]))
    logger.info(f"[MMM] Stacked {len(models)} models on {n} subjects, {joint.shape[0]} shift parameters, df={df:g}")
    return StackedFit(
        models=models,
        names=names,
        covariance=joint,
        raw_covariance=raw,
        n_subjects=n,
        df=df,
    )


def mmm_dunnett(
    stacked: StackedFit,
    tail: Union[TailSpec, str] = TailSpec.TWO_SIDED,
    alpha: float = 0.05,
    *,
    df: Optional[float] = None,
    seed: Optional[int] = None,
    conf_int: bool = True,
) -> MaxTResult:
    """
    Max-t test over every (endpoint, dose) shift.

    Uses ``stacked.df`` unless ``df`` is given. When every model has the
    logistic link the rows carry odds ratios and the tail refers to the
    odds-ratio scale, as in ``colr_dunnett``.
    """
    tail = TailSpec.parse(tail)
    odds = all(m.link is Link.LOGISTIC for m in stacked.models)
    joint_df = stacked.df if df is None else df
    result = max_t_from_estimates(
        stacked.estimates,
        stacked.covariance,
        joint_df,
        tail.flipped() if odds else tail,
        alpha,
        labels=stacked.labels,
        method="mmm",
        conf_int=conf_int,
        seed=seed,
        flags={"endpoints": list(stacked.names), "converged": all(m.converged for m in stacked.models)},
    )
    if odds:
        return replace(result, contrasts=odds_ratio_rows(result), tail=tail, effect_name="odds_ratio")
    return result
