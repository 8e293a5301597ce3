"""
Domain value types shared by every procedure: the one-way layout, contrast
matrices and the max-t result table.
"""

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Dict, List, Optional, Sequence

import numpy as np
import pandas as pd

from robust_mct.errors import InvalidDesignError


class TailSpec(Enum):
    """Direction of the alternative hypothesis."""

    TWO_SIDED = "two.sided"
    GREATER = "greater"
    LESS = "less"

    @classmethod
    def parse(cls, value: "TailSpec | str") -> "TailSpec":
        if isinstance(value, TailSpec):
            return value
        aliases = {
            "two.sided": cls.TWO_SIDED,
            "two-sided": cls.TWO_SIDED,
            "two_sided": cls.TWO_SIDED,
            "twosided": cls.TWO_SIDED,
            "greater": cls.GREATER,
            "less": cls.LESS,
        }
        try:
            return aliases[str(value).lower()]
        except KeyError:
            raise InvalidDesignError(f"Unknown tail '{value}'", {"valid": sorted(aliases)})

    def flipped(self) -> "TailSpec":
        """The same hypothesis expressed on a sign-reversed scale."""
        if self is TailSpec.GREATER:
            return TailSpec.LESS
        if self is TailSpec.LESS:
            return TailSpec.GREATER
        return self


@dataclass(frozen=True, eq=False)
class Group:
    """One group of the layout."""

    label: str
    responses: np.ndarray
    dose: Optional[float] = None

    @property
    def n(self) -> int:
        return int(self.responses.size)


@dataclass(frozen=True, eq=False)
class GroupedSample:
    """
    One-way layout: a control group (index 0) plus k treatment groups.

    Attributes:
        groups: groups in analysis order, control first.
    """

    groups: tuple

    def __post_init__(self):
        groups = tuple(self.groups)
        if len(groups) < 2:
            raise InvalidDesignError(
                "A one-way layout needs a control and at least one treatment group",
                {"groups": len(groups)},
            )
        cleaned = []
        for group in groups:
            values = np.asarray(group.responses, dtype=float).ravel()
            if values.size < 2:
                raise InvalidDesignError(
                    f"Group '{group.label}' has {values.size} observation(s); at least 2 are required",
                    {"group": group.label, "n": int(values.size)},
                )
            if not np.all(np.isfinite(values)):
                raise InvalidDesignError(f"Group '{group.label}' contains non-finite responses", {"group": group.label})
            values.setflags(write=False)
            cleaned.append(Group(label=str(group.label), responses=values, dose=group.dose))
        object.__setattr__(self, "groups", tuple(cleaned))

    @classmethod
    def from_arrays(
        cls,
        arrays: Sequence[Sequence[float]],
        labels: Optional[Sequence[str]] = None,
        doses: Optional[Sequence[float]] = None,
    ) -> "GroupedSample":
        """Build a sample from plain arrays; the first array is the control."""
        labels = list(labels) if labels is not None else [str(i) for i in range(len(arrays))]
        doses = list(doses) if doses is not None else [None] * len(arrays)
        return cls(tuple(Group(label=lab, responses=np.asarray(a, dtype=float), dose=d) for a, lab, d in zip(arrays, labels, doses)))

    @property
    def k(self) -> int:
        """Number of treatment groups."""
        return len(self.groups) - 1

    @property
    def labels(self) -> List[str]:
        return [g.label for g in self.groups]

    @property
    def sizes(self) -> np.ndarray:
        return np.array([g.n for g in self.groups], dtype=int)

    @property
    def n_total(self) -> int:
        return int(self.sizes.sum())

    @property
    def means(self) -> np.ndarray:
        return np.array([g.responses.mean() for g in self.groups])

    @property
    def variances(self) -> np.ndarray:
        return np.array([g.responses.var(ddof=1) for g in self.groups])

    @property
    def values(self) -> np.ndarray:
        """All responses concatenated in group order."""
        return np.concatenate([g.responses for g in self.groups])

    @property
    def group_index(self) -> np.ndarray:
        """Group index (0..k) of every entry of ``values``."""
        return np.repeat(np.arange(len(self.groups)), self.sizes)

    def map(self, func) -> "GroupedSample":
        """Apply ``func`` to every response, keeping labels and doses."""
        return GroupedSample(tuple(Group(g.label, func(np.asarray(g.responses)), g.dose) for g in self.groups))


@dataclass(frozen=True, eq=False)
class ContrastMatrix:
    """q x (k+1) contrast coefficients with one label per row."""

    coefficients: np.ndarray
    labels: tuple = ()

    def __post_init__(self):
        coef = np.atleast_2d(np.asarray(self.coefficients, dtype=float))
        if coef.shape[1] < 2:
            raise InvalidDesignError("Contrasts need at least two columns", {"shape": coef.shape})
        if np.any(np.all(coef == 0.0, axis=1)):
            raise InvalidDesignError("Contrast matrix contains an all-zero row")
        if not np.allclose(coef.sum(axis=1), 0.0, atol=1e-12):
            raise InvalidDesignError("Every contrast row must sum to zero", {"row_sums": coef.sum(axis=1).tolist()})
        labels = tuple(self.labels) if self.labels else tuple(f"C{i + 1}" for i in range(coef.shape[0]))
        if len(labels) != coef.shape[0]:
            raise InvalidDesignError("One label per contrast row is required")
        coef.setflags(write=False)
        object.__setattr__(self, "coefficients", coef)
        object.__setattr__(self, "labels", labels)

    @property
    def q(self) -> int:
        return int(self.coefficients.shape[0])

    @property
    def n_groups(self) -> int:
        return int(self.coefficients.shape[1])

    def check_compatible(self, sample: GroupedSample) -> None:
        if self.n_groups != len(sample.groups):
            raise InvalidDesignError(
                f"Contrast matrix has {self.n_groups} columns but the sample has {len(sample.groups)} groups"
            )


@dataclass(frozen=True, eq=False)
class ContrastEstimate:
    """One row of a max-t result table."""

    label: str
    estimate: float
    std_error: float
    statistic: float
    p_adjusted: float
    lower: float
    upper: float
    df: float
    p_unadjusted: float = float("nan")
    # back-transformed effect (relative effect, odds ratio) when the test scale differs
    effect: Optional[float] = None
    effect_lower: Optional[float] = None
    effect_upper: Optional[float] = None


@dataclass(frozen=True, eq=False)
class MaxTResult:
    """
    Max-t multiple contrast test result.

    Rows are in input contrast order. ``df`` is the single degree of freedom
    used for the joint distribution (``inf`` for the asymptotic normal case).
    """

    contrasts: tuple
    df: float
    critical_value: float
    alpha: float
    tail: TailSpec
    correlation: np.ndarray
    method: str
    effect_name: Optional[str] = None
    flags: Dict[str, Any] = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.contrasts)

    @property
    def labels(self) -> List[str]:
        return [c.label for c in self.contrasts]

    @property
    def p_adjusted(self) -> np.ndarray:
        return np.array([c.p_adjusted for c in self.contrasts])

    @property
    def statistics(self) -> np.ndarray:
        return np.array([c.statistic for c in self.contrasts])

    @property
    def estimates(self) -> np.ndarray:
        return np.array([c.estimate for c in self.contrasts])

    @property
    def rejected(self) -> np.ndarray:
        return self.p_adjusted < self.alpha

    @property
    def any_rejected(self) -> bool:
        return bool(np.any(self.rejected))

    def to_frame(self) -> pd.DataFrame:
        """Per-contrast table with method metadata columns."""
        rows = []
        for c in self.contrasts:
            row = {
                "comparison": c.label,
                "estimate": c.estimate,
                "std_error": c.std_error,
                "statistic": c.statistic,
                "p_adjusted": c.p_adjusted,
                "lower": c.lower,
                "upper": c.upper,
                "df": c.df,
            }
            if self.effect_name is not None:
                row[self.effect_name] = c.effect
                row[f"{self.effect_name}_lower"] = c.effect_lower
                row[f"{self.effect_name}_upper"] = c.effect_upper
            row["method"] = self.method
            row["tail"] = self.tail.value
            row["alpha"] = self.alpha
            row["critical_value"] = self.critical_value
            row["joint_df"] = self.df
            rows.append(row)
        return pd.DataFrame(rows)

    def to_dict(self) -> Dict[str, Any]:
        """JSON-friendly representation (infinities become strings)."""

        def _num(x):
            if x is None:
                return None
            x = float(x)
            if math.isinf(x):
                return "inf" if x > 0 else "-inf"
            if math.isnan(x):
                return None
            return x

        return {
            "method": self.method,
            "tail": self.tail.value,
            "alpha": self.alpha,
            "df": _num(self.df),
            "critical_value": _num(self.critical_value),
            "flags": self.flags,
            "contrasts": [
                {key: (_num(val) if key != "label" else val) for key, val in c.__dict__.items()} for c in self.contrasts
            ],
        }
