"""
Bernstein polynomial basis for monotone transformation functions.
"""

from typing import Sequence, Tuple

import numpy as np
from scipy import stats

from robust_mct.errors import DegenerateDataError, InvalidDesignError


def support_from_sample(responses: Sequence[float], p_lo: float = 0.01, p_hi: float = 0.99) -> Tuple[float, float]:
    """
    Basis support from type-7 sample quantiles.

    Falls back to the sample range when the quantiles coincide.

    Raises:
        DegenerateDataError: fewer than two distinct values
    """
    y = np.asarray(responses, dtype=float).ravel()
    if y.size < 2 or np.ptp(y) == 0.0:
        raise DegenerateDataError("Support needs at least two distinct response values")
    if not 0.0 <= p_lo < p_hi <= 1.0:
        raise InvalidDesignError("Support quantiles must satisfy 0 <= p_lo < p_hi <= 1", {"p_lo": p_lo, "p_hi": p_hi})
    lo, hi = np.quantile(y, [p_lo, p_hi], method="linear")
    if hi <= lo:
        lo, hi = float(y.min()), float(y.max())
    return float(lo), float(hi)


class BernsteinBasis:
    """
    Order-M Bernstein basis on [lo, hi], linearly extended outside.

    ``evaluate`` returns the (n, M+1) design a(y); ``derivative`` returns a'(y).
    Outside the support the basis continues with the boundary slope so that
    h(y) = a(y)' theta stays linear and increasing there.
    """

    def __init__(self, order: int = 5, support: Tuple[float, float] = (0.0, 1.0)):
        if int(order) < 1:
            raise InvalidDesignError("Bernstein order must be at least 1", {"order": order})
        lo, hi = float(support[0]), float(support[1])
        if not (np.isfinite(lo) and np.isfinite(hi)) or lo >= hi:
            raise InvalidDesignError("Support must satisfy lo < hi", {"support": [lo, hi]})
        self.order = int(order)
        self.lo = lo
        self.hi = hi

    @property
    def size(self) -> int:
        return self.order + 1

    @property
    def width(self) -> float:
        return self.hi - self.lo

    def _inside(self, x: np.ndarray) -> np.ndarray:
        j = np.arange(self.size)
        return stats.binom.pmf(j[None, :], self.order, x[:, None])

    def _inside_deriv(self, x: np.ndarray) -> np.ndarray:
        lower = stats.binom.pmf(np.arange(self.order)[None, :], self.order - 1, x[:, None])
        padded = np.zeros((x.size, self.size + 1))
        padded[:, 1:-1] = lower
        # d/dx b_{j,M} = M (b_{j-1,M-1} - b_{j,M-1})
        return self.order * (padded[:, :-1] - padded[:, 1:]) / self.width

    def derivative(self, y) -> np.ndarray:
        y = np.atleast_1d(np.asarray(y, dtype=float))
        x = np.clip((y - self.lo) / self.width, 0.0, 1.0)
        return self._inside_deriv(x)

    def evaluate(self, y) -> np.ndarray:
        y = np.atleast_1d(np.asarray(y, dtype=float))
        x = (y - self.lo) / self.width
        basis = self._inside(np.clip(x, 0.0, 1.0))
        below = x < 0.0
        above = x > 1.0
        if np.any(below | above):
            slope = self.derivative(y)
            edge = np.where(below, self.lo, self.hi)
            outside = below | above
            basis[outside] = basis[outside] + slope[outside] * (y[outside] - edge[outside])[:, None]
        return basis

    def grid(self) -> np.ndarray:
        """Abscissae lo + j (hi - lo)/M at which the coefficients of an affine h equal h."""
        return self.lo + np.arange(self.size) * self.width / self.order

    def __repr__(self) -> str:
        return f"BernsteinBasis(order={self.order}, support=({self.lo:.6g}, {self.hi:.6g}))"
