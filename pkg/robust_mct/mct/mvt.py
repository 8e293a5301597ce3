"""
Multivariate normal and t rectangle probabilities and equicoordinate quantiles.

Two integration paths:
- factor path: correlation of the form rho_ij = lambda_i * lambda_j (every
  Dunnett design) is integrated over the shared latent factor with
  Gauss-Hermite nodes, plus Gauss-Legendre nodes over the chi scale for t.
- QMC path: randomized scrambled-Sobol rules on the separation-of-variables
  transform of the Cholesky factor, for arbitrary correlation matrices.

Both are deterministic for a fixed seed.
"""

import logging
from dataclasses import dataclass
from typing import Optional, Sequence, Union

import numpy as np
from scipy import optimize, special, stats
from scipy.stats import qmc

from robust_mct.errors import InvalidDesignError, NumericDomainError
from robust_mct.models import TailSpec
from robust_mct.settings import DEFAULT_SEED, get_settings

logger = logging.getLogger(__name__)

MAX_DIM = 64
PSD_TOLERANCE = 1e-8
EIGEN_FLOOR = 1e-10
FACTOR_NODES = 64
QMC_RANDOMIZATIONS = 10
QMC_START_LOG2 = 10
# Genz's convention: reported error is 3.5 standard errors of the randomized rule
QMC_ERROR_FACTOR = 3.5
_TINY = 1e-16


def regularize_correlation(entries: np.ndarray, floor: float = EIGEN_FLOOR) -> np.ndarray:
    """Floor the eigenvalues at ``floor`` and rescale back to unit diagonal."""
    eigval, eigvec = np.linalg.eigh(entries)
    eigval = np.maximum(eigval, floor)
    fixed = (eigvec * eigval) @ eigvec.T
    scale = np.sqrt(np.diag(fixed))
    fixed = fixed / np.outer(scale, scale)
    fixed = (fixed + fixed.T) / 2.0
    np.fill_diagonal(fixed, 1.0)
    return fixed


class CorrelationMatrix:
    """
    Validated q x q correlation matrix.

    Near-singular inputs (smallest eigenvalue within ``PSD_TOLERANCE`` of zero)
    are clipped to positive definite; clearly indefinite ones are rejected.
    """

    def __init__(self, entries: Union[np.ndarray, Sequence[Sequence[float]]]):
        matrix = np.atleast_2d(np.array(entries, dtype=float))
        if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
            raise NumericDomainError("Correlation matrix must be square", {"shape": list(matrix.shape)})
        dim = matrix.shape[0]
        if dim > MAX_DIM:
            raise InvalidDesignError(f"Dimension {dim} exceeds the supported maximum of {MAX_DIM}")
        if not np.all(np.isfinite(matrix)):
            raise NumericDomainError("Correlation matrix contains non-finite entries")
        if not np.allclose(matrix, matrix.T, atol=1e-10):
            raise NumericDomainError("Correlation matrix is not symmetric")
        if not np.allclose(np.diag(matrix), 1.0, atol=1e-8):
            raise NumericDomainError("Correlation matrix must have a unit diagonal")
        if np.any(np.abs(matrix) > 1.0 + 1e-10):
            raise NumericDomainError("Correlation entries must lie in [-1, 1]")
        matrix = np.clip((matrix + matrix.T) / 2.0, -1.0, 1.0)
        np.fill_diagonal(matrix, 1.0)

        min_eig = float(np.linalg.eigvalsh(matrix)[0]) if dim > 1 else 1.0
        if min_eig < -PSD_TOLERANCE:
            raise NumericDomainError(
                "Correlation matrix is not positive semidefinite",
                {"min_eigenvalue": min_eig},
            )
        self.regularized = min_eig < EIGEN_FLOOR
        if self.regularized:
            logger.debug(f"[MVT] Flooring eigenvalues of near-singular correlation (min {min_eig:.3e})")
            matrix = regularize_correlation(matrix)
        matrix.setflags(write=False)
        self.entries = matrix
        self.dim = dim

    @classmethod
    def from_covariance(cls, cov: np.ndarray) -> "CorrelationMatrix":
        cov = np.atleast_2d(np.asarray(cov, dtype=float))
        sd = np.sqrt(np.diag(cov))
        if np.any(~np.isfinite(sd)) or np.any(sd <= 0.0):
            raise NumericDomainError("Covariance has a non-positive variance", {"variances": np.diag(cov).tolist()})
        corr = cov / np.outer(sd, sd)
        np.fill_diagonal(corr, 1.0)
        return cls(corr)

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.entries, dtype=dtype)

    def __repr__(self) -> str:
        return f"CorrelationMatrix(dim={self.dim})"


@dataclass(frozen=True)
class MvtProbability:
    """Rectangle probability with its absolute error estimate."""

    value: float
    error: float
    method: str
    n_points: int = 0


def _as_correlation(corr) -> CorrelationMatrix:
    return corr if isinstance(corr, CorrelationMatrix) else CorrelationMatrix(corr)


def _is_normal(df: Optional[float]) -> bool:
    return df is None or np.isinf(df)


def dunnett_correlation(sample_sizes: Sequence[int]) -> CorrelationMatrix:
    """
    Correlation of the k many-to-one statistics under a common variance.

    rho_ij = sqrt(1 / ((1 + n0/ni) (1 + n0/nj))) for treatments i != j.
    """
    sizes = np.asarray(sample_sizes, dtype=float)
    if sizes.size < 2:
        raise InvalidDesignError("Dunnett correlation needs a control and at least one treatment", {"groups": int(sizes.size)})
    if np.any(sizes < 1):
        raise InvalidDesignError("Group sizes must be positive", {"sizes": sizes.tolist()})
    loadings = np.sqrt(1.0 / (1.0 + sizes[0] / sizes[1:]))
    corr = np.outer(loadings, loadings)
    np.fill_diagonal(corr, 1.0)
    return CorrelationMatrix(corr)


def factor_loadings(corr, tol: float = 1e-9) -> Optional[np.ndarray]:
    """
    Loadings lambda with corr_ij = lambda_i lambda_j off the diagonal, or None.

    Only nonnegative one-factor structures with lambda < 1 qualify.
    """
    R = np.asarray(_as_correlation(corr).entries)
    q = R.shape[0]
    if q == 1:
        return np.zeros(1)
    off = R[~np.eye(q, dtype=bool)]
    if np.any(off < -tol):
        return None
    if np.all(np.abs(off) <= tol):
        return np.zeros(q)
    if q == 2:
        loadings = np.full(2, np.sqrt(max(R[0, 1], 0.0)))
    else:
        loadings = np.empty(q)
        for i in range(q):
            rest = [j for j in range(q) if j != i]
            sub = R[np.ix_(rest, rest)].copy()
            np.fill_diagonal(sub, -np.inf)
            j_pos, k_pos = np.unravel_index(np.argmax(sub), sub.shape)
            j, k = rest[j_pos], rest[k_pos]
            if R[j, k] <= tol:
                return None
            loadings[i] = np.sqrt(max(R[i, j] * R[i, k] / R[j, k], 0.0))
    if np.any(loadings >= 1.0 - 1e-12):
        return None
    fitted = np.outer(loadings, loadings)
    mask = ~np.eye(q, dtype=bool)
    if np.max(np.abs(fitted[mask] - R[mask])) > tol:
        return None
    return loadings


def _chi_scale_nodes(df: Optional[float], nodes: int):
    """Nodes/weights of the scale variable sqrt(chi2_df / df); a point mass for the normal case."""
    if _is_normal(df):
        return np.ones(1), np.ones(1)
    u, w = special.roots_legendre(nodes)
    u = (u + 1.0) / 2.0
    w = w / 2.0
    scale = np.sqrt(stats.chi2.ppf(u, df) / df)
    return scale, w


def _factor_probability(lower: np.ndarray, upper: np.ndarray, loadings: np.ndarray, df, nodes: int) -> float:
    z, wz = special.roots_hermitenorm(nodes)
    wz = wz / np.sqrt(2.0 * np.pi)
    scale, ws = _chi_scale_nodes(df, nodes)
    resid_sd = np.sqrt(1.0 - loadings**2)

    # shapes: (scale, factor node, dimension)
    shift = loadings[None, None, :] * z[None, :, None]
    lo = (lower[None, None, :] * scale[:, None, None] - shift) / resid_sd
    hi = (upper[None, None, :] * scale[:, None, None] - shift) / resid_sd
    cell = np.clip(special.ndtr(hi) - special.ndtr(lo), 0.0, 1.0)
    inner = np.prod(cell, axis=2) @ wz
    return float(inner @ ws)


def _genz_integrand(points: np.ndarray, lower: np.ndarray, upper: np.ndarray, chol: np.ndarray, df) -> np.ndarray:
    n_points = points.shape[0]
    q = chol.shape[0]
    if _is_normal(df):
        scale = np.ones(n_points)
        uniforms = points
    else:
        u0 = np.clip(points[:, 0], 1e-12, 1.0 - 1e-12)
        scale = np.sqrt(stats.chi2.ppf(u0, df) / df)
        uniforms = points[:, 1:]

    a = lower[None, :] * scale[:, None]
    b = upper[None, :] * scale[:, None]
    y = np.zeros((n_points, q))
    d = special.ndtr(a[:, 0] / chol[0, 0])
    e = special.ndtr(b[:, 0] / chol[0, 0])
    f = e - d
    for i in range(1, q):
        u = np.clip(d + uniforms[:, i - 1] * (e - d), _TINY, 1.0 - _TINY)
        y[:, i - 1] = special.ndtri(u)
        shift = y[:, :i] @ chol[i, :i]
        d = special.ndtr((a[:, i] - shift) / chol[i, i])
        e = special.ndtr((b[:, i] - shift) / chol[i, i])
        f = f * (e - d)
    return f


def _qmc_probability(lower, upper, R, df, seed: int, abs_tol: float, max_points: int) -> MvtProbability:
    q = R.shape[0]
    # integrate the tightest limits first
    width = special.ndtr(upper) - special.ndtr(lower)
    order = np.argsort(width, kind="stable")
    lower, upper = lower[order], upper[order]
    R = R[np.ix_(order, order)]
    try:
        chol = np.linalg.cholesky(R)
    except np.linalg.LinAlgError as exc:
        raise NumericDomainError("Cholesky factorization of the correlation failed") from exc

    dims = (q - 1) + (0 if _is_normal(df) else 1)
    rng = np.random.default_rng(seed)
    log2_points = QMC_START_LOG2
    used = 0
    while True:
        estimates = np.empty(QMC_RANDOMIZATIONS)
        for r in range(QMC_RANDOMIZATIONS):
            sampler = qmc.Sobol(d=dims, scramble=True, seed=rng)
            points = sampler.random_base2(m=log2_points)
            estimates[r] = _genz_integrand(points, lower, upper, chol, df).mean()
        used += QMC_RANDOMIZATIONS * 2**log2_points
        value = float(estimates.mean())
        error = float(QMC_ERROR_FACTOR * estimates.std(ddof=1) / np.sqrt(QMC_RANDOMIZATIONS))
        if error < abs_tol or used >= max_points:
            break
        log2_points += 1

    if error >= abs_tol:
        logger.warning(f"[MVT] QMC error {error:.2e} above tolerance {abs_tol:.1e} after {used} points")
    return MvtProbability(value=min(max(value, 0.0), 1.0), error=error, method="qmc", n_points=used)


def mvt_rectangle(
    lower: Sequence[float],
    upper: Sequence[float],
    corr,
    df: Optional[float] = np.inf,
    *,
    method: str = "auto",
    seed: Optional[int] = None,
    abs_tol: float = 1e-4,
    max_points: Optional[int] = None,
    nodes: int = FACTOR_NODES,
) -> MvtProbability:
    """
    P(lower <= T <= upper) for T multivariate t(df, corr); df=inf gives the normal case.

    Args:
        lower, upper: limits, may contain -inf / inf.
        corr: CorrelationMatrix or array.
        df: degrees of freedom, ``inf`` (or None) for the normal distribution.
        method: "auto", "factor" or "qmc".
        seed: QMC seed, defaults to the package seed.

    Returns:
        MvtProbability with value and absolute error estimate.
    """
    corr = _as_correlation(corr)
    lower = np.asarray(lower, dtype=float).ravel()
    upper = np.asarray(upper, dtype=float).ravel()
    q = corr.dim
    if lower.size != q or upper.size != q:
        raise InvalidDesignError("Limits and correlation dimensions differ", {"q": q, "lower": lower.size, "upper": upper.size})
    if np.any(lower >= upper):
        raise NumericDomainError("Lower limits must be strictly below upper limits")
    if df is not None and not np.isinf(df) and df <= 0:
        raise NumericDomainError("Degrees of freedom must be positive", {"df": df})
    normal = _is_normal(df)

    if np.all(np.isneginf(lower)) and np.all(np.isposinf(upper)):
        return MvtProbability(1.0, 0.0, "trivial")
    if q == 1:
        dist = stats.norm if normal else stats.t(df)
        return MvtProbability(float(dist.cdf(upper[0]) - dist.cdf(lower[0])), 0.0, "univariate")

    loadings = None
    if method in ("auto", "factor"):
        loadings = factor_loadings(corr)
        if loadings is None and method == "factor":
            raise NumericDomainError("Correlation matrix has no one-factor structure")

    if loadings is not None:
        value = _factor_probability(lower, upper, loadings, df, nodes)
        coarse = _factor_probability(lower, upper, loadings, df, max(nodes // 2, 8))
        result = MvtProbability(min(max(value, 0.0), 1.0), abs(value - coarse), "factor", nodes if normal else nodes * nodes)
    else:
        seed = DEFAULT_SEED if seed is None else seed
        cap = max_points if max_points is not None else get_settings().mvt_max_points
        result = _qmc_probability(lower, upper, np.asarray(corr.entries), df, seed, abs_tol, cap)
    logger.debug(f"[MVT] q={q} df={df} method={result.method} value={result.value:.6f} error={result.error:.1e}")
    return result


def univariate_quantile(p: float, df: Optional[float]) -> float:
    return float(stats.norm.ppf(p) if _is_normal(df) else stats.t.ppf(p, df))


def equicoordinate_quantile(
    corr,
    df: Optional[float],
    alpha: float,
    tail: Union[TailSpec, str] = TailSpec.TWO_SIDED,
    *,
    seed: Optional[int] = None,
    abs_tol: float = 1e-5,
    xtol: float = 1e-6,
) -> float:
    """
    Critical value c with P(max |T| <= c) = 1 - alpha (two-sided) or P(max T <= c) = 1 - alpha.

    Bisection over the bracket [univariate quantile, q x univariate quantile],
    widened to the Bonferroni quantile if that is larger.
    """
    if not 0.0 < alpha < 1.0:
        raise InvalidDesignError("alpha must lie in (0, 1)", {"alpha": alpha})
    corr = _as_correlation(corr)
    tail = TailSpec.parse(tail)
    q = corr.dim
    two_sided = tail is TailSpec.TWO_SIDED
    marginal = 1.0 - alpha / 2.0 if two_sided else 1.0 - alpha
    uni = univariate_quantile(marginal, df)
    if q == 1:
        return uni

    def excess_coverage(c: float) -> float:
        upper = np.full(q, c)
        lower = -upper if two_sided else np.full(q, -np.inf)
        return mvt_rectangle(lower, upper, corr, df, seed=seed, abs_tol=abs_tol).value - (1.0 - alpha)

    bonferroni = univariate_quantile(1.0 - (alpha / 2.0 if two_sided else alpha) / q, df)
    lo = uni
    hi = max(uni * q, bonferroni)
    if two_sided and lo <= 0.0:
        lo = 1e-8
    if excess_coverage(lo) >= 0.0:
        return lo
    for _ in range(8):
        if excess_coverage(hi) >= 0.0:
            break
        hi *= 2.0
    root = optimize.bisect(excess_coverage, lo, hi, xtol=xtol)
    logger.debug(f"[MVT] quantile q={q} df={df} alpha={alpha} tail={tail.value} -> {root:.6f}")
    return float(root)
