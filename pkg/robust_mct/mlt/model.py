"""
Most likely transformation models for the one-way layout.

The model is P(Y <= y | group g) = F_Z(h(y) + beta_g) with h(y) = a(y)' theta
a monotone Bernstein polynomial, beta_0 = 0 for the control and F_Z the
standard normal or standard logistic distribution. theta is kept increasing
by optimizing over theta_1 and the log-increments of theta.
"""

import logging
from dataclasses import dataclass, field
from enum import Enum
from functools import cached_property
from typing import Any, Dict, List, Optional, Tuple, Union

import numpy as np
from scipy import optimize, special, stats

from robust_mct.errors import ConvergenceError, InvalidDesignError
from robust_mct.mlt.bernstein import BernsteinBasis, support_from_sample
from robust_mct.models import GroupedSample

logger = logging.getLogger(__name__)


class Link(Enum):
    """Error distribution F_Z of the transformation model."""

    NORMAL = "normal"
    LOGISTIC = "logistic"

    @classmethod
    def parse(cls, value: Union["Link", str]) -> "Link":
        if isinstance(value, Link):
            return value
        try:
            return cls(str(value).lower())
        except ValueError:
            raise InvalidDesignError(f"Unknown link '{value}'", {"valid": [lnk.value for lnk in cls]})

    @property
    def scale(self) -> float:
        """Standard deviation of F_Z."""
        return 1.0 if self is Link.NORMAL else float(np.pi / np.sqrt(3.0))

    def logpdf(self, z: np.ndarray) -> np.ndarray:
        return stats.norm.logpdf(z) if self is Link.NORMAL else stats.logistic.logpdf(z)

    def dlogpdf(self, z: np.ndarray) -> np.ndarray:
        if self is Link.NORMAL:
            return -z
        return 1.0 - 2.0 * special.expit(z)

    def d2logpdf(self, z: np.ndarray) -> np.ndarray:
        if self is Link.NORMAL:
            return -np.ones_like(z)
        p = special.expit(z)
        return -2.0 * p * (1.0 - p)

    def cdf(self, z):
        return stats.norm.cdf(z) if self is Link.NORMAL else special.expit(z)


class _Likelihood:
    """Log-likelihood and derivatives in (theta, beta) coordinates."""

    def __init__(self, design: np.ndarray, design_deriv: np.ndarray, group_index: np.ndarray, k: int, link: Link):
        self.a = design
        self.ap = design_deriv
        self.g = group_index
        self.k = k
        self.link = link
        self.n_theta = design.shape[1]

    def _state(self, theta: np.ndarray, beta: np.ndarray):
        shift = np.concatenate([[0.0], beta])[self.g]
        z = self.a @ theta + shift
        slope = self.ap @ theta
        return z, slope

    def loglik(self, theta: np.ndarray, beta: np.ndarray) -> float:
        z, slope = self._state(theta, beta)
        if np.any(slope <= 0.0):
            return -np.inf
        return float(np.sum(self.link.logpdf(z)) + np.sum(np.log(slope)))

    def scores(self, theta: np.ndarray, beta: np.ndarray) -> np.ndarray:
        """Per-observation score contributions, shape (N, M+1+k)."""
        z, slope = self._state(theta, beta)
        d1 = self.link.dlogpdf(z)
        s_theta = d1[:, None] * self.a + self.ap / slope[:, None]
        onehot = (self.g[:, None] == np.arange(1, self.k + 1)[None, :]).astype(float)
        return np.hstack([s_theta, d1[:, None] * onehot])

    def gradient(self, theta: np.ndarray, beta: np.ndarray) -> np.ndarray:
        z, slope = self._state(theta, beta)
        d1 = self.link.dlogpdf(z)
        g_theta = self.a.T @ d1 + self.ap.T @ (1.0 / slope)
        g_beta = np.bincount(self.g, weights=d1, minlength=self.k + 1)[1:]
        return np.concatenate([g_theta, g_beta])

    def hessian(self, theta: np.ndarray, beta: np.ndarray) -> np.ndarray:
        z, slope = self._state(theta, beta)
        d2 = self.link.d2logpdf(z)
        onehot = (self.g[:, None] == np.arange(1, self.k + 1)[None, :]).astype(float)
        full = np.hstack([self.a, onehot])
        H = (full * d2[:, None]).T @ full
        ap = self.ap / slope[:, None]
        H[: self.n_theta, : self.n_theta] -= ap.T @ ap
        return H


class _Objective:
    """Negative log-likelihood over (theta_1, log increments, beta)."""

    def __init__(self, likelihood: _Likelihood):
        self.lik = likelihood
        self.m1 = likelihood.n_theta

    def unpack(self, params: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        steps = np.exp(params[1 : self.m1])
        theta = params[0] + np.concatenate([[0.0], np.cumsum(steps)])
        return theta, params[self.m1 :]

    def _jacobian(self, params: np.ndarray) -> np.ndarray:
        steps = np.exp(params[1 : self.m1])
        J = np.zeros((self.m1, self.m1))
        J[:, 0] = 1.0
        for col in range(1, self.m1):
            J[col:, col] = steps[col - 1]
        return J

    def value(self, params: np.ndarray) -> float:
        ll = self.lik.loglik(*self.unpack(params))
        return np.inf if not np.isfinite(ll) else -ll

    def grad(self, params: np.ndarray) -> np.ndarray:
        full = self.lik.gradient(*self.unpack(params))
        J = self._jacobian(params)
        return -np.concatenate([J.T @ full[: self.m1], full[self.m1 :]])

    def hess(self, params: np.ndarray) -> np.ndarray:
        theta, beta = self.unpack(params)
        full_grad = self.lik.gradient(theta, beta)
        H = self.lik.hessian(theta, beta)
        J = self._jacobian(params)
        n = params.size
        Jfull = np.eye(n)
        Jfull[: self.m1, : self.m1] = J
        out = Jfull.T @ H @ Jfull
        # curvature of theta in the log-increments
        steps = np.exp(params[1 : self.m1])
        tail_sums = np.cumsum(full_grad[: self.m1][::-1])[::-1][1:]
        out[np.arange(1, self.m1), np.arange(1, self.m1)] += steps * tail_sums
        return -out


@dataclass
class _Run:
    params: np.ndarray
    loglik: float
    gradient_norm: float
    iterations: int
    trace: List[float]
    message: str
    start: str


@dataclass(frozen=True, eq=False)
class TransformationModel:
    """
    Fitted transformation model with group shifts.

    Attributes:
        theta: nondecreasing Bernstein coefficients of h
        beta: k shifts, control fixed at 0
        covariance: inverse observed information of (theta, beta)
        trace: log-likelihood after every optimizer iteration of the selected start
    """

    basis: BernsteinBasis
    link: Link
    theta: np.ndarray
    beta: np.ndarray
    loglik: float
    covariance: np.ndarray
    converged: bool
    iterations: int
    gradient_norm: float
    trace: tuple
    labels: tuple
    responses: np.ndarray
    group_index: np.ndarray
    flags: Dict[str, Any] = field(default_factory=dict)

    @property
    def k(self) -> int:
        return int(self.beta.size)

    @property
    def order(self) -> int:
        return self.basis.order

    @property
    def n_obs(self) -> int:
        return int(self.responses.size)

    @property
    def n_params(self) -> int:
        return self.basis.size + self.k

    @property
    def df(self) -> int:
        """Number of model parameters, M + 1 + k."""
        return self.n_params

    @property
    def shift_index(self) -> slice:
        return slice(self.basis.size, self.n_params)

    @property
    def shift_covariance(self) -> np.ndarray:
        return self.covariance[self.shift_index, self.shift_index]

    @property
    def shift_std_errors(self) -> np.ndarray:
        return np.sqrt(np.diag(self.shift_covariance))

    @cached_property
    def _likelihood(self) -> _Likelihood:
        return _Likelihood(
            self.basis.evaluate(self.responses),
            self.basis.derivative(self.responses),
            self.group_index,
            self.k,
            self.link,
        )

    def transform(self, y) -> np.ndarray:
        """h(y)."""
        return self.basis.evaluate(y) @ self.theta

    def transform_deriv(self, y) -> np.ndarray:
        """h'(y)."""
        return self.basis.derivative(y) @ self.theta

    def loglik_at(self, theta, beta) -> float:
        return self._likelihood.loglik(np.asarray(theta, dtype=float), np.asarray(beta, dtype=float))

    def gradient_at(self, theta, beta) -> np.ndarray:
        return self._likelihood.gradient(np.asarray(theta, dtype=float), np.asarray(beta, dtype=float))

    def scores(self) -> np.ndarray:
        """Per-observation scores at the fitted parameters (rows sum to ~0)."""
        return self._likelihood.scores(self.theta, self.beta)

    def hessian(self) -> np.ndarray:
        """Hessian of the log-likelihood in (theta, beta) at the fit."""
        return self._likelihood.hessian(self.theta, self.beta)

    def information(self) -> np.ndarray:
        return -self.hessian()


def _starting_values(basis: BernsteinBasis, y: np.ndarray, link: Link, k: int) -> List[Tuple[str, np.ndarray]]:
    sd = float(np.std(y, ddof=1))
    identity = link.scale * (basis.grid() - float(np.mean(y))) / sd
    candidates = [
        ("identity", identity),
        ("flat", np.linspace(-1.0, 1.0, basis.size)),
        ("steep", np.linspace(-4.0, 4.0, basis.size)),
    ]
    starts = []
    for name, theta in candidates:
        starts.append((name, np.concatenate([[theta[0]], np.log(np.diff(theta)), np.zeros(k)])))
    return starts


def _optimize(objective: _Objective, x0: np.ndarray, start: str, max_iter: int, gtol: float) -> _Run:
    trace = [-objective.value(x0)]

    def record(xk):
        trace.append(-objective.value(xk))

    res = optimize.minimize(
        objective.value,
        x0,
        jac=objective.grad,
        method="BFGS",
        callback=record,
        options={"maxiter": max_iter, "gtol": gtol},
    )
    x, iterations, message = res.x, int(res.nit), str(res.message)
    grad_norm = float(np.max(np.abs(objective.grad(x))))
    if grad_norm >= gtol:
        polish = optimize.minimize(
            objective.value,
            x,
            jac=objective.grad,
            hess=objective.hess,
            method="trust-exact",
            callback=record,
            options={"maxiter": 200, "gtol": gtol / 10.0},
        )
        if polish.fun <= res.fun:
            x, message = polish.x, str(polish.message)
        iterations += int(polish.nit)
        grad_norm = float(np.max(np.abs(objective.grad(x))))
    return _Run(x, -objective.value(x), grad_norm, iterations, trace, message, start)


def fit_mlt(
    sample: GroupedSample,
    order: int = 5,
    link: Union[Link, str] = Link.NORMAL,
    support: Optional[Tuple[float, float]] = None,
    *,
    strict: bool = False,
    max_iter: int = 1000,
    gtol: float = 1e-6,
    starts: Optional[Tuple[str, ...]] = None,
) -> TransformationModel:
    """
    Maximum likelihood fit of h and the group shifts.

    Three deterministic starts (identity-like, flat, steep h) are optimized
    with BFGS and polished with trust-region Newton steps; the best
    likelihood wins.

    Args:
        sample: control plus k treatment groups
        order: Bernstein order M
        link: "normal" or "logistic"
        support: basis support, defaults to the 1%/99% sample quantiles
        strict: raise ConvergenceError instead of flagging non-convergence
        starts: subset of ("identity", "flat", "steep"), all three by default

    Raises:
        InvalidDesignError: fewer than M + 1 + k + 2 observations
    """
    link = Link.parse(link)
    k = sample.k
    n_obs = sample.n_total
    if n_obs < order + 1 + k + 2:
        raise InvalidDesignError(
            f"{n_obs} observations cannot support a model with {order + 1 + k} parameters",
            {"n_obs": n_obs, "order": order, "k": k},
        )
    y = sample.values
    g = sample.group_index
    basis = BernsteinBasis(order, support if support is not None else support_from_sample(y))
    likelihood = _Likelihood(basis.evaluate(y), basis.derivative(y), g, k, link)
    objective = _Objective(likelihood)

    best: Optional[_Run] = None
    for name, x0 in _starting_values(basis, y, link, k):
        if starts is not None and name not in starts:
            continue
        try:
            run = _optimize(objective, x0, name, max_iter, gtol)
        except (np.linalg.LinAlgError, ValueError) as exc:
            logger.debug(f"[MLT] start '{name}' failed: {exc}")
            continue
        logger.debug(f"[MLT] start '{name}': loglik={run.loglik:.6f} grad={run.gradient_norm:.2e}")
        if best is None or run.loglik > best.loglik:
            best = run
    if best is None or not np.isfinite(best.loglik):
        raise ConvergenceError("All optimizer starts failed", {"order": order, "link": link.value})

    theta, beta = objective.unpack(best.params)
    converged = best.gradient_norm < gtol
    flags: Dict[str, Any] = {"start": best.start, "message": best.message}

    information = -likelihood.hessian(theta, beta)
    try:
        covariance = np.linalg.inv(information)
        covariance = (covariance + covariance.T) / 2.0
    except np.linalg.LinAlgError:
        covariance = np.full_like(information, np.nan)
        flags["singular_information"] = True
        logger.warning("[MLT] Observed information is singular")

    outside = [
        grp.label
        for grp in sample.groups
        if np.all(grp.responses < basis.lo) or np.all(grp.responses > basis.hi)
    ]
    if outside:
        flags["separation"] = outside
        logger.warning(f"[MLT] Groups entirely outside the support: {outside}")

    if not converged:
        details = {"gradient_norm": best.gradient_norm, "iterations": best.iterations, "message": best.message}
        if strict:
            raise ConvergenceError("Transformation model did not converge", details)
        logger.warning(f"[MLT] Fit not converged: gradient norm {best.gradient_norm:.2e}")

    return TransformationModel(
        basis=basis,
        link=link,
        theta=theta,
        beta=beta,
        loglik=best.loglik,
        covariance=covariance,
        converged=converged,
        iterations=best.iterations,
        gradient_norm=best.gradient_norm,
        trace=tuple(best.trace),
        labels=tuple(sample.labels),
        responses=np.array(y),
        group_index=np.array(g),
        flags=flags,
    )
