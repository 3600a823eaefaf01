"""Monte Carlo estimators of the performative part of the risk gradient.

Two routes to the same expectation: the pathwise estimator pushes covariate
gradients through the shift Jacobian, the score-function estimator weights
losses by the Gaussian log-density gradient. The Gaussian mean-estimation case
gets closed-form covariance oracles for both, including the optimal scalar
baseline for the score route.
"""

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .models import GaussianClassModel, PerformativeModel, SampleBatch, ShiftOperator


@dataclass(frozen=True)
class GradientEstimate:
    value: np.ndarray
    n: int
    estimator_kind: str
    baseline: Optional[float] = None

    def __post_init__(self):
        v = np.asarray(self.value, dtype=np.float64)
        if not np.all(np.isfinite(v)):
            raise ValueError("gradient estimate must be finite")
        if self.n < 1:
            raise ValueError("sample count must be >= 1")
        object.__setattr__(self, "value", v)


def rp_gradient(batch: SampleBatch, shift: ShiftOperator, loss, theta) -> GradientEstimate:
    """Pathwise estimate: shift-Jacobian transpose times mean covariate gradient.

    For classification the push-forward touches class 0 only, so the average
    runs over class-0 rows scaled by their batch fraction; pricing averages
    all rows.
    """
    if batch.n < 1:
        raise ValueError("empty batch")
    theta = np.asarray(theta, dtype=np.float64)
    if shift.dim != theta.shape[0] or batch.x.shape[1] != theta.shape[0]:
        raise ValueError("dimension mismatch")
    if loss.kind == "pricing":
        mean_grad = -theta
    else:
        m0 = batch.x[batch.y == 0] @ theta
        coeff = -np.sum(loss.surrogate.deriv(-m0)) / batch.n
        mean_grad = coeff * theta
    return GradientEstimate(shift.matrix.T @ mean_grad, batch.n, "RP")


def gaussian_shift_score(model: PerformativeModel, theta):
    """Log-density gradient in theta for the isotropic Gaussian shift family.

    score(x, y=0) = Pi^T (x - mu0 - Pi theta) / sigma^2 and zero on class 1,
    whose law does not depend on theta.
    """
    classes = model.classes
    if not isinstance(classes, GaussianClassModel) or classes.sigma is None or classes.cov0 is not None:
        raise ValueError("score function requires isotropic Gaussian classes")
    if classes.sigma == 0:
        raise ValueError("sigma must be nonzero")
    pi = model.shift.matrix
    center = classes.mu0 + pi @ np.asarray(theta, dtype=np.float64)
    if model.offset0 is not None:
        center = center + model.offset0
    inv_var = 1.0 / classes.sigma ** 2

    def score(batch: SampleBatch):
        out = np.zeros_like(batch.x)
        mask = batch.y == 0
        out[mask] = (batch.x[mask] - center) @ pi * inv_var
        return out

    return score


def sf_gradient(batch: SampleBatch, score_fn, loss, theta, baseline: float = 0.0) -> GradientEstimate:
    """Score-function estimate (1/n) sum (loss_i - m) score_i; m defaults to 0.

    Any constant baseline keeps the estimate unbiased because the score has
    zero mean.
    """
    if batch.n < 1:
        raise ValueError("empty batch")
    values = loss.values(batch.x, batch.y, theta)
    scores = score_fn(batch)
    est = (values - baseline) @ scores / batch.n
    kind = "SF" if baseline == 0.0 else "SF_baseline"
    return GradientEstimate(est, batch.n, kind, baseline=baseline if baseline else None)


def empirical_covariance(replications):
    """Unbiased sample covariance of replicated gradient estimates."""
    if isinstance(replications, np.ndarray):
        values = replications
    else:
        values = np.stack([np.asarray(r.value if isinstance(r, GradientEstimate) else r) for r in replications])
    if values.ndim != 2:
        raise ValueError("replications must stack to a 2-d array")
    if values.shape[0] < 2:
        raise ValueError("need at least 2 replications")
    return np.cov(values, rowvar=False, ddof=1).reshape(values.shape[1], values.shape[1])


@dataclass(frozen=True)
class GaussianMeanCase:
    """Mean-estimation setup: loss |z - theta'|^2 / 2, Z = U + Pi theta,
    U ~ N(0, sigma^2 I)."""

    pi: np.ndarray
    sigma: float
    theta: np.ndarray
    theta_prime: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "pi", np.asarray(self.pi, dtype=np.float64))
        object.__setattr__(self, "theta", np.asarray(self.theta, dtype=np.float64))
        object.__setattr__(self, "theta_prime", np.asarray(self.theta_prime, dtype=np.float64))
        if self.sigma <= 0:
            raise ValueError("sigma must be positive")

    @property
    def dim(self):
        return self.pi.shape[0]

    @property
    def a(self):
        # recomputed on access, never stored
        return self.pi @ self.theta - self.theta_prime

    def expected_gradient(self):
        return self.pi.T @ self.a

    def draw_base(self, n, seed):
        rng = np.random.default_rng(seed)
        return self.sigma * rng.standard_normal((n, self.dim))

    def rp_estimate(self, u) -> GradientEstimate:
        return GradientEstimate(self.pi.T @ (u + self.a).mean(axis=0), u.shape[0], "RP")

    def sf_estimate(self, u, baseline: float = 0.0) -> GradientEstimate:
        """Score estimate with the baseline on the squared-distance scale.

        The estimate is Pi^T mean((|u+a|^2 - m) u) / (2 sigma^2); this is the
        scale on which optimal_baseline() minimizes the covariance.
        """
        w = np.sum((u + self.a) ** 2, axis=1) - baseline
        value = self.pi.T @ (w[:, None] * u).mean(axis=0) / (2.0 * self.sigma ** 2)
        kind = "SF" if baseline == 0.0 else "SF_baseline"
        return GradientEstimate(value, u.shape[0], kind, baseline=baseline if baseline else None)

    def rp_replications(self, reps, n, seed):
        u = self.draw_base(reps * n, seed).reshape(reps, n, self.dim)
        return (u + self.a).mean(axis=1) @ self.pi

    def sf_replications(self, reps, n, seed, baseline: float = 0.0):
        u = self.draw_base(reps * n, seed).reshape(reps, n, self.dim)
        w = np.sum((u + self.a) ** 2, axis=2) - baseline
        return (w[:, :, None] * u).mean(axis=1) @ self.pi / (2.0 * self.sigma ** 2)


def cov_rp_analytic(case: GaussianMeanCase, n: int):
    """Pathwise covariance sigma^2 Pi^T Pi / n, independent of theta and d."""
    return case.sigma ** 2 * case.pi.T @ case.pi / n


def cov_sf_analytic(case: GaussianMeanCase, n: int):
    """Score-function covariance; the leading term grows with d^2 and |a|."""
    d = case.dim
    a = case.a
    s2 = case.sigma ** 2
    na2 = float(a @ a)
    lead = ((d * d + 6 * d + 8) * s2 + 2 * (d + 4) * na2 + na2 ** 2 / s2) / 4.0
    inner = lead * np.eye(d) + np.outer(a, a)
    return case.pi.T @ inner @ case.pi / n


def optimal_baseline(case: GaussianMeanCase) -> float:
    """Variance-minimizing baseline m* = (d+2) sigma^2 + |a|^2."""
    return (case.dim + 2) * case.sigma ** 2 + float(case.a @ case.a)


def cov_sf_baseline_optimal(case: GaussianMeanCase, n: int):
    """Best achievable score-function covariance and the baseline reaching it."""
    d = case.dim
    a = case.a
    na2 = float(a @ a)
    inner = ((1.0 + d / 2.0) * case.sigma ** 2 + na2) * np.eye(d) + np.outer(a, a)
    return case.pi.T @ inner @ case.pi / n, optimal_baseline(case)
