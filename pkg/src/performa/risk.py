"""Performative risk evaluation and numerical certification utilities.

Monte Carlo and closed-form evaluations of the performative risk PR(theta) and
its decoupled variant DPR(theta, theta'), midpoint-convexity probing, the
adversarial rewriting of the risk for symmetric positive definite shifts, and
the norm bound satisfied by the performative optimum.
"""

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .losses import ClassificationLoss, Surrogate
from .models import (
    GaussianClassModel,
    PerformativeModel,
    PricingModel,
    ShiftOperator,
    apply_shift,
    sample_base,
    sample_deployed,
)


@dataclass(frozen=True)
class RiskEvaluation:
    value: float
    method: str
    n: Optional[int] = None
    std_err: float = 0.0

    def __post_init__(self):
        if self.std_err < 0:
            raise ValueError("std_err must be nonnegative")


def dpr_monte_carlo(model, loss, theta, theta_prime, n, seed) -> RiskEvaluation:
    """Mean loss of theta_prime on samples induced by deploying theta."""
    batch = sample_deployed(model, theta, n, seed)
    vals = loss.values(batch.x, batch.y, np.asarray(theta_prime, dtype=np.float64))
    std_err = float(vals.std(ddof=1) / np.sqrt(n)) if n > 1 else 0.0
    return RiskEvaluation(float(vals.mean()), "monte_carlo", n, std_err)


def pr_monte_carlo(model, loss, theta, n, seed) -> RiskEvaluation:
    """PR(theta) = DPR(theta, theta), sharing the sample stream bit for bit."""
    return dpr_monte_carlo(model, loss, theta, theta, n, seed)


def pr_closed_quadratic(model: PerformativeModel, theta) -> float:
    """Exact performative risk for Gaussian classes under the quadratic surrogate.

    rho [theta' Sigma1 theta + (1 - mu1.theta)^2]
      + (1-rho) [theta' Sigma0 theta + ((mu0 + Pi theta).theta + 1)^2]
    """
    classes = model.classes
    if not isinstance(classes, GaussianClassModel):
        raise TypeError("closed form requires Gaussian classes")
    theta = np.asarray(theta, dtype=np.float64)
    rho = classes.rho
    mu1 = classes.mu1
    if model.shift1 is not None:
        mu1 = mu1 + model.shift1.matrix @ theta
    mu0 = classes.mu0 + model.shift.matrix @ theta
    if model.offset0 is not None:
        mu0 = mu0 + model.offset0
    var1 = float(theta @ classes.covariance1() @ theta)
    var0 = float(theta @ classes.covariance0() @ theta)
    term1 = var1 + (1.0 - float(mu1 @ theta)) ** 2
    term0 = var0 + (float(mu0 @ theta) + 1.0) ** 2
    return rho * term1 + (1.0 - rho) * term0


def pr_closed_pricing(model: PricingModel, theta) -> float:
    """- sum_i (mu_i - e_i theta_i) theta_i, strongly convex for positive e."""
    theta = np.asarray(theta, dtype=np.float64)
    return -float(np.sum((model.mu - model.elasticity * theta) * theta))


def dpr_closed_pricing(model: PricingModel, theta, theta_prime) -> float:
    theta = np.asarray(theta, dtype=np.float64)
    return -float((model.mu - model.elasticity * theta) @ np.asarray(theta_prime, dtype=np.float64))


def pricing_optimum(model: PricingModel):
    return model.mu / (2.0 * model.elasticity)


# ---------------------------------------------------------------------------
# Frozen-draw (common random number) reference risk


@dataclass(frozen=True)
class FrozenBatch:
    """Base draws held fixed so the risk becomes a deterministic function of theta."""

    y: Optional[np.ndarray]
    u: np.ndarray


def frozen_batch(model, n, seed) -> FrozenBatch:
    y, u = sample_base(model, n, seed)
    return FrozenBatch(y=y, u=u)


def pr_reference(model, loss, theta, frozen: FrozenBatch) -> float:
    """PR(theta) on frozen base draws; exactly convex whenever PR is."""
    x = apply_shift(model, frozen.y, frozen.u, theta)
    return float(loss.values(x, frozen.y, np.asarray(theta, dtype=np.float64)).mean())


def pr_reference_grad(model, loss, theta, frozen: FrozenBatch):
    """Exact gradient of pr_reference: classical term plus pushforward term."""
    theta = np.asarray(theta, dtype=np.float64)
    x = apply_shift(model, frozen.y, frozen.u, theta)
    n = x.shape[0]
    if isinstance(model, PricingModel):
        return -frozen.u.mean(axis=0) + 2.0 * model.elasticity * theta
    phi = loss.surrogate
    grad = np.zeros_like(theta)
    m = x @ theta
    mask1 = frozen.y == 1
    if np.any(mask1):
        w1 = phi.deriv(m[mask1])
        x1 = x[mask1]
        if model.shift1 is not None:
            x1 = x1 + model.shift1.matrix.T @ theta
        grad += x1.T @ w1 / n
    mask0 = ~mask1
    if np.any(mask0):
        w0 = -phi.deriv(-m[mask0])
        x0 = x[mask0] + model.shift.matrix.T @ theta
        grad += x0.T @ w0 / n
    return grad


def minimize_pr_reference(model, loss, frozen, theta0, step=1.0, max_iter=5000, tol=1e-9):
    """Backtracking gradient descent on the frozen-draw risk; returns the minimizer."""
    theta = np.asarray(theta0, dtype=np.float64).copy()
    f = pr_reference(model, loss, theta, frozen)
    for _ in range(max_iter):
        g = pr_reference_grad(model, loss, theta, frozen)
        gnorm2 = float(g @ g)
        if np.sqrt(gnorm2) <= tol:
            break
        eta = step
        while eta > 1e-12:
            cand = theta - eta * g
            f_cand = pr_reference(model, loss, cand, frozen)
            if f_cand <= f - 0.5 * eta * gnorm2:
                break
            eta *= 0.5
        theta, f = cand, f_cand
    return theta


# ---------------------------------------------------------------------------
# Convexity probing


@dataclass(frozen=True)
class ConvexityReport:
    probe_pairs: int
    max_violation: float
    violating_pair: Optional[tuple] = None

    def is_convex(self, tolerance):
        return self.max_violation <= tolerance


def random_probe_pairs(dim, n_pairs, radius=5.0, seed=0):
    """(theta1, theta2, t) triples with endpoints in the radius ball."""
    rng = np.random.default_rng(seed)
    pts = rng.uniform(-radius, radius, size=(n_pairs, 2, dim))
    ts = rng.uniform(0.0, 1.0, size=n_pairs)
    return [(pts[i, 0], pts[i, 1], float(ts[i])) for i in range(n_pairs)]


def negative_direction_probes(pi_matrix, t_range=2.0, n_centers=40, half_widths=(0.1, 0.3)):
    """Short-chord probes along the most negative eigendirection of the shift.

    Long random chords hide local nonconvexity under the quartic growth of the
    quadratic risk; these midpoint probes are dense enough to certify a
    violation whenever the shift has a sufficiently negative eigenvalue.
    """
    sym = (pi_matrix + pi_matrix.T) / 2.0
    vals, vecs = np.linalg.eigh(sym)
    directions = [vecs[:, i] for i in range(len(vals)) if vals[i] < 0]
    if not directions:
        directions = [vecs[:, 0]]
    probes = []
    for v in directions:
        for center in np.linspace(-t_range, t_range, n_centers):
            for h in half_widths:
                probes.append(((center - h) * v, (center + h) * v, 0.5))
    return probes


def convexity_profile(risk_fn, probes, tolerance=1e-9) -> ConvexityReport:
    """Probe segment convexity of a deterministic risk function.

    Checks f(t a + (1-t) b) <= t f(a) + (1-t) f(b) + tolerance on every probe
    and reports the largest gap found.
    """
    worst = -np.inf
    worst_probe = None
    count = 0
    for a, b, t in probes:
        count += 1
        fa = risk_fn(a)
        fb = risk_fn(b)
        fm = risk_fn(t * a + (1.0 - t) * b)
        gap = fm - (t * fa + (1.0 - t) * fb)
        if gap > worst:
            worst = gap
            worst_probe = (a, b, t)
    report = ConvexityReport(count, float(worst))
    if worst > tolerance:
        report = ConvexityReport(count, float(worst), worst_probe)
    return report


def profile_lambda_sweep(mu0, mu1, sigma, rho, lambdas, direction, ts):
    """Quadratic-risk profile along a line, one curve per shift magnitude.

    Yields (lam, t, risk) rows with theta = t * direction and shift lam * I,
    the data behind the profile-risk figure.
    """
    mu0 = np.asarray(mu0, dtype=np.float64)
    direction = np.asarray(direction, dtype=np.float64)
    dim = mu0.shape[0]
    rows = []
    for lam in lambdas:
        model = PerformativeModel(
            classes=GaussianClassModel(mu0=mu0, mu1=mu1, rho=rho, sigma=sigma),
            shift=ShiftOperator(lam * np.eye(dim)),
        )
        for t in ts:
            rows.append((float(lam), float(t), pr_closed_quadratic(model, t * direction)))
    return rows


# ---------------------------------------------------------------------------
# Adversarial reformulation (symmetric positive definite shifts)


def _require_adversarial(surrogate: Surrogate, shift: ShiftOperator):
    if not surrogate.non_increasing:
        raise ValueError(f"surrogate {surrogate.kind!r} is not non-increasing")
    if not (shift.is_symmetric and shift.is_pd):
        raise ValueError("shift must be symmetric positive definite")


def adversarial_inner_max(surrogate: Surrogate, u0, theta, shift: ShiftOperator):
    """Worst-case class-0 loss over the shift-induced displacement budget.

    max over displacements with inverse-shift norm at most the shift norm of
    theta; attained at Pi theta, giving phi(-u0.theta - theta' Pi theta).
    """
    _require_adversarial(surrogate, shift)
    theta = np.asarray(theta, dtype=np.float64)
    u0 = np.asarray(u0, dtype=np.float64)
    delta = shift.matrix @ theta
    value = float(surrogate.value(-float(u0 @ theta) - float(theta @ delta)))
    return value, delta


def pr_adversarial_form(model: PerformativeModel, loss: ClassificationLoss, theta, n, seed) -> RiskEvaluation:
    """PR(theta) in min-max form, sharing base draws with pr_monte_carlo.

    Under common random numbers the two evaluations agree to floating-point
    association error: per class-0 draw both reduce to
    phi(-u0.theta - theta' Pi theta).
    """
    _require_adversarial(loss.surrogate, model.shift)
    theta = np.asarray(theta, dtype=np.float64)
    y, u = sample_base(model, n, seed)
    phi = loss.surrogate
    vals = np.empty(n)
    mask1 = y == 1
    vals[mask1] = phi.value(u[mask1] @ theta)
    u0 = u[~mask1]
    if model.offset0 is not None:
        u0 = u0 + model.offset0
    budget_term = float(theta @ model.shift.matrix @ theta)
    vals[~mask1] = phi.value(-(u0 @ theta) - budget_term)
    std_err = float(vals.std(ddof=1) / np.sqrt(n)) if n > 1 else 0.0
    return RiskEvaluation(float(vals.mean()), "monte_carlo", n, std_err)


# ---------------------------------------------------------------------------
# Regularization bound (Pi-weighted norm of the performative optimum)


def pi_norm(v, pi_matrix):
    v = np.asarray(v, dtype=np.float64)
    return float(np.sqrt(v @ pi_matrix @ v))


def pi_inv_sqrt(pi_matrix, floor=1e-12):
    vals, vecs = np.linalg.eigh(pi_matrix)
    vals = np.maximum(vals, floor)
    return vecs @ np.diag(1.0 / np.sqrt(vals)) @ vecs.T


def regularization_bound(model: PerformativeModel, shift: Optional[ShiftOperator] = None) -> float:
    """Upper bound on |theta*| in the shift-weighted norm.

    |theta*|_Pi <= |Pi^{-1/2} (rho mu1 - (1-rho) mu0)| / (1-rho) for symmetric
    positive definite shifts and non-increasing surrogates.
    """
    shift = shift if shift is not None else model.shift
    if not (shift.is_symmetric and shift.is_pd):
        raise ValueError("shift must be symmetric positive definite")
    classes = model.classes
    rho = classes.rho
    if rho >= 1.0:
        raise ValueError("class-1 probability must be < 1")
    mu_rho = rho * classes.mu1 - (1.0 - rho) * classes.mu0
    return float(np.linalg.norm(pi_inv_sqrt(shift.matrix) @ mu_rho) / (1.0 - rho))


def check_bound(theta_star, model: PerformativeModel, shift: Optional[ShiftOperator] = None, tol=1e-8) -> bool:
    shift = shift if shift is not None else model.shift
    return pi_norm(theta_star, shift.matrix) <= regularization_bound(model, shift) + tol
