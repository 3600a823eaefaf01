"""Deploy-sample-update algorithms for performative learning.

RRM retrains to the batch optimum each round, RGD/RRGD take plain or
ridge-penalized gradient steps that ignore the distribution shift, and the
performative gradient methods add an estimate of the pushforward term
(score-function based for SFPerfGD, shift-Jacobian based for RPPerfGD, with an
optional online ridge estimate of the shift matrix).
"""

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import _kernels
from .estimators import gaussian_shift_score, sf_gradient
from .losses import signs_from_labels
from .models import sample_deployed

ALGORITHMS = ("RRM", "RGD", "RRGD", "SFPerfGD", "RPPerfGD", "RPPerfGD_learn")


@dataclass(frozen=True)
class OptimizerConfig:
    algorithm: str
    step_size: float
    num_iter: int
    n: int
    theta0: np.ndarray
    seed: int
    reg_lambda: float = 0.0
    pi_lambda: float = 0.0
    divergence_threshold: float = 1e6
    inner_tol: float = 1e-6
    inner_max_steps: int = 10_000

    def __post_init__(self):
        if self.algorithm not in ALGORITHMS:
            raise ValueError(f"unknown algorithm {self.algorithm!r}")
        if self.step_size <= 0:
            raise ValueError("step size must be positive")
        if self.num_iter < 1 or self.n < 1:
            raise ValueError("need num_iter >= 1 and n >= 1")
        object.__setattr__(self, "theta0", np.asarray(self.theta0, dtype=np.float64))


@dataclass
class RunRecord:
    """Per-iteration trajectory of one run (one row per deployment)."""

    thetas: np.ndarray
    risks: np.ndarray
    accuracies: np.ndarray
    pi_errors: np.ndarray
    diverged: bool

    @property
    def iterations(self):
        return self.thetas.shape[0]

    @property
    def final_theta(self):
        return self.thetas[-1]


@dataclass
class PiEstimatorState:
    """Sufficient statistics for the diagonal ridge estimate of the shift matrix.

    Accumulates, per coordinate i, sum_j sum_l theta_ji x_i, sum_j n_j theta_ji
    and sum_j n_j theta_ji^2 over the deployment history; the base-class mean
    is taken from the first deployment's class-0 rows, de-shifted by the
    previous estimate.
    """

    dim: int
    num_x: np.ndarray = field(default=None)
    lin: np.ndarray = field(default=None)
    quad: np.ndarray = field(default=None)
    pi_diag: np.ndarray = field(default=None)
    first_mean: Optional[np.ndarray] = None
    first_theta: Optional[np.ndarray] = None
    deployments: int = 0

    def __post_init__(self):
        z = np.zeros(self.dim)
        self.num_x = z.copy() if self.num_x is None else self.num_x
        self.lin = z.copy() if self.lin is None else self.lin
        self.quad = z.copy() if self.quad is None else self.quad
        self.pi_diag = z.copy() if self.pi_diag is None else self.pi_diag

    @property
    def mu_hat(self):
        if self.first_mean is None:
            return np.zeros(self.dim)
        return self.first_mean - self.pi_diag * self.first_theta

    @property
    def pi_hat(self):
        return np.diag(self.pi_diag)


def update_pi_estimate(state: PiEstimatorState, theta_k, class0_rows, pi_lambda):
    """Closed-form per-coordinate ridge update of the diagonal shift estimate."""
    if pi_lambda < 0:
        raise ValueError("ridge parameter must be nonnegative")
    theta_k = np.asarray(theta_k, dtype=np.float64)
    rows = np.asarray(class0_rows, dtype=np.float64)
    n0 = rows.shape[0]
    if n0:
        if state.first_mean is None:
            state.first_mean = rows.mean(axis=0)
            state.first_theta = theta_k.copy()
        state.num_x += theta_k * rows.sum(axis=0)
        state.lin += n0 * theta_k
        state.quad += n0 * theta_k ** 2
        state.deployments += 1
    denom = state.quad + pi_lambda
    numer = state.num_x - state.mu_hat * state.lin
    with np.errstate(invalid="ignore", divide="ignore"):
        diag = np.where(denom > 0, numer / denom, 0.0)
    state.pi_diag = diag
    return state.pi_hat


def _classification_terms(batch, loss, theta):
    return loss.step_terms(batch.x, batch.y, theta)


def step_rgd(theta, batch, loss, config, ridge=0.0):
    """theta <- theta - eta (mean loss gradient + ridge * theta)."""
    if loss.kind == "pricing":
        grad = loss.grad_theta_mean(batch.x, batch.y, theta)
    else:
        grad, _ = _classification_terms(batch, loss, theta)
    return theta - config.step_size * (grad + ridge * theta)


def step_rpperfgd(theta, batch, loss, config, shift_matrix):
    """Gradient step including the pushforward term through the shift matrix."""
    if loss.kind == "pricing":
        grad1 = loss.grad_theta_mean(batch.x, batch.y, theta)
        grad2 = shift_matrix.T @ (-theta)
    else:
        grad1, c0 = _classification_terms(batch, loss, theta)
        grad2 = c0 * (shift_matrix.T @ theta)
    return theta - config.step_size * (grad1 + grad2)


def step_sfperfgd(theta, batch, loss, config, model):
    """Gradient step with the score-function estimate of the pushforward term."""
    grad1, _ = _classification_terms(batch, loss, theta)
    sf = sf_gradient(batch, gaussian_shift_score(model, theta), loss, theta)
    return theta - config.step_size * (grad1 + sf.value)


def step_rrm(theta, batch, loss, config):
    """Retrain to the batch optimum by inner gradient descent.

    Returns (new_theta, converged). The inner loop stops at gradient norm
    inner_tol, after inner_max_steps, or once the iterate norm passes the
    divergence threshold (the batch optimum is effectively at infinity).
    """
    if loss.kind == "pricing":
        # constant inner gradient -mean(z): the capped descent has closed form
        g = loss.grad_theta_mean(batch.x, batch.y, theta)
        gnorm = float(np.linalg.norm(g))
        if gnorm <= config.inner_tol:
            return theta.copy(), True
        # first step count at which |theta - k eta g| exceeds the cap
        eta = config.step_size
        a = eta ** 2 * gnorm ** 2
        b = -2.0 * eta * float(theta @ g)
        c = float(theta @ theta) - config.divergence_threshold ** 2
        disc = b * b - 4 * a * c
        k_cap = config.inner_max_steps
        if disc >= 0:
            root = (-b + math.sqrt(disc)) / (2 * a)
            if root > 0:
                k_cap = int(math.floor(root)) + 1
        k = min(config.inner_max_steps, k_cap)
        return theta - k * eta * g, False
    x = np.ascontiguousarray(batch.x, dtype=np.float64)
    s = np.ascontiguousarray(signs_from_labels(batch.y), dtype=np.float64)
    new_theta, converged, _ = _kernels.inner_descent(
        x,
        s,
        np.ascontiguousarray(theta, dtype=np.float64),
        config.step_size,
        config.inner_tol,
        config.inner_max_steps,
        config.divergence_threshold,
        loss.surrogate.code,
    )
    return np.asarray(new_theta), bool(converged)


def _accuracy(batch, theta):
    preds = batch.x @ theta > 0
    return float(np.mean(preds == (batch.y == 1)))


def _iter_seed(seed, k, tag):
    return int(np.random.SeedSequence((int(seed), int(k), tag)).generate_state(1, np.uint64)[0])


def run(model, loss, config: OptimizerConfig) -> RunRecord:
    """Deploy-sample-update loop; deterministic for a fixed config seed.

    Each iteration records the deployed theta, its training risk, accuracy on
    a fresh evaluation batch drawn at the same deployment, and the shift
    estimation error when learning. A run halts once theta is non-finite or
    its norm passes the divergence threshold; failed inner retraining also
    flags divergence.
    """
    theta = config.theta0.copy()
    classification = loss.kind != "pricing"
    learn = config.algorithm == "RPPerfGD_learn"
    if learn and not classification:
        raise ValueError("shift-matrix learning is defined for classification tasks")
    pi_state = PiEstimatorState(dim=model.dim) if learn else None
    true_shift = model.shift.matrix

    thetas, risks, accs, pi_errs = [], [], [], []
    diverged = False
    for k in range(config.num_iter):
        batch = sample_deployed(model, theta, config.n, _iter_seed(config.seed, k, 0))
        risk = float(loss.values(batch.x, batch.y, theta).mean())
        if classification:
            eval_batch = sample_deployed(model, theta, config.n, _iter_seed(config.seed, k, 1))
            acc = _accuracy(eval_batch, theta)
        else:
            acc = float("nan")
        if learn:
            pi_errs.append(float(np.linalg.norm(pi_state.pi_hat - true_shift)))
        else:
            pi_errs.append(float("nan"))
        thetas.append(theta.copy())
        risks.append(risk)
        accs.append(acc)

        alg = config.algorithm
        if alg == "RRM":
            theta_new, converged = step_rrm(theta, batch, loss, config)
            if not converged:
                diverged = True
        elif alg == "RGD":
            theta_new = step_rgd(theta, batch, loss, config)
        elif alg == "RRGD":
            theta_new = step_rgd(theta, batch, loss, config, ridge=config.reg_lambda)
        elif alg == "SFPerfGD":
            theta_new = step_sfperfgd(theta, batch, loss, config, model)
        elif alg == "RPPerfGD":
            theta_new = step_rpperfgd(theta, batch, loss, config, true_shift)
        else:  # RPPerfGD_learn
            theta_new = step_rpperfgd(theta, batch, loss, config, pi_state.pi_hat)
            update_pi_estimate(pi_state, theta, batch.x[batch.y == 0], config.pi_lambda)

        if not np.all(np.isfinite(theta_new)) or np.linalg.norm(theta_new) > config.divergence_threshold:
            diverged = True
            break
        theta = theta_new

    return RunRecord(
        thetas=np.asarray(thetas),
        risks=np.asarray(risks),
        accuracies=np.asarray(accs),
        pi_errors=np.asarray(pi_errs),
        diverged=diverged,
    )
