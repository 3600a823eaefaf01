"""Push-forward models of performative distribution shift.

A deployment parameter theta steers a fixed base distribution through a shift
map. For classification only the unfavored class (label 0) moves: its
covariates are drawn as U0 + Pi theta while class-1 draws never depend on
theta. Samplers derive one substream per role (labels, class 1, class 0) from
the caller's seed, so redrawing at a different theta reuses identical base
noise; this is what makes common-random-number comparisons across theta exact.
"""

from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

SYMMETRY_TOL = 1e-12
PSD_TOL = 1e-10

_LABEL_STREAM = 0
_CLASS1_STREAM = 1
_CLASS0_STREAM = 2


def _rng(seed, stream):
    return np.random.default_rng(np.random.SeedSequence((int(seed), stream)))


@dataclass(frozen=True)
class ShiftOperator:
    """Linear shift map theta -> matrix @ theta applied additively to samples."""

    matrix: np.ndarray
    is_symmetric: bool = field(init=False)
    is_psd: bool = field(init=False)
    is_pd: bool = field(init=False)

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=np.float64)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValueError("shift matrix must be square")
        if not np.all(np.isfinite(m)):
            raise ValueError("shift matrix must be finite")
        object.__setattr__(self, "matrix", m)
        sym = float(np.max(np.abs(m - m.T), initial=0.0)) <= SYMMETRY_TOL
        eigmin = float(np.min(np.linalg.eigvalsh((m + m.T) / 2.0)))
        object.__setattr__(self, "is_symmetric", sym)
        object.__setattr__(self, "is_psd", eigmin >= -PSD_TOL)
        object.__setattr__(self, "is_pd", eigmin > PSD_TOL)

    @property
    def dim(self):
        return self.matrix.shape[0]


def shift_jacobian(shift: ShiftOperator, theta=None):
    """Jacobian in theta of the linear shift map; constant, equal to the matrix."""
    return shift.matrix


def zero_shift(dim):
    return ShiftOperator(np.zeros((dim, dim)))


@dataclass(frozen=True)
class GaussianClassModel:
    """Base class-conditional Gaussians; isotropic unless full covariances given."""

    mu0: np.ndarray
    mu1: np.ndarray
    rho: float
    sigma: Optional[float] = None
    cov0: Optional[np.ndarray] = None
    cov1: Optional[np.ndarray] = None

    def __post_init__(self):
        object.__setattr__(self, "mu0", np.asarray(self.mu0, dtype=np.float64))
        object.__setattr__(self, "mu1", np.asarray(self.mu1, dtype=np.float64))
        if self.mu0.shape != self.mu1.shape or self.mu0.ndim != 1:
            raise ValueError("class means must be 1-d vectors of equal dimension")
        if not 0.0 < self.rho < 1.0:
            raise ValueError("class-1 probability must lie in (0, 1)")
        if self.sigma is None and self.cov0 is None:
            raise ValueError("either sigma or covariance matrices are required")
        if self.sigma is not None and self.sigma <= 0:
            raise ValueError("sigma must be positive")
        for name in ("cov0", "cov1"):
            c = getattr(self, name)
            if c is not None:
                c = np.asarray(c, dtype=np.float64)
                if np.min(np.linalg.eigvalsh((c + c.T) / 2.0)) < -PSD_TOL:
                    raise ValueError(f"{name} must be positive semidefinite")
                object.__setattr__(self, name, c)

    @property
    def dim(self):
        return self.mu0.shape[0]

    def _draw(self, rng, n, mu, cov):
        if cov is None:
            return mu + self.sigma * rng.standard_normal((n, self.dim))
        chol = np.linalg.cholesky(cov + PSD_TOL * np.eye(self.dim))
        return mu + rng.standard_normal((n, self.dim)) @ chol.T

    def draw_class0(self, rng, n):
        return self._draw(rng, n, self.mu0, self.cov0)

    def draw_class1(self, rng, n):
        return self._draw(rng, n, self.mu1, self.cov1 if self.cov1 is not None else self.cov0)

    def covariance0(self):
        return self.cov0 if self.cov0 is not None else self.sigma ** 2 * np.eye(self.dim)

    def covariance1(self):
        if self.cov1 is not None:
            return self.cov1
        return self.covariance0()


@dataclass(frozen=True)
class EmpiricalClassModel:
    """Class-conditional pools resampled with replacement (real datasets)."""

    x0: np.ndarray
    x1: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "x0", np.asarray(self.x0, dtype=np.float64))
        object.__setattr__(self, "x1", np.asarray(self.x1, dtype=np.float64))
        if self.x0.ndim != 2 or self.x1.ndim != 2 or self.x0.shape[1] != self.x1.shape[1]:
            raise ValueError("class pools must be 2-d with matching feature count")

    @property
    def rho(self):
        return self.x1.shape[0] / (self.x0.shape[0] + self.x1.shape[0])

    @property
    def dim(self):
        return self.x0.shape[1]

    def draw_class0(self, rng, n):
        return self.x0[rng.integers(0, self.x0.shape[0], size=n)]

    def draw_class1(self, rng, n):
        return self.x1[rng.integers(0, self.x1.shape[0], size=n)]


@dataclass(frozen=True)
class PerformativeModel:
    """Classification model whose class-0 law is steered by the deployed theta.

    shift1, when set, is applied additively to class-1 draws as well (pass the
    signed matrix; the both-classes convexity variant uses -Pi1 with Pi1 psd).
    """

    classes: object
    shift: ShiftOperator
    shift1: Optional[ShiftOperator] = None
    offset0: Optional[np.ndarray] = None

    def __post_init__(self):
        if self.shift.dim != self.classes.dim:
            raise ValueError("shift dimension must match the class model")
        if self.offset0 is not None:
            object.__setattr__(self, "offset0", np.asarray(self.offset0, dtype=np.float64))

    @property
    def dim(self):
        return self.classes.dim

    @property
    def rho(self):
        return self.classes.rho


@dataclass(frozen=True)
class PricingModel:
    """Demand U ~ N(mu, sigma^2 I) reduced by elasticity: Z = U - diag(e) theta."""

    mu: np.ndarray
    elasticity: np.ndarray
    sigma: float = 0.5

    def __post_init__(self):
        object.__setattr__(self, "mu", np.asarray(self.mu, dtype=np.float64))
        object.__setattr__(self, "elasticity", np.asarray(self.elasticity, dtype=np.float64))
        if self.sigma <= 0:
            raise ValueError("sigma must be positive")

    @property
    def dim(self):
        return self.mu.shape[0]

    @property
    def shift(self):
        return ShiftOperator(-np.diag(self.elasticity))


@dataclass(frozen=True)
class SampleBatch:
    """Labeled covariate rows drawn under one deployment (y is None for pricing)."""

    x: np.ndarray
    y: Optional[np.ndarray]

    @property
    def n(self):
        return self.x.shape[0]


def _check_theta(model, theta):
    theta = np.asarray(theta, dtype=np.float64)
    if theta.shape != (model.dim,):
        raise ValueError(f"theta has shape {theta.shape}, expected ({model.dim},)")
    if not np.all(np.isfinite(theta)):
        raise ValueError("theta must be finite")
    return theta


def sample_base(model, n, seed):
    """Draw labels and pre-shift covariates: (y, u) with u the base draws."""
    if n < 1:
        raise ValueError("need n >= 1")
    if isinstance(model, PricingModel):
        rng = _rng(seed, _CLASS0_STREAM)
        return None, model.mu + model.sigma * rng.standard_normal((n, model.dim))
    y = (_rng(seed, _LABEL_STREAM).random(n) < model.rho).astype(np.int8)
    u = np.empty((n, model.dim))
    n1 = int(y.sum())
    if n1:
        u[y == 1] = model.classes.draw_class1(_rng(seed, _CLASS1_STREAM), n1)
    if n - n1:
        u[y == 0] = model.classes.draw_class0(_rng(seed, _CLASS0_STREAM), n - n1)
    return y, u


def apply_shift(model, y, u, theta):
    """Push base draws forward under the deployment theta."""
    theta = _check_theta(model, theta)
    x = np.array(u)
    if isinstance(model, PricingModel):
        return x - model.elasticity * theta
    x[y == 0] += model.shift.matrix @ theta
    if model.offset0 is not None:
        x[y == 0] += model.offset0
    if model.shift1 is not None:
        x[y == 1] += model.shift1.matrix @ theta
    return x


def sample_deployed(model, theta, n, seed):
    """Sample n rows from the distribution induced by deploying theta."""
    y, u = sample_base(model, n, seed)
    return SampleBatch(x=apply_shift(model, y, u, theta), y=y)


def relocalize(model: PerformativeModel, theta_bar) -> PerformativeModel:
    """Re-express the model around the distribution deployed at theta_bar.

    The returned model's class-0 base law equals the original distribution at
    theta_bar and its shift acts as Pi (theta - theta_bar); sampling is
    distribution-identical at every theta.
    """
    if not isinstance(model, PerformativeModel):
        raise TypeError("relocalize expects a PerformativeModel")
    if not isinstance(model.classes, GaussianClassModel):
        raise TypeError("relocalize supports Gaussian class models only")
    if model.shift1 is not None:
        raise TypeError("relocalize is defined for the class-0 shift only")
    theta_bar = _check_theta(model, theta_bar)
    delta = model.shift.matrix @ theta_bar
    old_offset = model.offset0 if model.offset0 is not None else 0.0
    classes = replace(model.classes, mu0=model.classes.mu0 + delta + old_offset)
    return replace(model, classes=classes, offset0=-delta)
