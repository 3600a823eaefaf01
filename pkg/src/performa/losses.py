"""Surrogate losses and the linear classification loss built on them.

Per-sample loss for a linear classifier f(x) = x.theta:
class 1 -> phi(x.theta), class 0 -> phi(-x.theta). The pricing objective
-z.theta is a separate loss, not a surrogate composition.
"""

from dataclasses import dataclass

import numpy as np

from . import _kernels
from ._kernels import SURROGATE_CODES

NON_INCREASING_KINDS = ("logistic", "hinge", "exponential")


@dataclass(frozen=True)
class Surrogate:
    """Convex margin surrogate with value and first derivative."""

    kind: str

    def __post_init__(self):
        if self.kind not in SURROGATE_CODES:
            raise ValueError(f"unknown surrogate kind {self.kind!r}")

    @property
    def code(self):
        return SURROGATE_CODES[self.kind]

    @property
    def non_increasing(self):
        return self.kind in NON_INCREASING_KINDS

    def value(self, v):
        return _kernels.surrogate_value_numpy(self.code, v)

    def deriv(self, v):
        return _kernels.surrogate_deriv_numpy(self.code, v)


def signs_from_labels(y):
    """Map {0,1} labels to margin signs {-1,+1}."""
    y = np.asarray(y)
    return np.where(y == 1, 1.0, -1.0)


@dataclass(frozen=True)
class ClassificationLoss:
    """phi(s * x.theta) with s = +1 for class 1 and -1 for class 0."""

    surrogate: Surrogate

    kind = "classification"

    def loss_value(self, x, y, theta):
        s = 1.0 if y == 1 else -1.0
        return float(self.surrogate.value(s * float(np.dot(x, theta))))

    def grad_z(self, x, y, theta):
        """Gradient in the covariate x."""
        s = 1.0 if y == 1 else -1.0
        return s * float(self.surrogate.deriv(s * float(np.dot(x, theta)))) * np.asarray(theta, dtype=float)

    def grad_theta(self, x, y, theta):
        """Gradient in the model parameter theta."""
        s = 1.0 if y == 1 else -1.0
        return s * float(self.surrogate.deriv(s * float(np.dot(x, theta)))) * np.asarray(x, dtype=float)

    # batch helpers used by risks and optimizers

    def values(self, x, y, theta):
        s = signs_from_labels(y)
        return self.surrogate.value(s * (x @ theta))

    def grad_theta_mean(self, x, y, theta):
        s = signs_from_labels(y)
        w = s * self.surrogate.deriv(s * (x @ theta))
        return x.T @ w / x.shape[0]

    def step_terms(self, x, y, theta):
        """(grad_theta mean, class-0 pushforward coefficient), see _kernels."""
        s = signs_from_labels(y)
        g, c0 = _kernels.classification_step_terms(
            np.ascontiguousarray(x, dtype=np.float64),
            np.ascontiguousarray(s, dtype=np.float64),
            np.ascontiguousarray(theta, dtype=np.float64),
            self.surrogate.code,
        )
        return g, c0


def pricing_loss(z, theta):
    """Negative revenue -z.theta."""
    return -float(np.dot(z, theta))


def pricing_grad_z(z, theta):
    return -np.asarray(theta, dtype=float)


def pricing_grad_theta(z, theta):
    return -np.asarray(z, dtype=float)


@dataclass(frozen=True)
class PricingLoss:
    """Batch interface for the -z.theta objective (no labels)."""

    kind = "pricing"

    def values(self, x, y, theta):
        return -(x @ theta)

    def grad_theta_mean(self, x, y, theta):
        return -x.mean(axis=0)

    def grad_z_mean(self, x, theta):
        # gradient in z is the constant -theta
        return -np.asarray(theta, dtype=float)
