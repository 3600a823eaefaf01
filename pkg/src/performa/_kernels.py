"""Hot numeric kernels: numba-compiled with a pure-numpy fallback.

The numba path is used when numba imports and the environment variable
``PERFORMA_NUMBA`` is not set to ``0``. Both implementations are exported
(``*_numpy`` / ``*_numba``) so tests and ``benchmarks/bench_kernels.py`` can
compare them; the unsuffixed names bind to the selected path.

Only loop-bound work lives here (per-sample fused gradient reductions and the
repeated-minimization inner descent). Matrix-heavy paths elsewhere stay on
numpy/BLAS, which these kernels do not beat.
"""

import os

import numpy as np

# Surrogate codes shared with losses.py.
QUADRATIC = 0
LOGISTIC = 1
HINGE = 2
EXPONENTIAL = 3

SURROGATE_CODES = {
    "quadratic": QUADRATIC,
    "logistic": LOGISTIC,
    "hinge": HINGE,
    "exponential": EXPONENTIAL,
}


def surrogate_value_numpy(kind, v):
    v = np.asarray(v, dtype=np.float64)
    if kind == QUADRATIC:
        return (1.0 - v) ** 2
    if kind == LOGISTIC:
        # log(1 + exp(-v)) without overflow for large |v|
        return np.log1p(np.exp(-np.abs(v))) + np.maximum(0.0, -v)
    if kind == HINGE:
        return np.maximum(0.0, 1.0 - v)
    if kind == EXPONENTIAL:
        return np.exp(-v)
    raise ValueError(f"unknown surrogate code {kind}")


def surrogate_deriv_numpy(kind, v):
    v = np.asarray(v, dtype=np.float64)
    if kind == QUADRATIC:
        return -2.0 * (1.0 - v)
    if kind == LOGISTIC:
        # phi'(v) = -1 / (1 + e^v), evaluated on the non-overflowing branch
        out = np.empty_like(v)
        pos = v >= 0
        ev = np.exp(-v[pos])
        out[pos] = -ev / (1.0 + ev)
        out[~pos] = -1.0 / (1.0 + np.exp(v[~pos]))
        return out
    if kind == HINGE:
        # subgradient 0 at the kink v = 1
        return np.where(v < 1.0, -1.0, 0.0)
    if kind == EXPONENTIAL:
        return -np.exp(-v)
    raise ValueError(f"unknown surrogate code {kind}")


def classification_step_terms_numpy(x, s, theta, kind):
    """Per-batch gradient pieces for one optimizer step.

    x: (n, d) covariates, s: (n,) signed labels (+1 class 1, -1 class 0),
    theta: (d,). Returns (grad1, c0) with

        grad1 = (1/n) sum_i s_i phi'(s_i x_i.theta) x_i
        c0    = (1/n) sum_{s_i<0} (-phi'(-x_i.theta))

    grad1 is the non-performative gradient; the pushforward term of the
    gradient is c0 * Pi^T theta because every class-0 covariate gradient is
    -phi'(-margin) * theta.
    """
    m = x @ theta
    w = s * surrogate_deriv_numpy(kind, s * m)
    n = x.shape[0]
    grad1 = x.T @ w / n
    neg = s < 0
    c0 = -np.sum(surrogate_deriv_numpy(kind, -m[neg])) / n
    return grad1, float(c0)


def inner_descent_numpy(x, s, theta0, step, tol, max_steps, norm_cap, kind):
    """Gradient descent on the fixed-batch surrogate risk (used by RRM).

    Runs theta <- theta - step * grad until the gradient norm is <= tol,
    max_steps is hit, or the iterate norm exceeds norm_cap (the minimizer is
    effectively at infinity). Returns (theta, converged, steps).
    """
    theta = np.array(theta0, dtype=np.float64)
    n = x.shape[0]
    for k in range(max_steps):
        m = x @ theta
        w = s * surrogate_deriv_numpy(kind, s * m)
        grad = x.T @ w / n
        gnorm = float(np.linalg.norm(grad))
        if gnorm <= tol:
            return theta, True, k
        theta = theta - step * grad
        if not np.all(np.isfinite(theta)) or np.linalg.norm(theta) > norm_cap:
            return theta, False, k + 1
    return theta, False, max_steps


_want_numba = os.environ.get("PERFORMA_NUMBA", "1") != "0"
numba = None
if _want_numba:
    try:
        import numba
    except ImportError:
        numba = None

if numba is not None:
    from numba import njit

    @njit(cache=True, inline="always")
    def _phi_deriv_scalar(kind, v):
        if kind == 0:
            return -2.0 * (1.0 - v)
        if kind == 1:
            if v >= 0.0:
                ev = np.exp(-v)
                return -ev / (1.0 + ev)
            return -1.0 / (1.0 + np.exp(v))
        if kind == 2:
            return -1.0 if v < 1.0 else 0.0
        return -np.exp(-v)

    @njit(cache=True)
    def classification_step_terms_numba(x, s, theta, kind):
        n, d = x.shape
        grad1 = np.zeros(d)
        c0 = 0.0
        for i in range(n):
            m = 0.0
            for j in range(d):
                m += x[i, j] * theta[j]
            w = s[i] * _phi_deriv_scalar(kind, s[i] * m)
            for j in range(d):
                grad1[j] += w * x[i, j]
            if s[i] < 0.0:
                c0 -= _phi_deriv_scalar(kind, -m)
        for j in range(d):
            grad1[j] /= n
        return grad1, c0 / n

    @njit(cache=True)
    def inner_descent_numba(x, s, theta0, step, tol, max_steps, norm_cap, kind):
        n, d = x.shape
        theta = theta0.copy()
        grad = np.empty(d)
        for k in range(max_steps):
            for j in range(d):
                grad[j] = 0.0
            for i in range(n):
                m = 0.0
                for j in range(d):
                    m += x[i, j] * theta[j]
                w = s[i] * _phi_deriv_scalar(kind, s[i] * m)
                for j in range(d):
                    grad[j] += w * x[i, j]
            gsq = 0.0
            for j in range(d):
                grad[j] /= n
                gsq += grad[j] * grad[j]
            if np.sqrt(gsq) <= tol:
                return theta, True, k
            tsq = 0.0
            for j in range(d):
                theta[j] -= step * grad[j]
                tsq += theta[j] * theta[j]
            if not np.isfinite(tsq) or np.sqrt(tsq) > norm_cap:
                return theta, False, k + 1
        return theta, False, max_steps

    USING_NUMBA = True
    classification_step_terms = classification_step_terms_numba
    inner_descent = inner_descent_numba
else:
    USING_NUMBA = False
    classification_step_terms_numba = None
    inner_descent_numba = None
    classification_step_terms = classification_step_terms_numpy
    inner_descent = inner_descent_numpy
