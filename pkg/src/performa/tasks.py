"""Builders for the synthetic benchmark tasks and the housing ingest.

Synthetic tasks: a 2-d logistic problem whose unfavored class chases the
deployed classifier, a 7-d quadratic problem with two shifted coordinates, and
the resource pricing problem. The housing task resamples class-conditional
pools from a CSV and shifts a fixed coordinate subset of the unfavored class.
"""

import csv
import os
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .losses import ClassificationLoss, PricingLoss, Surrogate
from .models import (
    EmpiricalClassModel,
    GaussianClassModel,
    PerformativeModel,
    PricingModel,
    ShiftOperator,
)

GAUSS2D_SHIFT_DIAG = np.array([0.1, 0.9])
GAUSS7D_SHIFT_DIAG = np.array([0.1, 3.0, 0.0, 0.0, 0.0, 0.0, 0.0])
GAUSS7D_CLASS0_MEAN = np.array([1.0, 2.0, 0.5, 0.5, 0.0, 0.0, 0.0])
HOUSING_SHIFTED_COORDS = (0, 4, 6)


def shift_matrix_from_values(values, dim):
    """Interpret a value list as a shift matrix: length d is a diagonal,
    length d*d a full row-major matrix."""
    values = np.asarray(values, dtype=np.float64)
    if values.shape == (dim,):
        return np.diag(values)
    if values.shape == (dim * dim,):
        return values.reshape(dim, dim)
    raise ValueError(f"shift values must have length {dim} (diagonal) or {dim * dim} (row-major)")


def build_gauss2d(gamma, sigma=0.5, rho=0.5, mu0=(-1.0, -1.0), mu1=(0.0, 0.0), pi_base=None, loss="logistic"):
    """2-d task: class 1 fixed, class 0 shifted by gamma diag(0.1, 0.9) theta.

    Default means follow the accuracy experiment (class 1 at the origin,
    class 0 based at -(1,1)); the repeated-retraining divergence experiment
    swaps to mu0=(0,0), mu1=(-1,1). pi_base replaces the (0.1, 0.9) diagonal
    (a length-2 diagonal or length-4 row-major matrix) and is scaled by gamma.
    """
    if gamma < 0 or sigma <= 0:
        raise ValueError("need gamma >= 0 and sigma > 0")
    base = np.diag(GAUSS2D_SHIFT_DIAG) if pi_base is None else shift_matrix_from_values(pi_base, 2)
    model = PerformativeModel(
        classes=GaussianClassModel(
            mu0=np.asarray(mu0, dtype=np.float64),
            mu1=np.asarray(mu1, dtype=np.float64),
            rho=rho,
            sigma=sigma,
        ),
        shift=ShiftOperator(gamma * base),
    )
    return model, ClassificationLoss(Surrogate(loss))


def build_gauss7d(sigma=0.5, rho=0.5, mu0=None, mu1=None, pi=None, loss="quadratic"):
    """7-d quadratic task with two coordinates subject to the shift."""
    if sigma <= 0:
        raise ValueError("need sigma > 0")
    mu0 = GAUSS7D_CLASS0_MEAN.copy() if mu0 is None else np.asarray(mu0, dtype=np.float64)
    mu1 = np.zeros(7) if mu1 is None else np.asarray(mu1, dtype=np.float64)
    shift = np.diag(GAUSS7D_SHIFT_DIAG) if pi is None else shift_matrix_from_values(pi, 7)
    model = PerformativeModel(
        classes=GaussianClassModel(mu0=mu0, mu1=mu1, rho=rho, sigma=sigma),
        shift=ShiftOperator(shift),
    )
    return model, ClassificationLoss(Surrogate(loss))


def build_pricing(mu=(1.0, 2.0), elasticity=(0.5, 1.0), sigma=0.5, allow_nonconvex=False):
    """Pricing task: demand U - diag(elasticity) theta, objective -z.theta."""
    elasticity = np.asarray(elasticity, dtype=np.float64)
    if np.any(elasticity <= 0) and not allow_nonconvex:
        raise ValueError("nonpositive elasticity makes the risk nonconvex; pass allow_nonconvex=True")
    return PricingModel(mu=np.asarray(mu, dtype=np.float64), elasticity=elasticity, sigma=sigma), PricingLoss()


@dataclass(frozen=True)
class HousingTaskSpec:
    csv_path: str
    lambda_shift: float = 1.0
    shifted_coords: tuple = HOUSING_SHIFTED_COORDS
    standardize: bool = True
    intercept: bool = False


class HousingDataError(Exception):
    """Raised when the housing CSV is missing or malformed."""


def _parse_label(raw):
    raw = raw.strip()
    if raw in ("0", "N"):
        return 0
    if raw in ("1", "P"):
        return 1
    raise HousingDataError(f"non-binary label value {raw!r}")


def read_housing_csv(path):
    """Parse header + numeric feature columns + binary label column.

    The label column is the one named ``binaryClass`` or, failing that, the
    last column; values {0,1} or {N,P} (N maps to 0, P to 1).
    """
    path = Path(path)
    if not path.exists():
        raise HousingDataError(f"housing CSV not found: {path}")
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if not header:
            raise HousingDataError(f"empty CSV: {path}")
        header = [h.strip() for h in header]
        label_col = header.index("binaryClass") if "binaryClass" in header else len(header) - 1
        features, labels = [], []
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(header):
                raise HousingDataError(f"{path}:{lineno}: expected {len(header)} columns, got {len(row)}")
            labels.append(_parse_label(row[label_col]))
            try:
                features.append([float(v) for i, v in enumerate(row) if i != label_col])
            except ValueError as exc:
                raise HousingDataError(f"{path}:{lineno}: {exc}") from exc
    feature_names = [h for i, h in enumerate(header) if i != label_col]
    return np.asarray(features, dtype=np.float64), np.asarray(labels, dtype=np.int8), feature_names


def write_housing_csv(path, features, labels, feature_names):
    """Inverse of read_housing_csv; float text round-trips bit for bit."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(list(feature_names) + ["binaryClass"])
        for row, lab in zip(features, labels):
            writer.writerow([repr(float(v)) for v in row] + ["P" if lab == 1 else "N"])


def standardize_columns(x):
    """Z-score each column; returns (standardized, means, stds)."""
    means = x.mean(axis=0)
    stds = x.std(axis=0)
    stds = np.where(stds == 0, 1.0, stds)
    return (x - means) / stds, means, stds


def load_housing(spec: HousingTaskSpec):
    """Build the empirical performative model from a housing-style CSV.

    Class 1 (high price) is the favored class and never moves; class-0 rows
    are shifted by lambda * theta_i on the designated coordinates.
    """
    x, y, _ = read_housing_csv(spec.csv_path)
    if spec.standardize:
        x, _, _ = standardize_columns(x)
    if spec.intercept:
        x = np.hstack([x, np.ones((x.shape[0], 1))])
    d = x.shape[1]
    if max(spec.shifted_coords, default=-1) >= d:
        raise HousingDataError("shifted coordinate outside the feature dimension")
    mask = np.zeros(d)
    mask[list(spec.shifted_coords)] = 1.0
    model = PerformativeModel(
        classes=EmpiricalClassModel(x0=x[y == 0], x1=x[y == 1]),
        shift=ShiftOperator(spec.lambda_shift * np.diag(mask)),
    )
    return model, ClassificationLoss(Surrogate("logistic"))


SYNTHETIC_HOUSING_COLUMNS = (
    "households",
    "median_income",
    "housing_median_age",
    "total_rooms",
    "total_bedrooms",
    "population",
    "rooms_per_household",
    "latitude",
)


def make_synthetic_housing(path, n=2000, seed=7):
    """Write the bundled housing stand-in: same schema, learnable labels.

    Columns are on deliberately different scales so the standardization
    default matters, and the binary label follows a noisy linear rule.
    """
    rng = np.random.default_rng(seed)
    scales = np.array([2.0, 4.0, 12.0, 800.0, 150.0, 900.0, 1.5, 2.0])
    centers = np.array([3.0, 5.0, 28.0, 2600.0, 520.0, 1400.0, 5.4, 35.0])
    x = centers + scales * rng.standard_normal((n, len(scales)))
    w = rng.standard_normal(len(scales))
    z, _, _ = standardize_columns(x)
    logits = z @ w * 1.5 + 0.3 * rng.standard_normal(n)
    y = (logits > 0).astype(np.int8)
    write_housing_csv(path, x, y, SYNTHETIC_HOUSING_COLUMNS)
    return path


def default_housing_path(csv_path="housing_synthetic.csv"):
    """Resolve a housing CSV path: absolute as-is, else PERFORMA_DATA_DIR,
    the working directory, then ./data."""
    p = Path(csv_path)
    if p.is_absolute():
        return p
    candidates = []
    env_dir = os.environ.get("PERFORMA_DATA_DIR")
    if env_dir:
        candidates.append(Path(env_dir) / p)
    candidates.extend([p, Path("data") / p])
    for cand in candidates:
        if cand.exists():
            return cand
    return candidates[-1]
