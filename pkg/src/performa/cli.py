"""Experiment command line: parse configs, run seeded suites, write CSV.

Usage: performa <experiment> --config <path> --out <dir> [--seed N] [--runs N]
with experiments log2d, quad7d, pricing, housing, estimator-variance and
convexity-profile, plus a summarize subcommand for aggregating run CSVs.

Run CSVs carry the fixed header
experiment,algorithm,sweep_key,sweep_value,run,iteration,theta_norm,risk,accuracy,pi_error,diverged
with repeated-risk-minimization rows in a separate ``*_rrm.csv`` so its
divergent trajectories do not drown the comparison plots. Two-dimensional
experiments additionally emit ``*_trajectory.csv`` with theta coordinates, the
estimator-variance experiment emits covariance traces, and convexity-profile
emits ``lambda,t,risk`` rows.
"""

import argparse
import csv
import hashlib
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ._kernels import SURROGATE_CODES
from .estimators import (
    GaussianMeanCase,
    cov_rp_analytic,
    cov_sf_analytic,
    cov_sf_baseline_optimal,
    empirical_covariance,
    optimal_baseline,
)
from .optimizers import ALGORITHMS, OptimizerConfig, run
from .risk import profile_lambda_sweep
from .tasks import (
    HousingDataError,
    HousingTaskSpec,
    build_gauss2d,
    build_gauss7d,
    build_pricing,
    default_housing_path,
    load_housing,
)

RUN_SCHEMA = (
    "experiment,algorithm,sweep_key,sweep_value,run,iteration,"
    "theta_norm,risk,accuracy,pi_error,diverged"
).split(",")
TRAJECTORY_SCHEMA = RUN_SCHEMA[:6] + ["theta_0", "theta_1"]
VARIANCE_SCHEMA = ["estimator", "d", "n", "replications", "trace_empirical", "trace_analytic"]
PROFILE_SCHEMA = ["lambda", "t", "risk"]


class ConfigError(Exception):
    """Configuration file or option error (exit code 2)."""


def _floats(raw):
    try:
        return tuple(float(v) for v in raw.replace(",", " ").split())
    except ValueError as exc:
        raise ValueError(f"expected a list of numbers, got {raw!r}") from exc


def _strs(raw):
    return tuple(v for v in raw.replace(",", " ").split() if v)


def _bool(raw):
    low = raw.strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"expected a boolean, got {raw!r}")


_COMMON_RUN_KEYS = {
    "num_iter": (int, None),
    "n": (int, None),
    "n_runs": (int, None),
    "step_size": (float, None),
    "reg_lambda": (float, None),
    "pi_lambda": (float, None),
    "master_seed": (int, 1),
    "algorithms": (_strs, None),
}

# Per-experiment key schema and defaults (run experiments follow the published
# parameter tables).
EXPERIMENT_KEYS = {
    "log2d": {
        **_COMMON_RUN_KEYS,
        "sigma": (float, 0.5),
        "gamma_values": (_floats, (0.0, 0.5, 1.0)),
        "mu0": (_floats, (-1.0, -1.0)),
        "mu1": (_floats, (0.0, 0.0)),
        "rho": (float, 0.5),
        "pi": (_floats, None),
        "loss": (str, "logistic"),
    },
    "quad7d": {
        **_COMMON_RUN_KEYS,
        "sigma_values": (_floats, (0.1, 0.5, 1.0)),
        "mu0": (_floats, None),
        "mu1": (_floats, None),
        "rho": (float, 0.5),
        "pi": (_floats, None),
        "loss": (str, "quadratic"),
    },
    "pricing": {
        **_COMMON_RUN_KEYS,
        "mu": (_floats, (1.0, 2.0)),
        "elasticity": (_floats, (0.5, 1.0)),
        "sigma": (float, 0.5),
    },
    "housing": {
        **_COMMON_RUN_KEYS,
        "csv_path": (str, "housing_synthetic.csv"),
        "shift_lambda_values": (_floats, (0.0, 1.0, 2.0)),
        "standardize": (_bool, True),
        "intercept": (_bool, False),
    },
    "estimator-variance": {
        "dims": (_floats, (2.0, 8.0, 32.0)),
        "replications": (int, 20000),
        "n": (int, 1),
        "sigma": (float, 1.0),
        "master_seed": (int, 1),
    },
    "convexity-profile": {
        "lambda_values": (_floats, (-1.0, -0.5, 0.0, 0.5, 1.0)),
        "t_min": (float, -4.0),
        "t_max": (float, 4.0),
        "t_steps": (int, 81),
        "mu0": (_floats, (0.0, 0.0)),
        "mu1": (_floats, (-1.0, 1.0)),
        "sigma": (float, 0.5),
        "rho": (float, 0.5),
        "direction": (_floats, None),
        "master_seed": (int, 1),
    },
}

_RUN_DEFAULTS = {
    "log2d": dict(num_iter=100, n=1000, n_runs=100, step_size=0.1, reg_lambda=3e-2),
    "quad7d": dict(num_iter=25, n=1000, n_runs=100, step_size=0.1, reg_lambda=1e-1),
    "pricing": dict(num_iter=500, n=1000, n_runs=10, step_size=0.1, reg_lambda=1e-2),
    "housing": dict(num_iter=15, n=18000, n_runs=20, step_size=0.2, reg_lambda=5e-3),
}

_DEFAULT_ALGORITHMS = {
    "log2d": ("RGD", "RRGD", "SFPerfGD", "RPPerfGD", "RRM"),
    "quad7d": ("RGD", "RRGD", "SFPerfGD", "RPPerfGD", "RPPerfGD_learn", "RRM"),
    "pricing": ("RGD", "RPPerfGD", "RRM"),
    "housing": ("RGD", "RRGD", "RPPerfGD"),
}


@dataclass(frozen=True)
class ExperimentConfig:
    experiment: str
    params: dict

    def __getitem__(self, key):
        return self.params[key]


def _read_lines(path):
    """Parse the line-oriented key = value format, tracking line numbers."""
    entries = []
    with open(path) as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#") or line.startswith(";"):
                continue
            if line.startswith("[") and line.endswith("]"):
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{lineno}: expected 'key = value', got {line!r}")
            key, _, value = line.partition("=")
            entries.append((lineno, key.strip(), value.strip()))
    return entries


def parse_config(path, experiment) -> ExperimentConfig:
    """Validate a config file against the experiment's key schema.

    Missing keys fall back to the experiment's defaults; unknown keys and type
    errors are reported with their line numbers.
    """
    if experiment not in EXPERIMENT_KEYS:
        raise ConfigError(f"unknown experiment {experiment!r}; choose from {sorted(EXPERIMENT_KEYS)}")
    schema = EXPERIMENT_KEYS[experiment]
    params = {}
    if path is not None:
        if not Path(path).exists():
            raise ConfigError(f"config file not found: {path}")
        for lineno, key, raw in _read_lines(path):
            if key in ("experiment", "name"):
                if raw != experiment:
                    raise ConfigError(f"{path}:{lineno}: config is for {raw!r}, not {experiment!r}")
                continue
            if key not in schema:
                raise ConfigError(f"{path}:{lineno}: unknown key {key!r} for experiment {experiment!r}")
            if key in params:
                raise ConfigError(f"{path}:{lineno}: duplicate key {key!r}")
            parser = schema[key][0]
            try:
                params[key] = parser(raw)
            except ValueError as exc:
                raise ConfigError(f"{path}:{lineno}: bad value for {key!r}: {exc}") from exc
    for key, (_, default) in schema.items():
        if key not in params:
            params[key] = default
    for key, value in _RUN_DEFAULTS.get(experiment, {}).items():
        if params.get(key) is None:
            params[key] = value
    if experiment in _DEFAULT_ALGORITHMS and params.get("algorithms") is None:
        params["algorithms"] = _DEFAULT_ALGORITHMS[experiment]
    if "algorithms" in params and params["algorithms"] is not None:
        for alg in params["algorithms"]:
            if alg not in ALGORITHMS:
                raise ConfigError(f"unknown algorithm {alg!r}; choose from {ALGORITHMS}")
    if params.get("pi_lambda") is None and "reg_lambda" in params:
        params["pi_lambda"] = params["reg_lambda"]
    if params.get("loss") is not None and params["loss"] not in SURROGATE_CODES:
        raise ConfigError(f"unknown loss {params['loss']!r}; choose from {sorted(SURROGATE_CODES)}")
    dim = {"log2d": 2, "quad7d": 7}.get(experiment)
    if dim is not None and params.get("pi") is not None:
        if len(params["pi"]) not in (dim, dim * dim):
            raise ConfigError(
                f"pi must have {dim} entries (diagonal) or {dim * dim} (row-major matrix)"
            )
    return ExperimentConfig(experiment, params)


def _run_seed(master_seed, algorithm, sweep_key, sweep_value, run_idx):
    """Stable per-run seed; adding algorithms never perturbs other streams."""
    tag = f"{master_seed}|{algorithm}|{sweep_key}|{sweep_value:.12g}|{run_idx}"
    return int.from_bytes(hashlib.sha256(tag.encode()).digest()[:8], "big") >> 1


def _fmt(value):
    if isinstance(value, bool):
        return "True" if value else "False"
    if isinstance(value, float):
        if np.isnan(value):
            return "nan"
        return f"{value:.12g}"
    return str(value)


def _write_csv(path, header, rows):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(v) for v in row])


def _task_for(config, sweep_value):
    exp = config.experiment
    p = config.params
    if exp == "log2d":
        return build_gauss2d(
            sweep_value,
            sigma=p["sigma"],
            rho=p["rho"],
            mu0=p["mu0"],
            mu1=p["mu1"],
            pi_base=p["pi"],
            loss=p["loss"],
        )
    if exp == "quad7d":
        return build_gauss7d(
            sigma=sweep_value,
            rho=p["rho"],
            mu0=p["mu0"],
            mu1=p["mu1"],
            pi=p["pi"],
            loss=p["loss"],
        )
    if exp == "pricing":
        return build_pricing(mu=p["mu"], elasticity=p["elasticity"], sigma=p["sigma"])
    if exp == "housing":
        spec = HousingTaskSpec(
            csv_path=str(default_housing_path(p["csv_path"])),
            lambda_shift=sweep_value,
            standardize=p["standardize"],
            intercept=p["intercept"],
        )
        return load_housing(spec)
    raise ConfigError(f"{exp} is not a run experiment")


_SWEEP_KEYS = {"log2d": "gamma", "quad7d": "sigma", "pricing": "none", "housing": "shift_lambda"}


def _sweep_values(config):
    exp = config.experiment
    if exp == "log2d":
        return config["gamma_values"]
    if exp == "quad7d":
        return config["sigma_values"]
    if exp == "pricing":
        return (0.0,)
    return config["shift_lambda_values"]


def _execute_run(config, model, loss, algorithm, sweep_key, sweep_value, run_idx):
    p = config.params
    opt = OptimizerConfig(
        algorithm=algorithm,
        step_size=p["step_size"],
        num_iter=p["num_iter"],
        n=p["n"],
        theta0=np.zeros(model.dim),
        seed=_run_seed(p["master_seed"], algorithm, sweep_key, sweep_value, run_idx),
        reg_lambda=p["reg_lambda"] if algorithm == "RRGD" else 0.0,
        pi_lambda=p["pi_lambda"],
    )
    rec = run(model, loss, opt)
    rows, traj = [], []
    for i in range(rec.iterations):
        flag = rec.diverged and i == rec.iterations - 1
        rows.append(
            (
                config.experiment,
                algorithm,
                sweep_key,
                sweep_value,
                run_idx,
                i,
                float(np.linalg.norm(rec.thetas[i])),
                float(rec.risks[i]),
                float(rec.accuracies[i]),
                float(rec.pi_errors[i]),
                flag,
            )
        )
        if model.dim == 2:
            traj.append(
                (
                    config.experiment,
                    algorithm,
                    sweep_key,
                    sweep_value,
                    run_idx,
                    i,
                    float(rec.thetas[i][0]),
                    float(rec.thetas[i][1]),
                )
            )
    return rows, traj


def run_suite(config: ExperimentConfig, out_dir, jobs=None):
    """Run every (algorithm, sweep value, run) cell and write sorted CSVs."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    exp = config.experiment
    if exp == "estimator-variance":
        return {"variance": _run_estimator_variance(config, out_dir)}
    if exp == "convexity-profile":
        return {"profile": _run_convexity_profile(config, out_dir)}

    sweep_key = _SWEEP_KEYS[exp]
    tasks = {value: _task_for(config, value) for value in _sweep_values(config)}
    specs = [
        (alg, value, run_idx)
        for alg in config["algorithms"]
        for value in tasks
        for run_idx in range(config["n_runs"])
    ]

    def _job(spec):
        alg, value, run_idx = spec
        model, loss = tasks[value]
        return _execute_run(config, model, loss, alg, sweep_key, value, run_idx)

    workers = jobs or min(8, os.cpu_count() or 1)
    with ThreadPoolExecutor(max_workers=workers) as pool:
        results = list(pool.map(_job, specs))

    main_rows, rrm_rows, traj_rows = [], [], []
    for rows, traj in results:
        target = rrm_rows if rows and rows[0][1] == "RRM" else main_rows
        target.extend(rows)
        if rows and rows[0][1] != "RRM":
            traj_rows.extend(traj)

    def _key(row):
        return (row[0], row[1], row[2], float(row[3]), int(row[4]), int(row[5]))

    paths = {}
    main_rows.sort(key=_key)
    paths["main"] = out_dir / f"{exp}.csv"
    _write_csv(paths["main"], RUN_SCHEMA, main_rows)
    if rrm_rows:
        rrm_rows.sort(key=_key)
        paths["rrm"] = out_dir / f"{exp}_rrm.csv"
        _write_csv(paths["rrm"], RUN_SCHEMA, rrm_rows)
    if traj_rows:
        traj_rows.sort(key=_key)
        paths["trajectory"] = out_dir / f"{exp}_trajectory.csv"
        _write_csv(paths["trajectory"], TRAJECTORY_SCHEMA, traj_rows)
    return paths


def _run_estimator_variance(config, out_dir):
    rows = []
    reps = config["replications"]
    n = config["n"]
    sigma = config["sigma"]
    for d in (int(v) for v in config["dims"]):
        case = GaussianMeanCase(pi=np.eye(d), sigma=sigma, theta=np.zeros(d), theta_prime=np.zeros(d))
        seed = _run_seed(config["master_seed"], "variance", "d", float(d), 0)
        rp = case.rp_replications(reps, n, seed)
        sf = case.sf_replications(reps, n, seed)
        m_star = optimal_baseline(case)
        sfb = case.sf_replications(reps, n, seed, baseline=m_star)
        cov_opt, _ = cov_sf_baseline_optimal(case, n)
        for name, emp, ana in (
            ("RP", rp, cov_rp_analytic(case, n)),
            ("SF", sf, cov_sf_analytic(case, n)),
            ("SF_baseline", sfb, cov_opt),
        ):
            rows.append(
                (
                    name,
                    d,
                    n,
                    reps,
                    float(np.trace(empirical_covariance(emp))),
                    float(np.trace(ana)),
                )
            )
    path = out_dir / "estimator-variance.csv"
    _write_csv(path, VARIANCE_SCHEMA, rows)
    return path


def _run_convexity_profile(config, out_dir):
    direction = config["direction"]
    mu1 = np.asarray(config["mu1"], dtype=np.float64)
    if direction is None:
        # default to a direction the fixed class cannot curve upward: in 2-d
        # the perpendicular of mu1, which makes the lambda < 0 dip visible
        if mu1.size == 2 and np.linalg.norm(mu1) > 0:
            perp = np.array([-mu1[1], mu1[0]])
            direction = tuple(perp / np.linalg.norm(perp))
        elif np.linalg.norm(mu1) > 0:
            direction = tuple(mu1 / np.linalg.norm(mu1))
        else:
            direction = tuple(np.ones_like(mu1) / np.sqrt(mu1.size))
    ts = np.linspace(config["t_min"], config["t_max"], config["t_steps"])
    rows = profile_lambda_sweep(
        mu0=config["mu0"],
        mu1=mu1,
        sigma=config["sigma"],
        rho=config["rho"],
        lambdas=config["lambda_values"],
        direction=np.asarray(direction, dtype=np.float64),
        ts=ts,
    )
    path = out_dir / "convexity-profile.csv"
    _write_csv(path, PROFILE_SCHEMA, rows)
    return path


def summarize(csv_path):
    """Aggregate a run CSV per (algorithm, sweep value, iteration).

    Returns rows with mean and sample std of risk and accuracy over runs plus
    the number of diverged runs in each (algorithm, sweep value) group.
    """
    groups = {}
    diverged_runs = {}
    with open(csv_path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or not set(RUN_SCHEMA) <= set(reader.fieldnames):
            raise ValueError(f"{csv_path}: not a run CSV (header {reader.fieldnames})")
        for row in reader:
            try:
                gkey = (row["algorithm"], row["sweep_key"], float(row["sweep_value"]))
                ikey = gkey + (int(row["iteration"]),)
                groups.setdefault(ikey, []).append((float(row["risk"]), float(row["accuracy"])))
                if row["diverged"] == "True":
                    diverged_runs.setdefault(gkey, set()).add(int(row["run"]))
            except (KeyError, ValueError) as exc:
                raise ValueError(f"{csv_path}: malformed row {row}: {exc}") from exc

    def _stats(values):
        arr = np.asarray(values)
        mean = float(np.nanmean(arr)) if not np.all(np.isnan(arr)) else float("nan")
        std = float(np.nanstd(arr, ddof=1)) if arr.size > 1 else 0.0
        return mean, std

    out = []
    for ikey in sorted(groups):
        alg, skey, sval, iteration = ikey
        risks, accs = zip(*groups[ikey])
        rm, rs = _stats(risks)
        am, a_s = _stats(accs)
        out.append(
            {
                "algorithm": alg,
                "sweep_key": skey,
                "sweep_value": sval,
                "iteration": iteration,
                "n_runs": len(risks),
                "risk_mean": rm,
                "risk_std": rs,
                "accuracy_mean": am,
                "accuracy_std": a_s,
                "n_diverged": len(diverged_runs.get((alg, skey, sval), ())),
            }
        )
    return out


def write_summary(rows, out_path):
    header = [
        "algorithm",
        "sweep_key",
        "sweep_value",
        "iteration",
        "n_runs",
        "risk_mean",
        "risk_std",
        "accuracy_mean",
        "accuracy_std",
        "n_diverged",
    ]
    _write_csv(out_path, header, [[r[h] for h in header] for r in rows])


def main(argv=None):
    parser = argparse.ArgumentParser(prog="performa", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    for exp in EXPERIMENT_KEYS:
        sp = sub.add_parser(exp, help=f"run the {exp} experiment")
        sp.add_argument("--config", default=None, help="key = value config file")
        sp.add_argument("--out", default="out", help="output directory")
        sp.add_argument("--seed", type=int, default=None, help="override master_seed")
        sp.add_argument("--runs", type=int, default=None, help="override n_runs")
        sp.add_argument("--jobs", type=int, default=None, help="concurrent runs")
    ssum = sub.add_parser("summarize", help="aggregate a run CSV")
    ssum.add_argument("--in", dest="in_path", required=True)
    ssum.add_argument("--out", default=None, help="write the summary CSV here (default: stdout)")
    args = parser.parse_args(argv)

    try:
        if args.command == "summarize":
            rows = summarize(args.in_path)
            if args.out:
                write_summary(rows, args.out)
            else:
                for row in rows:
                    print(row)
            return 0
        config = parse_config(args.config, args.command)
        if args.seed is not None:
            config.params["master_seed"] = args.seed
        if args.runs is not None and "n_runs" in config.params:
            config.params["n_runs"] = args.runs
        paths = run_suite(config, args.out, jobs=args.jobs)
        for name, path in paths.items():
            print(f"{name}: {path}")
        return 0
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (HousingDataError, ValueError, OSError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
