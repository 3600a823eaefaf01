#!/usr/bin/env python3
"""Render figures from performa run CSVs.

Reads only the documented CSV schemas (the files are the contract; nothing is
imported from the performa package) and writes one raster image per
invocation:

    plot.py --kind curves       --in log2d.csv      --out curves.png
    plot.py --kind trajectory2d --in log2d_trajectory.csv --out traj.png
    plot.py --kind variance_bars --in estimator-variance.csv --out var.png
    plot.py --kind profile      --in convexity-profile.csv --out profile.png

curves draws the per-iteration mean with a +-1 std band per algorithm, one
panel per sweep value; trajectory2d draws parameter paths from their common
start; variance_bars compares empirical and analytic covariance traces per
estimator and dimension; profile draws one risk curve per shift magnitude.
Inputs are never modified and re-running overwrites the output in place.
"""

import argparse
import csv
import math
import sys
from collections import defaultdict
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

RUN_COLUMNS = {
    "experiment",
    "algorithm",
    "sweep_key",
    "sweep_value",
    "run",
    "iteration",
    "theta_norm",
    "risk",
    "accuracy",
    "pi_error",
    "diverged",
}
TRAJECTORY_COLUMNS = {"algorithm", "sweep_value", "run", "iteration", "theta_0", "theta_1"}
VARIANCE_COLUMNS = {"estimator", "d", "n", "replications", "trace_empirical", "trace_analytic"}
PROFILE_COLUMNS = {"lambda", "t", "risk"}


class PlotDataError(Exception):
    pass


def read_rows(paths, required):
    rows = []
    for path in paths:
        with open(path, newline="") as fh:
            reader = csv.DictReader(fh)
            header = set(reader.fieldnames or [])
            missing = required - header
            if missing:
                raise PlotDataError(f"{path}: missing columns {sorted(missing)}")
            rows.extend(reader)
    if not rows:
        raise PlotDataError(f"no data rows in {', '.join(map(str, paths))}")
    return rows


def _mean_std(values):
    arr = np.asarray(values, dtype=float)
    arr = arr[~np.isnan(arr)]
    if arr.size == 0:
        return math.nan, 0.0
    std = float(arr.std(ddof=1)) if arr.size > 1 else 0.0
    return float(arr.mean()), std


def plot_curves(paths, out, metric="accuracy"):
    rows = read_rows(paths, RUN_COLUMNS)
    if metric not in ("accuracy", "risk", "theta_norm", "pi_error"):
        raise PlotDataError(f"unsupported metric {metric!r}")
    sweeps = sorted({float(r["sweep_value"]) for r in rows})
    sweep_key = rows[0]["sweep_key"]
    fig, axes = plt.subplots(1, len(sweeps), figsize=(4.2 * len(sweeps), 3.4), squeeze=False)
    for ax, sweep in zip(axes[0], sweeps):
        grouped = defaultdict(lambda: defaultdict(list))
        for r in rows:
            if float(r["sweep_value"]) == sweep:
                grouped[r["algorithm"]][int(r["iteration"])].append(float(r[metric]))
        if not grouped:
            raise PlotDataError(f"empty group {sweep_key}={sweep}")
        for alg in sorted(grouped):
            iters = sorted(grouped[alg])
            stats = [_mean_std(grouped[alg][i]) for i in iters]
            mean = np.array([m for m, _ in stats])
            std = np.array([s for _, s in stats])
            (line,) = ax.plot(iters, mean, label=alg)
            ax.fill_between(iters, mean - std, mean + std, alpha=0.2, color=line.get_color())
        ax.set_title(f"{sweep_key} = {sweep:g}")
        ax.set_xlabel("iteration")
        ax.set_ylabel(metric)
    axes[0][0].legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(out, dpi=150)
    plt.close(fig)


def plot_trajectory2d(paths, out):
    rows = read_rows(paths, TRAJECTORY_COLUMNS)
    sweeps = sorted({float(r["sweep_value"]) for r in rows})
    fig, axes = plt.subplots(1, len(sweeps), figsize=(4.0 * len(sweeps), 3.8), squeeze=False)
    for ax, sweep in zip(axes[0], sweeps):
        grouped = defaultdict(lambda: defaultdict(list))
        for r in rows:
            if float(r["sweep_value"]) == sweep:
                grouped[r["algorithm"]][int(r["run"])].append(
                    (int(r["iteration"]), float(r["theta_0"]), float(r["theta_1"]))
                )
        if not grouped:
            raise PlotDataError(f"empty group sweep_value={sweep}")
        colors = plt.rcParams["axes.prop_cycle"].by_key()["color"]
        for ai, alg in enumerate(sorted(grouped)):
            color = colors[ai % len(colors)]
            first = True
            for _, pts in sorted(grouped[alg].items()):
                pts.sort()
                xs = [p[1] for p in pts]
                ys = [p[2] for p in pts]
                ax.plot(xs, ys, color=color, alpha=0.6, linewidth=1.0, label=alg if first else None)
                first = False
        ax.plot([0], [0], marker="o", color="black", markersize=4)
        ax.set_title(f"sweep = {sweep:g}")
        ax.set_xlabel("theta_0")
        ax.set_ylabel("theta_1")
        ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(out, dpi=150)
    plt.close(fig)


def plot_variance_bars(paths, out):
    rows = read_rows(paths, VARIANCE_COLUMNS)
    dims = sorted({int(r["d"]) for r in rows})
    estimators = sorted({r["estimator"] for r in rows})
    fig, ax = plt.subplots(figsize=(1.8 + 1.6 * len(dims), 3.6))
    width = 0.8 / (2 * len(estimators))
    centers = np.arange(len(dims), dtype=float)
    for j, est in enumerate(estimators):
        emp, ana = [], []
        for d in dims:
            match = [r for r in rows if r["estimator"] == est and int(r["d"]) == d]
            if not match:
                raise PlotDataError(f"empty group estimator={est}, d={d}")
            emp.append(float(match[0]["trace_empirical"]))
            ana.append(float(match[0]["trace_analytic"]))
        off = (2 * j - len(estimators) + 0.5) * width
        ax.bar(centers + off, emp, width, label=f"{est} empirical")
        ax.bar(centers + off + width, ana, width, alpha=0.5, label=f"{est} analytic")
    ax.set_yscale("log")
    ax.set_xticks(centers)
    ax.set_xticklabels([str(d) for d in dims])
    ax.set_xlabel("dimension")
    ax.set_ylabel("covariance trace")
    ax.legend(fontsize=7)
    fig.tight_layout()
    fig.savefig(out, dpi=150)
    plt.close(fig)


def plot_profile(paths, out):
    rows = read_rows(paths, PROFILE_COLUMNS)
    grouped = defaultdict(list)
    for r in rows:
        grouped[float(r["lambda"])].append((float(r["t"]), float(r["risk"])))
    fig, ax = plt.subplots(figsize=(5.0, 3.6))
    for lam in sorted(grouped):
        pts = sorted(grouped[lam])
        ax.plot([p[0] for p in pts], [p[1] for p in pts], label=f"lambda = {lam:g}")
    ax.set_xlabel("t")
    ax.set_ylabel("profile risk")
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(out, dpi=150)
    plt.close(fig)


KINDS = {
    "curves": plot_curves,
    "trajectory2d": plot_trajectory2d,
    "variance_bars": plot_variance_bars,
    "profile": plot_profile,
}


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--kind", required=True, choices=sorted(KINDS))
    parser.add_argument("--in", dest="inputs", nargs="+", required=True, help="input CSV file(s)")
    parser.add_argument("--out", required=True, help="output image path")
    parser.add_argument("--metric", default="accuracy", help="curves metric (accuracy, risk, theta_norm, pi_error)")
    args = parser.parse_args(argv)
    paths = [Path(p) for p in args.inputs]
    try:
        if args.kind == "curves":
            plot_curves(paths, args.out, metric=args.metric)
        else:
            KINDS[args.kind](paths, args.out)
    except PlotDataError as exc:
        print(f"plot error: {exc}", file=sys.stderr)
        return 1
    print(args.out)
    return 0


if __name__ == "__main__":
    sys.exit(main())
