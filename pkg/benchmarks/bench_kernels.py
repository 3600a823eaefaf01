#!/usr/bin/env python3
"""Benchmark the numba-compiled kernels against the pure-numpy fallbacks.

Runs each hot kernel on representative workloads and prints the per-call time
for both paths plus the speedup. Invoke as

    python benchmarks/bench_kernels.py [--repeats 50]

Setting PERFORMA_NUMBA=0 disables compilation package-wide; this script always
times both implementations directly (it skips the compiled rows if numba is
unavailable).
"""

import argparse
import time

import numpy as np

from performa import _kernels


def _time(fn, args, repeats):
    fn(*args)  # warm up (includes JIT compilation for the numba path)
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--repeats", type=int, default=50)
    args = parser.parse_args()

    rng = np.random.default_rng(0)
    rows = []

    for n, d in ((1000, 2), (1000, 7), (18000, 8)):
        x = rng.normal(size=(n, d))
        s = np.where(rng.random(n) < 0.5, 1.0, -1.0)
        theta = rng.normal(size=d)
        call = (x, s, theta, _kernels.LOGISTIC)
        t_np = _time(_kernels.classification_step_terms_numpy, call, args.repeats)
        t_nb = (
            _time(_kernels.classification_step_terms_numba, call, args.repeats)
            if _kernels.classification_step_terms_numba
            else None
        )
        rows.append((f"step_terms n={n} d={d}", t_np, t_nb))

    for steps in (1000, 10000):
        x = rng.normal(size=(1000, 2)) + np.array([1.0, 0.5])
        s = np.where(rng.random(1000) < 0.5, 1.0, -1.0)
        call = (x, s, np.zeros(2), 0.05, 0.0, steps, 1e6, _kernels.LOGISTIC)
        t_np = _time(_kernels.inner_descent_numpy, call, max(3, args.repeats // 10))
        t_nb = (
            _time(_kernels.inner_descent_numba, call, max(3, args.repeats // 10))
            if _kernels.inner_descent_numba
            else None
        )
        rows.append((f"inner_descent {steps} steps", t_np, t_nb))

    print(f"{'kernel':<28} {'numpy':>12} {'numba':>12} {'speedup':>8}")
    for name, t_np, t_nb in rows:
        if t_nb is None:
            print(f"{name:<28} {t_np * 1e3:>10.3f}ms {'n/a':>12} {'':>8}")
        else:
            print(f"{name:<28} {t_np * 1e3:>10.3f}ms {t_nb * 1e3:>10.3f}ms {t_np / t_nb:>7.1f}x")


if __name__ == "__main__":
    main()
