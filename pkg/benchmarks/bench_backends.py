"""Compare the compiled and pure-Python kernels on representative workloads.

Usage::

    python benchmarks/bench_backends.py [--repeat 3] [--quick]

Workloads:

* ``bp``: basis pursuit on a projected design (10 x 200), the per-vertex solve.
* ``group``: one relaxed group-bound LP (10 rows, 2p + 2m + 1 columns).
* ``lasso``: a 100-value Lasso path on correlated data (22 x 100).

Each workload runs with both backends on identical inputs; the script checks
that the answers agree before reporting timings.
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from groupbound import _backend
from groupbound.basis_pursuit import RegressionData, basis_pursuit
from groupbound.group_bound import build_split_context, lower_bound
from groupbound.lasso import _standardize, lambda_grid, lambda_max, lasso_path
from groupbound.noise import CalibrationCache
from groupbound.simulation import build_setting, simulate_dataset


def _timeit(fn, repeat):
    best = float("inf")
    out = None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def workloads(quick: bool):
    rng = np.random.default_rng(0)
    p = 60 if quick else 200
    A = rng.standard_normal((10, p))
    y = rng.standard_normal(10)
    yield "bp", lambda b: basis_pursuit(A, y, backend=b).norm

    setting = build_setting("i", 0.5).scaled(p=p, n=50)
    data, beta = simulate_dataset(setting, 1)
    half = data.subset(np.arange(25))
    ctx = build_split_context(half, beta, 0.05, 10, CalibrationCache(calibrate_missing=False), 2)
    G = tuple(range(10))
    yield "group", lambda b: lower_bound(ctx, G, backend=b).lower_bound

    st = build_setting("i", 0.01).scaled(p=p // 2 if quick else 100, n=50)
    d, _ = simulate_dataset(st, 3)
    Xs, yc, *_ = _standardize(d.X[:22], d.Y[:22])
    lams = lambda_grid(lambda_max(Xs, yc), 30 if quick else 100)
    yield "lasso", lambda b: lasso_path(Xs, yc, lams, partial=True, backend=b)


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=3)
    parser.add_argument("--quick", action="store_true", help="smaller instances")
    args = parser.parse_args(argv)

    backends = ["python"]
    try:
        _backend.get_kernels("cython")
        backends.insert(0, "cython")
    except ImportError:
        print("compiled extension not available; timing the Python kernels only")

    print(f"{'workload':<8} " + " ".join(f"{b:>12}" for b in backends) + "   speedup")
    for name, fn in workloads(args.quick):
        times, answers = [], []
        for b in backends:
            t, out = _timeit(lambda: fn(b), args.repeat)
            times.append(t)
            answers.append(np.asarray(out, dtype=float))
        if len(answers) == 2:
            a, c = answers
            if a.shape != c.shape or not np.allclose(a, c, rtol=1e-8, atol=1e-10):
                raise SystemExit(f"{name}: backends disagree")
        speed = f"{times[-1] / times[0]:8.1f}x" if len(times) == 2 else ""
        print(f"{name:<8} " + " ".join(f"{t * 1e3:10.2f}ms" for t in times) + f"  {speed}")


if __name__ == "__main__":
    main()
