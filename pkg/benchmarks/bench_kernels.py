"""Benchmark the jitted kernels against the pure-numpy fallback.

Run twice to compare both paths in one report:

    python3 benchmarks/bench_kernels.py
    PREPLINE_PURE_NUMPY=1 python3 benchmarks/bench_kernels.py

or let this script fork itself with the env flag set (default).
"""

import os
import subprocess
import sys
import time

import numpy as np


def _time(fn, *args, repeats=5):
    fn(*args)  # warm-up (first call pays any JIT compile)
    best = float("inf")
    for _ in range(repeats):
        start = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - start)
    return best


def run_benchmarks():
    from prepline import kernels

    rng = np.random.default_rng(0)
    print(f"backend: {kernels.backend_name()}")

    print(f"{'kernel':<34}{'input':<22}{'best of 5':>12}")
    for n, d in ((768, 8), (5000, 16), (20000, 32)):
        X = rng.normal(size=(n, d))
        y = (rng.random(n) > 0.5).astype(float)
        t = _time(kernels.logreg_fit, X, y)
        print(f"{'logreg_fit (300 iters)':<34}{f'{n}x{d}':<22}{t * 1e3:>10.1f}ms")
    for n in (5000, 20000, 50000):
        x = rng.normal(size=n)
        t = _time(kernels.pairwise_spread, x)
        print(f"{'pairwise_spread (O(n^2))':<34}{f'n={n}':<22}{t * 1e3:>10.1f}ms")


def main():
    if os.environ.get("PREPLINE_BENCH_CHILD"):
        run_benchmarks()
        return
    run_benchmarks()
    print(flush=True)
    env = dict(os.environ)
    env["PREPLINE_PURE_NUMPY"] = "1"
    env["PREPLINE_BENCH_CHILD"] = "1"
    subprocess.run([sys.executable, os.path.abspath(__file__)], env=env, check=True)


if __name__ == "__main__":
    main()
