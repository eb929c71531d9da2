#!/usr/bin/env python3
"""Benchmark the compiled kernels against the NumPy fallback.

Times the two hot paths of the test pipeline (the pairwise statistic sum
and the batched k-NN conditional CDF) on both backends and prints the
speedup table.

    python benchmarks/bench_kernels.py --sizes 200,500,1000,2000 --d 1
"""

import argparse
import time

import numpy as np

from wpcopula._kernels import _backend_numpy

try:
    from wpcopula._kernels import _core
except ImportError:
    _core = None


def best_of(fn, repeats):
    times = []
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def bench(n, d, repeats, rng):
    x = rng.standard_normal((n, d))
    g1, g2 = rng.random(n), rng.random(n)
    y = rng.standard_normal(n)
    k = max(1, int(np.ceil(n ** (2 / (d + 2)))))
    rows = []
    for name, fn_np, fn_cy in [
        (
            "pair_stat_sums",
            lambda: _backend_numpy.pair_stat_sums(g1, g2, x, 1.0),
            (lambda: _core.pair_stat_sums(g1, g2, x, 1.0)) if _core else None,
        ),
        (
            f"knn_cdf_batch(k={k})",
            lambda: _backend_numpy.knn_cdf_batch(x, y, k, x, y),
            (lambda: _core.knn_cdf_batch(x, y, k, x, y)) if _core else None,
        ),
    ]:
        t_np = best_of(fn_np, repeats)
        t_cy = best_of(fn_cy, repeats) if fn_cy else float("nan")
        rows.append((name, n, t_np, t_cy))
    return rows


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--sizes", default="200,500,1000,2000")
    parser.add_argument("--d", type=int, default=1)
    parser.add_argument("--repeats", type=int, default=3)
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args()

    if _core is None:
        print("note: compiled backend unavailable; showing NumPy only")
    rng = np.random.default_rng(args.seed)
    print(f"{'kernel':<24} {'n':>6} {'numpy [ms]':>12} {'cython [ms]':>12} {'speedup':>8}")
    for n in (int(s) for s in args.sizes.split(",")):
        for name, size, t_np, t_cy in bench(n, args.d, args.repeats, rng):
            speed = t_np / t_cy if t_cy == t_cy else float("nan")
            print(f"{name:<24} {size:>6} {t_np * 1e3:>12.2f} {t_cy * 1e3:>12.2f} {speed:>7.1f}x")


if __name__ == "__main__":
    main()
