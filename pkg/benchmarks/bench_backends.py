#!/usr/bin/env python3
"""Benchmark the compiled kernels against the pure-numpy fallbacks.

Both backends compute identical bytes (see bellmi._kernels); this script
measures what the compiled path buys.  Run:

    python3 benchmarks/bench_backends.py [rounds]
"""

import sys
import time

import numpy as np

from bellmi import _kernels
from bellmi.sphere import RandomSource, sample_uniform_sphere


def bench(label, fn, args, repeats=5):
    fn(*args)  # warm-up (first numba call compiles)
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - t0)
    print(f"  {label:<28s} {best * 1e3:10.3f} ms")
    return best


def main():
    n = int(sys.argv[1]) if len(sys.argv) > 1 else 2_000_000
    gen = RandomSource(0).generator()
    xs = sample_uniform_sphere(gen, n)
    ys = sample_uniform_sphere(gen, n)
    l1 = sample_uniform_sphere(gen, n)
    l2 = sample_uniform_sphere(gen, n)
    us = gen.random(n)
    settings = sample_uniform_sphere(gen, 100)
    p_x = np.full(100, 0.01)
    a = np.where(gen.random(n) < 0.5, 1, -1).astype(np.int8)
    b = np.where(gen.random(n) < 0.5, 1, -1).astype(np.int8)
    x_idx = gen.integers(0, 2, n)
    y_idx = gen.integers(0, 2, n)

    pairs = [
        ("tb_outcomes", (xs, ys, l1, l2),
         _kernels.tb_outcomes_numba, _kernels.tb_outcomes_numpy),
        ("gg_outcomes", (xs, ys, l1, us),
         _kernels.gg_outcomes_numba, _kernels.gg_outcomes_numpy),
        ("agreement_probs", (settings, p_x, l1[:10000], l2[:10000]),
         _kernels.agreement_probs_numba, _kernels.agreement_probs_numpy),
        ("tally", (x_idx, y_idx, a, b, 2, 2),
         _kernels.tally_numba, _kernels.tally_numpy),
    ]

    if not _kernels.HAVE_NUMBA:
        print("numba unavailable; benchmarking the numpy backend only")

    print(f"rounds = {n}")
    for name, args, fn_numba, fn_numpy in pairs:
        print(name)
        t_np = bench("numpy", fn_numpy, args)
        if _kernels.HAVE_NUMBA:
            t_nb = bench("numba", fn_numba, args)
            print(f"  {'speedup':<28s} {t_np / t_nb:10.2f} x")


if __name__ == "__main__":
    main()
