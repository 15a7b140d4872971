#!/usr/bin/env python3
"""Timing comparison: numba-compiled kernels vs the pure-numpy fallback.

The package selects the interpreted path when SPLITREE_NO_NUMBA=1 is set
(or numba is missing); both paths are the same source and draw identical
random streams, so the comparison is purely about speed. Compiled
dispatchers expose the interpreted function as ``.py_func``, which is
exactly what runs under SPLITREE_NO_NUMBA=1.

Usage: python benchmarks/bench.py [--trials 100000] [--n 8]
"""

import argparse
import time

from splitree import kernels
from splitree.model import DEFAULT_DEPTH_CAP, trial_stream

CAP = DEFAULT_DEPTH_CAP


def best_of(fn, repeat=3):
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--trials", type=int, default=100_000)
    ap.add_argument("--n", type=int, default=8)
    args = ap.parse_args()
    t, n = args.trials, args.n

    # each case: name, callable(kernel_fn, trials)
    cases = [
        ("conflict_trials",
         lambda f, k: f(trial_stream(1, 0), n, k, CAP), t),
        ("path_trials (election)",
         lambda f, k: f(trial_stream(2, 0), n, k, 1, CAP), t),
        ("coin_trials",
         lambda f, k: f(trial_stream(3, 0), n, k, CAP), t),
        ("maxfind_trials",
         lambda f, k: f(trial_stream(4, 0), n, k, False, CAP), t),
        ("sort_trials",
         lambda f, k: f(trial_stream(5, 0), n, k, CAP), t // 2),
        ("paired_conflict_maxfind",
         lambda f, k: f(trial_stream(6, 0), n, k, CAP), t // 4),
        ("mean_table_f64",
         lambda f, k: f(0, k), 2000),
    ]
    kernel_names = ["conflict_trials", "path_trials", "coin_trials",
                    "maxfind_trials", "sort_trials", "paired_conflict_maxfind",
                    "mean_table_f64"]

    print(f"jit enabled: {kernels.JIT_ENABLED}   trials={t} n={n}")
    header = f"{'kernel':26s} {'jit (s)':>9s} {'interp (s)':>11s} {'speedup':>8s}"
    print(header)
    print("-" * len(header))
    for (label, call, full), kname in zip(cases, kernel_names):
        fn = getattr(kernels, kname)
        py_fn = getattr(fn, "py_func", fn)
        if kernels.JIT_ENABLED:
            call(fn, min(full, 100))            # compile / warm cache
            jit_t = best_of(lambda: call(fn, full))
            small = max(full // 20, 100)        # interpreted pass: extrapolate
            py_t = best_of(lambda: call(py_fn, small), repeat=1) * (full / small)
            print(f"{label:26s} {jit_t:9.4f} {py_t:11.3f} {py_t / jit_t:7.1f}x")
        else:
            py_t = best_of(lambda: call(py_fn, max(full // 20, 100)), repeat=1)
            py_t *= full / max(full // 20, 100)
            print(f"{label:26s} {'-':>9s} {py_t:11.3f} {'-':>8s}")


if __name__ == "__main__":
    main()
