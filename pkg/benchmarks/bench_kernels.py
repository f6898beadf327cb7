#!/usr/bin/env python3
"""Benchmark the compiled chain-simulation kernels against the numpy fallback.

Run:  python3 benchmarks/bench_kernels.py [--trials 4096] [--steps 500]
"""

import argparse
import time

import numpy as np

from koopman_cert import _kernels_py, kernels


def _inputs(n_states, trials, steps, seed):
    g = np.random.Generator(np.random.Philox(seed=np.random.SeedSequence(seed)))
    P = g.random((n_states, n_states)) + 0.05
    P /= P.sum(axis=1, keepdims=True)
    cdf = np.cumsum(P, axis=1)
    cdf[:, -1] = np.maximum(cdf[:, -1], 1.0)
    x0 = g.integers(0, n_states, size=trials).astype(np.int64)
    u = g.random((trials, steps))
    return cdf, x0, u


def _time(fn, *args, repeats=3):
    best = float("inf")
    result = None
    for _ in range(repeats):
        t0 = time.perf_counter()
        result = fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best, result


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--trials", type=int, default=4096)
    ap.add_argument("--steps", type=int, default=500)
    ap.add_argument("--states", type=int, default=8)
    args = ap.parse_args()

    if kernels.backend_name() != "cython":
        print("compiled backend unavailable; benchmarking fallback against itself")
    compiled = kernels
    fallback = _kernels_py

    cdf, x0, u = _inputs(args.states, args.trials, args.steps, seed=0)
    total_steps = args.trials * args.steps

    t_c, paths_c = _time(compiled.chain_paths, cdf, x0, u)
    t_p, paths_p = _time(fallback.chain_paths, cdf, x0, u)
    assert np.array_equal(paths_c, paths_p), "backends disagree"

    tc_c, counts_c = _time(compiled.pair_counts, paths_c, args.states)
    tc_p, counts_p = _time(fallback.pair_counts, paths_p, args.states)
    assert np.array_equal(counts_c, counts_p), "backends disagree"

    print(f"chain_paths  ({args.trials} trials x {args.steps} steps, "
          f"{args.states} states)")
    print(f"  {kernels.backend_name():>7}: {t_c * 1e3:8.2f} ms "
          f"({total_steps / t_c / 1e6:7.1f} Msteps/s)")
    print(f"   python: {t_p * 1e3:8.2f} ms ({total_steps / t_p / 1e6:7.1f} Msteps/s)")
    print(f"  speedup: {t_p / t_c:5.2f}x")
    print("pair_counts")
    print(f"  {kernels.backend_name():>7}: {tc_c * 1e3:8.2f} ms")
    print(f"   python: {tc_p * 1e3:8.2f} ms")
    print(f"  speedup: {tc_p / tc_c:5.2f}x")


if __name__ == "__main__":
    main()
