#!/usr/bin/env python3
"""Benchmark the compiled kernels against the pure-numpy fallback.

Two hot paths are timed: the dense window iteration that accumulates the
renewal measure, and blockwise Monte Carlo trajectory stepping.  Both
backends consume identical uniforms and accumulate in identical order, so
results are also checked for agreement.

Usage: python benchmarks/bench_backends.py [--quick]
"""

import argparse
import time

import numpy as np

from renewalab import ChainSpec, build_chain, estimate_renewal, renewal_measure
from renewalab._kernels import COMPILED_BACKEND, PYTHON_BACKEND


def _time(fn, repeats=1):
    best = float("inf")
    result = None
    for _ in range(repeats):
        t0 = time.perf_counter()
        result = fn()
        best = min(best, time.perf_counter() - t0)
    return best, result


def bench_window(backend, hi, tol):
    kernel = build_chain(ChainSpec("counterexample"))
    return renewal_measure(kernel, 0, (0, hi), stop_tol=tol, backend=backend)


def bench_mc(backend, n_traj, horizon):
    kernel = build_chain(ChainSpec("three_branch", {"p": 0.5}))
    return estimate_renewal(
        kernel, 0, [(50.0, 1.0), (100.0, 1.0)],
        horizon=horizon, n_traj=n_traj, master_seed=2024, backend=backend,
    )


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--quick", action="store_true", help="smaller workloads")
    args = ap.parse_args()

    hi = 2**10 + 64 if args.quick else 2**13 + 64
    tol = 1e-8 if args.quick else 1e-10
    n_traj = 4000 if args.quick else 20000
    horizon = 200 if args.quick else 500

    backends = [("python", PYTHON_BACKEND)]
    if COMPILED_BACKEND is not None:
        backends.append(("compiled", COMPILED_BACKEND))
    else:
        print("compiled backend not built; timing the fallback only")

    print(f"window iteration: counterexample chain on [0, {hi}], stop_tol={tol:g}")
    window_results = {}
    for name, be in backends:
        secs, measure = _time(lambda be=be: bench_window(be, hi, tol))
        window_results[name] = measure
        print(f"  {name:9s} {secs:8.3f} s   ({measure.iterations_used} iterations)")
    if len(window_results) == 2:
        a, b = window_results["python"].masses, window_results["compiled"].masses
        print(f"  max |python - compiled| = {np.max(np.abs(a - b)):.3e}")

    print(f"monte carlo: three_branch(0.5), {n_traj} trajectories x {horizon} steps")
    mc_results = {}
    for name, be in backends:
        secs, ests = _time(lambda be=be: bench_mc(be, n_traj, horizon))
        mc_results[name] = ests
        vals = ", ".join(f"{e.value:.4f}" for e in ests)
        print(f"  {name:9s} {secs:8.3f} s   (estimates: {vals})")
    if len(mc_results) == 2:
        diffs = [
            abs(x.value - y.value)
            for x, y in zip(mc_results["python"], mc_results["compiled"])
        ]
        print(f"  max |python - compiled| = {max(diffs):.3e}")


if __name__ == "__main__":
    import warnings

    warnings.filterwarnings("ignore")  # horizon warnings are irrelevant to timing
    main()
