"""Benchmark the numba kernel lane against the pure-numpy fallback.

Run:

    python benchmarks/bench_backends.py

The kernel section compares the dispatched kernels (numba when available)
against their ``*_np`` twins in one process.  The sweep section re-runs the
same end-to-end workload in a subprocess with ``NLSTHERMO_BACKEND=numpy`` so
the whole-pipeline effect, including dispatch overhead on the small matrices
this package actually handles, is visible.
"""

import os
import subprocess
import sys
import time

import numpy as np

from nlsthermo import _kernels as k
from nlsthermo import random_gibbs_instance, spin1_gibbs_matrix
from nlsthermo.cli import sweep_records

REPEATS = 2000


def timed(func, args, repeats=REPEATS):
    func(*args)  # warm both lanes: trigger JIT, touch caches
    start = time.perf_counter()
    for _ in range(repeats):
        func(*args)
    return (time.perf_counter() - start) / repeats


def kernel_cases(n):
    rng = np.random.default_rng(n)
    t = rng.uniform(size=(n, n))
    t /= t.sum(axis=0)
    p = rng.uniform(0.05, 1.0, size=n)
    p /= p.sum()
    p0 = rng.uniform(0.05, 1.0, size=n)
    p0 /= p0.sum()
    e = rng.normal(size=n)
    joint = t * p[None, :]
    d = np.ones(n)
    vecs = np.linalg.eigh(0.5 * (t + t.T))[1]
    return [
        ("expectation_sum", k.expectation_sum, k.expectation_sum_np, (joint, t)),
        ("entropy_sum", k.entropy_sum, k.entropy_sum_np, (p, d)),
        ("kl_sum", k.kl_sum, k.kl_sum_np, (p, p0)),
        ("j_heat_sum", k.j_heat_sum, k.j_heat_sum_np, (t, np.log(p), e, 1.7)),
        ("general_j_sum", k.general_j_sum, k.general_j_sum_np,
         (t, p, p0, p, t @ p0)),
        ("slope_direct_sum", k.slope_direct_sum, k.slope_direct_sum_np,
         (t, p0, e)),
        ("slope_symmetrized_sum", k.slope_symmetrized_sum,
         k.slope_symmetrized_sum_np, (t, p0, e)),
        ("projector_mixture", k.projector_mixture, k.projector_mixture_np,
         (vecs,)),
        ("lerch_series", k.lerch_series, k.lerch_series_np, (0.6, 2.0, 1.5)),
    ]


def bench_kernels():
    print(f"active backend: {k.BACKEND}")
    if k.BACKEND != "numba":
        print("numba lane inactive; kernel comparison would be numpy vs numpy\n")
        return
    for n in (4, 16, 64):
        print(f"\nkernels at N = {n}  (per call, microseconds)")
        print(f"  {'kernel':<24} {'numba':>10} {'numpy':>10} {'speedup':>8}")
        for name, fast, slow, args in kernel_cases(n):
            t_fast = timed(fast, args) * 1e6
            t_slow = timed(slow, args) * 1e6
            print(f"  {name:<24} {t_fast:>10.2f} {t_slow:>10.2f} "
                  f"{t_slow / t_fast:>7.1f}x")


def composite_sweep():
    betas = np.linspace(-10.0, 10.0, 201)
    instances = [random_gibbs_instance(8, seed).gibbs() for seed in range(20)]
    spin = spin1_gibbs_matrix(1.0)
    for g in instances:
        sweep_records(g, betas)  # warm
        break
    start = time.perf_counter()
    for g in instances:
        sweep_records(g, betas)
    sweep_records(spin, betas)
    return time.perf_counter() - start


def main():
    if "--composite-only" in sys.argv:
        print(f"{composite_sweep():.3f}")
        return
    bench_kernels()
    here = time.perf_counter()
    elapsed = composite_sweep()
    print(f"\ncomposite sweep workload (21 instances x 201 beta grid)")
    print(f"  {k.BACKEND:<8} {elapsed * 1e3:10.1f} ms")
    env = dict(os.environ, NLSTHERMO_BACKEND="numpy")
    result = subprocess.run(
        [sys.executable, __file__, "--composite-only"],
        capture_output=True, text=True, env=env)
    if result.returncode == 0:
        other = float(result.stdout.strip().splitlines()[-1])
        print(f"  {'numpy':<8} {other * 1e3:10.1f} ms "
              f"({other / elapsed:.2f}x the {k.BACKEND} lane)")
    else:
        print(f"  numpy-lane subprocess failed: {result.stderr}")
    _ = here


if __name__ == "__main__":
    main()
