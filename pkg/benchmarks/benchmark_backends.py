"""Benchmark the compiled accelerator against the pure-numpy fallback.

Times the two hot kernels (Gaussian Gram assembly, pairwise squared distances)
on both backends, plus one end-to-end accelerated sampler step for context.

    python3 benchmarks/benchmark_backends.py [--sizes 250,500,1000,2000]
"""

import argparse
import time

import numpy as np

from steinflow import _accel_np
from steinflow.diagnostics import empirical_moments  # noqa: F401  (warm import)
from steinflow.kernels import GaussianKernel
from steinflow.samplers import ConstantDamping, ParticleEnsemble, SamplerConfig, asvgd_step
from steinflow.targets import GaussianTarget

try:
    from steinflow import _accel

    HAVE_COMPILED = True
except ImportError:
    _accel = None
    HAVE_COMPILED = False


def _time(fn, repeats=5):
    best = np.inf
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def bench_kernels(sizes, d=2, sigma2=0.1):
    rng = np.random.default_rng(0)
    rows = []
    for n in sizes:
        x = np.ascontiguousarray(rng.standard_normal((n, d)))
        t_np_gram = _time(lambda: _accel_np.gram_gaussian(x, sigma2))
        t_np_dist = _time(lambda: _accel_np.pairwise_sq_dists(x))
        if HAVE_COMPILED:
            t_cy_gram = _time(lambda: _accel.gram_gaussian(x, sigma2))
            t_cy_dist = _time(lambda: _accel.pairwise_sq_dists(x))
            k1 = _accel.gram_gaussian(x, sigma2)
            k2 = _accel_np.gram_gaussian(x, sigma2)
            assert np.allclose(k1, k2, rtol=1e-14), "backends disagree"
        else:
            t_cy_gram = t_cy_dist = float("nan")
        rows.append((n, t_np_gram, t_cy_gram, t_np_dist, t_cy_dist))
    return rows


def bench_sampler_step(n=1000, d=2):
    rng = np.random.default_rng(1)
    target = GaussianTarget(b=np.zeros(d), q=np.eye(d))
    cfg = SamplerConfig(kernel=GaussianKernel(0.1), target=target, tau=0.05, eps=0.1,
                        damping=ConstantDamping(0.9))
    ens = ParticleEnsemble.initialize(rng.standard_normal((n, d)))
    ens = asvgd_step(ens, cfg)  # warm up
    return _time(lambda: asvgd_step(ens, cfg), repeats=3)


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--sizes", default="250,500,1000,2000")
    args = parser.parse_args()
    sizes = [int(s) for s in args.sizes.split(",")]

    print(f"compiled backend available: {HAVE_COMPILED}")
    print(f"{'N':>6} | {'gram numpy':>11} | {'gram cython':>11} | {'dists numpy':>11} | {'dists cython':>12} | speedup")
    for n, g_np, g_cy, d_np, d_cy in bench_kernels(sizes):
        speedup = g_np / g_cy if HAVE_COMPILED else float("nan")
        print(f"{n:>6} | {g_np:>9.4f} s | {g_cy:>9.4f} s | {d_np:>9.4f} s | {d_cy:>10.4f} s | {speedup:5.2f}x")
    t_step = bench_sampler_step()
    print(f"\none accelerated Gaussian-kernel step, N=1000 (active backend): {t_step:.4f} s")


if __name__ == "__main__":
    main()
