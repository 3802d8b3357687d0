"""Benchmark the compiled kernels against the numpy fallback.

Run from the repository root after installing the package:

    python benchmarks/bench_kernels.py [--samples 1000000] [--atoms 100000]

Times the four hot kernels on synthetic workloads and prints one row per
kernel with both backends and the speedup.  The compiled backend must be
importable for a comparison; otherwise only the fallback is timed.
"""

from __future__ import annotations

import argparse
import timeit

import numpy as np
from numpy.random import PCG64, Generator

from riskalloc._kernels import _numpy as numpy_impl

try:
    from riskalloc._kernels import _native as native_impl
except ImportError:
    native_impl = None


def _time(fn, repeats: int = 5) -> float:
    best = min(timeit.repeat(fn, number=1, repeat=repeats))
    return best


def _workloads(samples: int, atoms: int, stages: int, m: int):
    rng = Generator(PCG64(42))
    returns = rng.uniform(0.2, 3.0, size=(atoms, m))
    probs = rng.random(atoms)
    probs /= probs.sum()
    weights = np.full(m, 1.0 / m)
    uniforms = rng.random((samples, stages))
    stage_probs = np.array([0.5, 0.3, 0.2])
    cdf = np.cumsum(stage_probs)
    cdf[-1] = 1.0
    gross = rng.uniform(0.5, 1.5, size=(3, m))
    mc_returns = rng.uniform(0.2, 3.0, size=(samples, m))
    return {
        "atom_moments": (np.ascontiguousarray(returns), probs, weights),
        "discrete_paths": (uniforms, cdf, np.ascontiguousarray(gross)),
        "uniform_paths": (uniforms, 2.0),
        "log_growth_sums": (np.ascontiguousarray(mc_returns), weights),
    }


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--samples", type=int, default=1_000_000)
    parser.add_argument("--atoms", type=int, default=100_000)
    parser.add_argument("--stages", type=int, default=5)
    parser.add_argument("--alternatives", type=int, default=3)
    args = parser.parse_args()

    work = _workloads(args.samples, args.atoms, args.stages, args.alternatives)
    print(f"samples={args.samples} atoms={args.atoms} stages={args.stages} m={args.alternatives}")
    header = f"{'kernel':<18} {'numpy (ms)':>12} {'native (ms)':>12} {'speedup':>9}"
    print(header)
    print("-" * len(header))
    for name, payload in work.items():
        t_numpy = _time(lambda: getattr(numpy_impl, name)(*payload)) * 1e3
        if native_impl is None:
            print(f"{name:<18} {t_numpy:>12.2f} {'n/a':>12} {'n/a':>9}")
            continue
        t_native = _time(lambda: getattr(native_impl, name)(*payload)) * 1e3
        print(f"{name:<18} {t_numpy:>12.2f} {t_native:>12.2f} {t_numpy / t_native:>8.2f}x")
    if native_impl is None:
        print("compiled backend unavailable; build the extension to compare")


if __name__ == "__main__":
    main()
