"""Compare the numba and numpy walker kernels.

    python benchmarks/bench_kernels.py [--paths 20000] [--t-end 0.5] [--threads N]

Both backends run the same walkers with the same counter-based noise; the
script reports steps per second and the largest difference between the
final states (rounding-level, since the two compute the same arithmetic).
"""
import argparse
import math
import os
import time

import numpy as np

from hirschlab.circle import GFunction
from hirschlab.diffusion import DiffusionConfig, EnsembleState, first_exit, run_ensemble
from hirschlab.foliation import MetricFamily
from hirschlab.pants import ChartPoint, PantsShape


def timed(backend, fn):
    os.environ["HIRSCHLAB_BACKEND"] = backend
    t0 = time.perf_counter()
    out = fn()
    return out, time.perf_counter() - t0


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--paths", type=int, default=20_000)
    ap.add_argument("--t-end", type=float, default=0.5)
    ap.add_argument("--dt", type=float, default=1e-3)
    ap.add_argument("--threads", type=int, default=None)
    args = ap.parse_args()

    fam = MetricFamily(GFunction.sine(0.3))
    rng = np.random.default_rng(0)
    n = args.paths
    start = EnsembleState.from_arrays(rng.random(n), rng.integers(0, 2, n), rng.random(n),
                                      rng.random(n) * 0.28)
    cfg = DiffusionConfig(args.dt, args.t_end, 1)
    steps = n * math.ceil(args.t_end / args.dt)

    # compile outside the timed region
    small = EnsembleState.from_arrays(start.z[:2], start.chart[:2], start.u[:2], start.v[:2])
    timed("numba", lambda: run_ensemble(fam, small, cfg, threads=args.threads))

    print(f"foliated walk: {n} paths x {steps // n} steps")
    results = {}
    for backend in ("numba", "numpy"):
        res, sec = timed(backend, lambda: run_ensemble(fam, start, cfg, threads=args.threads))
        results[backend] = res
        print(f"  {backend:6s} {sec:8.2f} s   {steps / sec / 1e6:7.2f} M steps/s")
    diff = np.max(np.abs(results["numba"].state.v - results["numpy"].state.v))
    same = np.mean(results["numba"].state.z == results["numpy"].state.z)
    print(f"  identical z on {100 * same:.1f}% of paths, max |dv| {diff:.1e}")

    shape = PantsShape(math.log(2), math.log(2))
    p = ChartPoint.cyl(1, 0.0, shape.L1 / 2)
    timed("numba", lambda: first_exit(shape, p, 2, args.dt, 1))
    print(f"first exit: {n} paths")
    for backend in ("numba", "numpy"):
        res, sec = timed(backend, lambda: first_exit(shape, p, n, args.dt, 1, threads=args.threads))
        print(f"  {backend:6s} {sec:8.2f} s   mean phi(exit) {res.mean_phi():.5f}")


if __name__ == "__main__":
    main()
