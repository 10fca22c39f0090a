"""Compare the compiled and pure-Python plane-search kernels.

    python3 benchmarks/bench_kernels.py [--operators 20] [--samples 1000] [--repeat 3]

Times ``kperp_extremes_search`` (random scan + refinement of both extremes)
on seeded random curvature operators with each backend, and checks the two
agree on the extremes.
"""

import argparse
import time

import numpy as np

from curv4 import kernels
from curv4.biortho import kperp_extremes_closed, kperp_extremes_search
from curv4.curvspec import random_curvature, spectra


def bench(backend, ops, samples, sweeps, repeat):
    best = float("inf")
    values = None
    for _ in range(repeat):
        start = time.perf_counter()
        values = [kperp_extremes_search(op, samples, sweeps, seed=k, backend=backend) for k, op in enumerate(ops)]
        best = min(best, time.perf_counter() - start)
    return best, np.array([[v.kperp1, v.kperp3] for v in values])


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--operators", type=int, default=20)
    ap.add_argument("--samples", type=int, default=1000)
    ap.add_argument("--sweeps", type=int, default=50)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args(argv)

    ops = [random_curvature(seed) for seed in range(args.operators)]
    closed = np.array([[e.kperp1, e.kperp3] for e in (kperp_extremes_closed(spectra(op), False) for op in ops)])
    rows = [("python", kernels.python_backend)]
    if kernels.compiled_backend is not None:
        rows.append(("cython", kernels.compiled_backend))
    else:
        print("compiled kernels not available; timing the fallback only")

    timings = {}
    results = {}
    print(f"{args.operators} operators, {args.samples} samples, {args.sweeps} sweeps, best of {args.repeat}")
    print(f"{'backend':>8} {'total s':>9} {'ms/op':>8} {'max gap':>10}")
    for name, backend in rows:
        t, vals = bench(backend, ops, args.samples, args.sweeps, args.repeat)
        timings[name] = t
        results[name] = vals
        gap = float(np.abs(vals - closed).max())
        print(f"{name:>8} {t:9.3f} {1e3 * t / len(ops):8.2f} {gap:10.2e}")
    if len(rows) == 2:
        diff = float(np.abs(results["python"] - results["cython"]).max())
        print(f"speedup {timings['python'] / timings['cython']:.1f}x, backend disagreement {diff:.2e}")


if __name__ == "__main__":
    main()
