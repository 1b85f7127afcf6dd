"""Time the compiled stepping kernel against the NumPy/SciPy fallback.

    python3 benchmarks/bench_kernels.py [--steps N] [--repeat R]

Both kernels advance the same pure-drift rFDM system from the same Gaussian
start; the script reports microseconds per implicit step and checks that the
two final states agree.
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from cdfdrift import GaussianPdf, GridSpec, PureDrift, build_initial_cdf
from cdfdrift import _backend
from cdfdrift.scheme import assemble_matrix


def time_kernel(sys, F0, steps, backend, repeat):
    best = np.inf
    F = F0
    for _ in range(repeat):
        F = F0.copy()
        t0 = time.perf_counter()
        _backend.advance(sys.lower, sys.diag, sys.upper, F, steps, backend=backend)
        best = min(best, time.perf_counter() - t0)
    return best / steps * 1e6, F


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--steps", type=int, default=2000)
    p.add_argument("--repeat", type=int, default=3)
    p.add_argument("--grids", type=int, nargs="+", default=[100, 400, 1600, 6400])
    args = p.parse_args(argv)

    backends = ["python"] + (["cython"] if _backend.BACKEND == "cython" else [])
    print(f"{'K':>6} " + " ".join(f"{b + ' us/step':>16}" for b in backends) + f" {'speedup':>8} {'max diff':>9}")
    for K in args.grids:
        g = GridSpec(K)
        sys = assemble_matrix(PureDrift(), g, 1e-4)
        F0 = build_initial_cdf(GaussianPdf(0.7, 0.01), g).F
        res = {b: time_kernel(sys, F0, args.steps, b, args.repeat) for b in backends}
        cols = " ".join(f"{res[b][0]:16.2f}" for b in backends)
        if len(backends) == 2:
            speed = res["python"][0] / res["cython"][0]
            diff = float(np.max(np.abs(res["python"][1] - res["cython"][1])))
            print(f"{K:>6} {cols} {speed:8.1f} {diff:9.1e}")
        else:
            print(f"{K:>6} {cols}  (compiled kernel not built)")


if __name__ == "__main__":
    main()
