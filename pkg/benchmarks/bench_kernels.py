"""Compare the numba kernels with the pure-numpy fallback.

    python benchmarks/bench_kernels.py [--repeat 5]

Times the RK4 segment integrator and the vectorised sawtooth on both paths
in-process, then an end-to-end rk4 simulation of the vanishing-input run
under each backend in a fresh interpreter (the env flag is read at import).
"""
import argparse
import os
import subprocess
import sys
import timeit

import numpy as np

from impulsive import _kernels

E2E = (
    "import time; from impulsive.verify import run_cics_violation;"
    "run_cics_violation(3, engine='rk4');"
    "t = time.perf_counter(); run_cics_violation(8, engine='rk4'); print(time.perf_counter() - t)"
)


def best(fn, repeat):
    return min(timeit.repeat(fn, number=1, repeat=repeat))


def end_to_end(no_numba: bool) -> float:
    env = dict(os.environ)
    if no_numba:
        env["IMPULSIVE_NO_NUMBA"] = "1"
    else:
        env.pop("IMPULSIVE_NO_NUMBA", None)
    out = subprocess.run([sys.executable, "-c", E2E], env=env, capture_output=True, text=True, check=True)
    return float(out.stdout.strip())


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    if not _kernels.HAS_NUMBA:
        print("numba unavailable; only the numpy path can be timed")

    rows = []
    for length in (0.01, 1.0, 20.0):
        np_t = best(lambda: _kernels._rk4_affine_numpy(0.7, 0.3, 1.0, length, 1e-3), args.repeat)
        row = [f"rk4_affine L={length:g}", np_t]
        if _kernels.HAS_NUMBA:
            _kernels._rk4_affine_numba(0.7, 0.3, 1.0, length, 1e-3)
            row.append(best(lambda: _kernels._rk4_affine_numba(0.7, 0.3, 1.0, length, 1e-3), args.repeat))
        rows.append(row)
    rs = np.logspace(-8, 0.5, 200_000)
    row = ["bar_h_array n=2e5", best(lambda: _kernels._bar_h_numpy(rs), args.repeat)]
    if _kernels.HAS_NUMBA:
        _kernels._bar_h_numba(rs)
        row.append(best(lambda: _kernels._bar_h_numba(rs), args.repeat))
    rows.append(row)
    row = ["simulate rk4, 8 bursts", end_to_end(True)]
    if _kernels.HAS_NUMBA:
        row.append(end_to_end(False))
    rows.append(row)

    print(f"{'case':28s} {'numpy [s]':>12s} {'numba [s]':>12s} {'speedup':>8s}")
    for name, np_t, *nb in rows:
        if nb:
            print(f"{name:28s} {np_t:12.6f} {nb[0]:12.6f} {np_t / nb[0]:8.1f}")
        else:
            print(f"{name:28s} {np_t:12.6f} {'-':>12s} {'-':>8s}")


if __name__ == "__main__":
    main()
