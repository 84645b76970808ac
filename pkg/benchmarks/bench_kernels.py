#!/usr/bin/env python3
"""Benchmark the numba kernels against the pure-numpy fallback.

Times the fixed-point continuation solver on a dense density grid and the
cubic branch tracker, for both execution paths.  Run after an editable
install:

    python3 benchmarks/bench_kernels.py [--points 4001] [--repeats 3]
"""

import argparse
import time

import numpy as np

from wignersource import _kernels
from wignersource.measure import make_measure


def _time(fn, repeats):
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--points", type=int, default=4001)
    ap.add_argument("--repeats", type=int, default=3)
    args = ap.parse_args()

    measure = make_measure([(-2.0, 0.5), (2.0, 0.5)])
    locs, wts = measure.locations, measure.weights
    grid = np.linspace(-6, 6, args.points)
    zs = grid + 1e-6j
    xs = grid

    rows = []
    if _kernels.HAVE_NUMBA:
        _kernels.pastur_batch_numba(locs, wts, zs[:8])  # compile outside the timing
        _kernels.cubic_branch_batch_numba(xs[:8], 2.0, 1e-8, 3000.0)
        t = _time(lambda: _kernels.pastur_batch_numba(locs, wts, zs), args.repeats)
        rows.append(("pastur continuation", "numba", t))
        t = _time(lambda: _kernels.cubic_branch_batch_numba(xs, 2.0, 1e-8, 3000.0), args.repeats)
        rows.append(("cubic branch tracking", "numba", t))
    else:
        print("numba unavailable or disabled (WIGNERSOURCE_NUMBA=0); timing numpy only")

    t = _time(lambda: _kernels.pastur_batch_numpy(locs, wts, zs), args.repeats)
    rows.append(("pastur continuation", "numpy", t))
    t = _time(lambda: _kernels.cubic_branch_batch_numpy(xs, 2.0, 1e-8, 3000.0), args.repeats)
    rows.append(("cubic branch tracking", "numpy", t))

    print(f"\n{args.points} grid points, best of {args.repeats}:")
    print(f"{'kernel':<24} {'path':<7} {'seconds':>9}")
    for name, path, t in rows:
        print(f"{name:<24} {path:<7} {t:>9.4f}")
    for name in {r[0] for r in rows}:
        times = {path: t for n2, path, t in rows if n2 == name}
        if "numba" in times and "numpy" in times:
            print(f"{name}: numba speedup x{times['numpy'] / times['numba']:.1f}")

    ma, _, _ = _kernels.pastur_batch(locs, wts, zs[:: args.points // 50])
    mb, _, _ = _kernels.pastur_batch_numpy(locs, wts, zs[:: args.points // 50])
    print(f"path agreement (sampled): max |diff| = {np.max(np.abs(ma - mb)):.3e}")


if __name__ == "__main__":
    main()
