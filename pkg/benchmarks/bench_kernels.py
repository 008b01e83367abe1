"""Compiled vs pure-Python kernels on the workloads the audits and the ultrametric builder use.

    python3 benchmarks/bench_kernels.py [--repeat 3]
"""
import argparse
import time

import numpy as np

from avoidset import _pykernels as py
from avoidset import kernels


def _time(fn, repeat):
    best = float("inf")
    for _ in range(repeat):
        t = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t)
    return best


def workloads():
    rng = np.random.default_rng(0)
    xs = list(range(-300, 301))
    nums = list(range(-256, 257))
    polys = rng.integers(0, 3, size=(243, 6)).tolist()
    coeffs = [[1, 0, 0, 0, 0, 0], [1, 0, 0, 0, 0, 0], [1, 0, 0, 0, 0, 0]]
    exps = [[1, 0, 0], [0, 1, 0], [0, 0, 1]]
    pts = rng.integers(0, 3, size=(20000, 3, 6)).astype(np.int64)
    return [
        ("int_pair_excess", "int_pair_excess", (xs, 3)),
        ("dyadic_pair_excess", "dyadic_pair_excess", (nums, 8)),
        ("fp_pair_excess", "fp_pair_excess", (polys, 3)),
        ("fp_poly_valuations", "fp_poly_valuations", (coeffs, exps, pts, 3, 6)),
    ]


def main(argv=None):
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args(argv)
    cy = kernels.compiled_backend
    print(f"{'kernel':<22}{'python s':>12}{'cython s':>12}{'speedup':>10}")
    for label, name, a in workloads():
        tp = _time(lambda: getattr(py, name)(*a), args.repeat)
        if cy is None:
            print(f"{label:<22}{tp:>12.4f}{'-':>12}{'-':>10}")
            continue
        tc = _time(lambda: getattr(cy, name)(*a), args.repeat)
        r1 = getattr(py, name)(*a)
        r2 = getattr(cy, name)(*a)
        same = np.array_equal(np.asarray(r1), np.asarray(r2))
        print(f"{label:<22}{tp:>12.4f}{tc:>12.4f}{tp / tc:>9.1f}x{'' if same else '  MISMATCH'}")


if __name__ == "__main__":
    main()
