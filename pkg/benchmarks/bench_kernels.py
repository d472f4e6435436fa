"""Compare the compiled kernels with the numpy fallbacks.

Run with ``python3 benchmarks/bench_kernels.py``. Both backends are
imported directly, so the ``MERAMSC_PURE_PYTHON`` switch is irrelevant here.
"""
from __future__ import annotations

import argparse
import timeit

import numpy as np

from meramsc import _kernels_py as py

try:
    from meramsc import _ckernels as cy
except ImportError:
    cy = None


def cases(n: int, rng: np.random.Generator):
    x = np.ascontiguousarray(rng.standard_normal((n, 8)))
    centers = np.ascontiguousarray(rng.standard_normal((6, 8)))
    labels = rng.integers(0, 6, size=n).astype(np.int64)
    d = np.asfortranarray(rng.standard_normal((60, n)))
    a = rng.integers(0, 6, size=n).astype(np.int64)
    b = rng.integers(0, 6, size=n).astype(np.int64)
    return {
        "kmeans_assign": lambda m: m.kmeans_assign(x, centers),
        "kmeans_update": lambda m: m.kmeans_update(x, labels, 6),
        "l21_shrink": lambda m: m.l21_shrink(d, 2.0),
        "contingency": lambda m: m.contingency(a, b, 6, 6),
    }


def main(argv=None) -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--n", type=int, default=20000)
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args(argv)
    rng = np.random.default_rng(0)
    print(f"{'kernel':<15s}{'numpy ms':>11s}{'cython ms':>11s}{'speedup':>9s}")
    for name, fn in cases(args.n, rng).items():
        t_py = min(timeit.repeat(lambda: fn(py), number=1, repeat=args.repeat)) * 1e3
        if cy is None:
            print(f"{name:<15s}{t_py:11.3f}{'n/a':>11s}{'':>9s}")
            continue
        t_cy = min(timeit.repeat(lambda: fn(cy), number=1, repeat=args.repeat)) * 1e3
        print(f"{name:<15s}{t_py:11.3f}{t_cy:11.3f}{t_py / t_cy:8.1f}x")


if __name__ == "__main__":
    main()
