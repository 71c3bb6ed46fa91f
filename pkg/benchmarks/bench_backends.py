#!/usr/bin/env python3
"""Compare the compiled kernels against the pure-Python fallback.

Runs the three hot loops on identical inputs through both backends, checks
the outputs match bit for bit, and prints per-kernel timings::

    python benchmarks/bench_backends.py [--accesses N] [--repeat K]
"""

import argparse
import sys
import time
from pathlib import Path

import numpy as np

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))

from wsskit._kernels import pyfallback  # noqa: E402


def best_of(repeat, fn, *args):
    best = float("inf")
    out = None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best, out


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--accesses", type=int, default=2_000_000)
    parser.add_argument("--repeat", type=int, default=3)
    args = parser.parse_args()

    try:
        from wsskit._kernels import _core
    except ImportError:
        print("compiled backend not built; run: python setup.py build_ext --inplace")
        return 1

    rng = np.random.default_rng(0)
    n = args.accesses
    n_pages = 4096
    pages = rng.integers(0, n_pages, n).astype(np.int64)
    times = np.cumsum(rng.integers(1, 20, n)).astype(np.uint64)
    m = 2000
    ends = np.sort(rng.choice(times, m, replace=False)).astype(np.uint64)
    starts = np.maximum.accumulate(
        np.maximum(ends.astype(np.int64) - 100_000, 0)
    ).astype(np.uint64)
    binned = rng.integers(0, 255, n).astype(np.uint8)
    grads = rng.standard_normal(n)

    cases = [
        ("lru_sim_flush", (pages, 2048, 100)),
        ("window_distinct", (times, pages, n_pages, starts, ends)),
        ("hist_build", (binned, grads, 255)),
    ]
    print(f"{n:,} accesses, best of {args.repeat}\n")
    print(f"{'kernel':<16} {'compiled':>12} {'python':>12} {'speedup':>9}")
    for name, call_args in cases:
        t_c, out_c = best_of(args.repeat, getattr(_core, name), *call_args)
        t_p, out_p = best_of(args.repeat, getattr(pyfallback, name), *call_args)
        flat_c = out_c if isinstance(out_c, np.ndarray) else np.concatenate(
            [np.atleast_1d(np.asarray(o, dtype=np.float64)) for o in out_c]
        )
        flat_p = out_p if isinstance(out_p, np.ndarray) else np.concatenate(
            [np.atleast_1d(np.asarray(o, dtype=np.float64)) for o in out_p]
        )
        assert np.array_equal(flat_c, flat_p), f"{name}: backend outputs differ"
        print(f"{name:<16} {t_c*1e3:>10.1f}ms {t_p*1e3:>10.1f}ms {t_p/t_c:>8.1f}x")
    return 0


if __name__ == "__main__":
    sys.exit(main())
