"""Kernel backends against brute-force oracles and against each other."""

import numpy as np
import pytest

from wsskit._kernels import pyfallback

try:
    from wsskit._kernels import _core
except ImportError:
    _core = None

BACKENDS = [pyfallback] + ([_core] if _core is not None else [])


def brute_lru_replay(pages, capacity, threshold):
    """Straight list-based LRU replay; the oracle the kernels must match."""
    stack = []  # most recent last
    counter = 0
    faults = 0
    flushes = []
    for i, page in enumerate(pages):
        if page in stack:
            stack.remove(page)
            stack.append(page)
        else:
            faults += 1
            counter += 1
            if capacity > 0 and len(stack) >= capacity:
                stack.pop(0)
            stack.append(page)
            if counter >= threshold:
                flushes.append(i)
                counter = 0
    return flushes, faults


def brute_window_distinct(times, pages, start, end):
    return len({p for t, p in zip(times, pages) if start < t <= end})


@pytest.mark.parametrize("kernels", BACKENDS, ids=lambda m: m.BACKEND)
def test_lru_matches_brute_force(kernels):
    rng = np.random.default_rng(7)
    for _ in range(25):
        n = int(rng.integers(1, 800))
        n_pages = int(rng.integers(1, 20))
        pages = rng.integers(0, n_pages, n).astype(np.int64)
        capacity = int(rng.integers(0, n_pages + 2))
        threshold = int(rng.integers(1, 10))
        flush_idx, faults = kernels.lru_sim_flush(pages, capacity, threshold)
        exp_flush, exp_faults = brute_lru_replay(pages.tolist(), capacity, threshold)
        assert faults == exp_faults
        assert flush_idx.tolist() == exp_flush


@pytest.mark.parametrize("kernels", BACKENDS, ids=lambda m: m.BACKEND)
def test_lru_cyclic_thrash(kernels):
    # 4-page cyclic sweep through 3 frames: every access faults after warmup.
    pages = np.tile(np.arange(4, dtype=np.int64), 50)
    _, faults = kernels.lru_sim_flush(pages, 3, 1_000_000)
    assert faults == len(pages)


@pytest.mark.parametrize("kernels", BACKENDS, ids=lambda m: m.BACKEND)
def test_lru_capacity_at_least_footprint(kernels):
    pages = np.tile(np.arange(4, dtype=np.int64), 50)
    for capacity in (0, 4, 5, 100):
        _, faults = kernels.lru_sim_flush(pages, capacity, 10)
        assert faults == 4


@pytest.mark.parametrize("kernels", BACKENDS, ids=lambda m: m.BACKEND)
def test_window_distinct_matches_brute_force(kernels):
    rng = np.random.default_rng(11)
    for _ in range(25):
        n = int(rng.integers(1, 600))
        n_pages = int(rng.integers(1, 30))
        times = np.sort(rng.integers(0, 5000, n)).astype(np.uint64)
        pages = rng.integers(0, n_pages, n).astype(np.int64)
        m = int(rng.integers(1, 40))
        ends = np.sort(rng.integers(0, 5000, m)).astype(np.uint64)
        starts = np.maximum.accumulate(
            np.maximum(ends.astype(np.int64) - rng.integers(1, 1000, m), 0)
        ).astype(np.uint64)
        got = kernels.window_distinct(times, pages, n_pages, starts, ends)
        expected = [
            brute_window_distinct(times.tolist(), pages.tolist(), int(s), int(e))
            for s, e in zip(starts, ends)
        ]
        assert got.tolist() == expected


@pytest.mark.parametrize("kernels", BACKENDS, ids=lambda m: m.BACKEND)
def test_hist_build_matches_brute_force(kernels):
    rng = np.random.default_rng(3)
    n_bins = 16
    binned = rng.integers(0, n_bins, 100).astype(np.uint8)
    grads = rng.standard_normal(100)
    counts, sums = kernels.hist_build(binned, grads, n_bins)
    exp_counts = np.zeros(n_bins, dtype=np.int64)
    exp_sums = np.zeros(n_bins)
    for b, g in zip(binned, grads):
        exp_counts[b] += 1
        exp_sums[b] += g
    assert counts.tolist() == exp_counts.tolist()
    assert np.array_equal(sums, exp_sums)


@pytest.mark.skipif(_core is None, reason="compiled kernels not built")
def test_backends_bit_identical():
    rng = np.random.default_rng(99)
    for _ in range(20):
        n = int(rng.integers(1, 2000))
        n_pages = int(rng.integers(1, 64))
        pages = rng.integers(0, n_pages, n).astype(np.int64)
        cap = int(rng.integers(0, n_pages + 2))
        thr = int(rng.integers(1, 20))
        a = _core.lru_sim_flush(pages, cap, thr)
        b = pyfallback.lru_sim_flush(pages, cap, thr)
        assert a[1] == b[1] and np.array_equal(a[0], b[0])

        nb = int(rng.integers(2, 256))
        binned = rng.integers(0, nb, n).astype(np.uint8)
        grads = rng.standard_normal(n)
        ca, sa = _core.hist_build(binned, grads, nb)
        cb, sb = pyfallback.hist_build(binned, grads, nb)
        assert np.array_equal(ca, cb)
        # bit-identical float accumulation, not merely approximate
        assert np.array_equal(sa, sb)
