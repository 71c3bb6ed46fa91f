"""Pure-Python kernels, used when the compiled extension is unavailable.

Every function here must be observationally identical to its counterpart in
``_core.pyx``: same results bit for bit, including floating-point accumulation
order. Keep loops sequential and in ascending index order.
"""

from __future__ import annotations

from collections import OrderedDict

import numpy as np

BACKEND = "python"


def lru_sim_flush(pages, capacity, threshold):
    """Replay a dense-page access stream through an LRU-managed resident set.

    A fault occurs on first touch of a non-resident page; with a finite
    ``capacity`` the least-recently-used page is evicted on overflow. Every
    ``threshold`` faults a flush is recorded at the triggering access.

    Returns ``(flush_indices, fault_total)`` where ``flush_indices`` are
    positions into the access arrays.
    """
    resident: OrderedDict[int, None] = OrderedDict()
    counter = 0
    fault_total = 0
    flush_idx = []
    cap = int(capacity)
    thr = int(threshold)
    for i, page in enumerate(np.asarray(pages).tolist()):
        if page in resident:
            resident.move_to_end(page)
        else:
            fault_total += 1
            counter += 1
            if cap > 0 and len(resident) >= cap:
                resident.popitem(last=False)
            resident[page] = None
            if counter >= thr:
                flush_idx.append(i)
                counter = 0
    return np.asarray(flush_idx, dtype=np.int64), fault_total


def window_distinct(times, pages, n_pages, starts, ends):
    """Distinct-page counts over half-open time windows ``(start, end]``.

    ``times`` must be non-decreasing and aligned with ``pages`` (dense ids in
    ``[0, n_pages)``); ``starts`` and ``ends`` must each be non-decreasing so
    a single two-pointer sweep covers all queries.
    """
    times = np.asarray(times).tolist()
    pages = np.asarray(pages).tolist()
    m = len(starts)
    out = np.zeros(m, dtype=np.int64)
    counts = [0] * int(n_pages)
    n = len(times)
    lo = 0  # first access index with times > start
    hi = 0  # first access index with times > end
    distinct = 0
    for q in range(m):
        end = ends[q]
        start = starts[q]
        while hi < n and times[hi] <= end:
            p = pages[hi]
            if counts[p] == 0:
                distinct += 1
            counts[p] += 1
            hi += 1
        while lo < hi and times[lo] <= start:
            p = pages[lo]
            counts[p] -= 1
            if counts[p] == 0:
                distinct -= 1
            lo += 1
        out[q] = distinct
    return out


def hist_build(binned, grads, n_bins):
    """Per-bin sample counts and gradient sums, accumulated in row order.

    np.bincount adds weights sequentially in input order, which matches the
    compiled kernel's loop exactly, so the sums agree bit for bit.
    """
    binned = np.asarray(binned)
    counts = np.bincount(binned, minlength=n_bins).astype(np.int64)
    sums = np.bincount(binned, weights=grads, minlength=n_bins)
    return counts, sums
