# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernels for the hot loops.

Mirrors ``pyfallback`` exactly; see that module for the contracts. Loops run
in ascending index order so floating-point accumulation matches the fallback
bit for bit.
"""

from libc.stdint cimport int64_t, uint64_t, uint8_t
from libc.stdlib cimport free, malloc

import numpy as np

BACKEND = "compiled"


def lru_sim_flush(const int64_t[::1] pages, capacity, threshold):
    cdef Py_ssize_t n = pages.shape[0]
    cdef int64_t cap = capacity
    cdef int64_t thr = threshold
    cdef int64_t n_pages = 0
    cdef Py_ssize_t i
    for i in range(n):
        if pages[i] + 1 > n_pages:
            n_pages = pages[i] + 1

    cdef int64_t *nxt = <int64_t *> malloc(n_pages * sizeof(int64_t))
    cdef int64_t *prv = <int64_t *> malloc(n_pages * sizeof(int64_t))
    cdef uint8_t *resident = <uint8_t *> malloc(n_pages * sizeof(uint8_t))
    if nxt == NULL or prv == NULL or resident == NULL:
        free(nxt); free(prv); free(resident)
        raise MemoryError()
    for i in range(n_pages):
        resident[i] = 0

    # Doubly linked recency list: head = most recent, tail = LRU victim.
    cdef int64_t head = -1
    cdef int64_t tail = -1
    cdef int64_t n_resident = 0
    cdef int64_t counter = 0
    cdef int64_t fault_total = 0
    cdef int64_t page, victim
    flush_out = np.empty(n, dtype=np.int64)
    cdef int64_t[::1] flush_view = flush_out
    cdef Py_ssize_t n_flush = 0

    for i in range(n):
        page = pages[i]
        if resident[page]:
            if head != page:
                # unlink
                prv[nxt[page]] = prv[page]
                if prv[page] >= 0:
                    nxt[prv[page]] = nxt[page]
                if tail == page:
                    tail = nxt[page]
                # relink at head
                nxt[page] = -1
                prv[page] = head
                nxt[head] = page
                head = page
        else:
            fault_total += 1
            counter += 1
            if cap > 0 and n_resident >= cap:
                victim = tail
                tail = nxt[victim]
                if tail >= 0:
                    prv[tail] = -1
                else:
                    head = -1
                resident[victim] = 0
                n_resident -= 1
            resident[page] = 1
            n_resident += 1
            nxt[page] = -1
            prv[page] = head
            if head >= 0:
                nxt[head] = page
            head = page
            if tail < 0:
                tail = page
            if counter >= thr:
                flush_view[n_flush] = i
                n_flush += 1
                counter = 0

    free(nxt); free(prv); free(resident)
    return flush_out[:n_flush].copy(), int(fault_total)


def window_distinct(const uint64_t[::1] times, const int64_t[::1] pages,
                    n_pages, const uint64_t[::1] starts, const uint64_t[::1] ends):
    cdef Py_ssize_t n = times.shape[0]
    cdef Py_ssize_t m = starts.shape[0]
    cdef int64_t npg = n_pages
    out = np.zeros(m, dtype=np.int64)
    cdef int64_t[::1] out_view = out
    cdef int64_t *counts = <int64_t *> malloc(npg * sizeof(int64_t))
    if counts == NULL:
        raise MemoryError()
    cdef Py_ssize_t i
    for i in range(npg):
        counts[i] = 0

    cdef Py_ssize_t lo = 0
    cdef Py_ssize_t hi = 0
    cdef int64_t distinct = 0
    cdef Py_ssize_t q
    cdef uint64_t start, end
    cdef int64_t p
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
        out_view[q] = distinct

    free(counts)
    return out


def hist_build(const uint8_t[::1] binned, const double[::1] grads, n_bins):
    cdef Py_ssize_t n = binned.shape[0]
    cdef Py_ssize_t nb = n_bins
    counts = np.zeros(nb, dtype=np.int64)
    sums = np.zeros(nb, dtype=np.float64)
    cdef int64_t[::1] counts_view = counts
    cdef double[::1] sums_view = sums
    cdef Py_ssize_t i
    cdef uint8_t b
    for i in range(n):
        b = binned[i]
        counts_view[b] += 1
        sums_view[b] += grads[i]
    return counts, sums
