# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled merge-sort inversion counting, the hot kernel behind Kendall's tau.

Counts pairs (i < j) with a[i] > a[j] in O(n log n); ties contribute
nothing.  A pure-NumPy fallback with the same contract lives in
`_inversions_py`.
"""

import numpy as np


cdef long long _msort(double* a, double* tmp, Py_ssize_t lo, Py_ssize_t hi) noexcept nogil:
    cdef Py_ssize_t mid, i, j, k
    cdef long long inv = 0
    if hi - lo < 2:
        return 0
    mid = (lo + hi) // 2
    inv += _msort(a, tmp, lo, mid)
    inv += _msort(a, tmp, mid, hi)
    if a[mid - 1] <= a[mid]:
        return inv
    i = lo
    j = mid
    k = lo
    while i < mid and j < hi:
        if a[i] <= a[j]:
            tmp[k] = a[i]
            i += 1
        else:
            inv += mid - i
            tmp[k] = a[j]
            j += 1
        k += 1
    while i < mid:
        tmp[k] = a[i]
        i += 1
        k += 1
    while j < hi:
        tmp[k] = a[j]
        j += 1
        k += 1
    for i in range(lo, hi):
        a[i] = tmp[i]
    return inv


def count_inversions(values) -> int:
    """Number of strictly decreasing pairs in `values` (1-D array of floats)."""
    work = np.array(values, dtype=np.float64)  # private copy, sorted in place
    cdef Py_ssize_t n = work.shape[0]
    if n < 2:
        return 0
    tmp = np.empty(n, dtype=np.float64)
    cdef double[::1] va = work
    cdef double[::1] vt = tmp
    cdef long long inv
    with nogil:
        inv = _msort(&va[0], &vt[0], 0, n)
    return int(inv)
