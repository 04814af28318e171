# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled box-kernel routines; same contract as ``_kernels_py``.

For each unit every neighbour is dropped into the bucket of the smallest
bandwidth that covers it; cumulative bucket sums then give the local sums for
all bandwidths at once.  One pass over the neighbours serves every candidate:
O(n^2 r) instead of O(#bandwidths n^2 r), and no sorting.
"""

import numpy as np
cimport numpy as cnp

cnp.import_array()

IMPLEMENTATION = "cython"

# With explicit per-node bandwidths a BLAS matmul per distinct level beats the
# bucket walk (benchmarks/results.txt), so the compiled backend reuses it.
from ._kernels_py import box_means


cdef inline void _add_row(double* acc, const double* row, Py_ssize_t r) noexcept nogil:
    cdef Py_ssize_t l
    for l in range(r):
        acc[l] += row[l]


cdef inline Py_ssize_t _bucket(const double* levels, Py_ssize_t m, double d) noexcept nogil:
    """First index j with levels[j] >= d (m when d exceeds every level)."""
    cdef Py_ssize_t lo = 0, hi = m, mid
    while lo < hi:
        mid = (lo + hi) >> 1
        if levels[mid] < d:
            lo = mid + 1
        else:
            hi = mid
    return lo


cdef void _fill_buckets(const double[:, ::1] D, const double[:, ::1] R, const double* levels,
                        Py_ssize_t m, Py_ssize_t i, bint skip_self,
                        double[:, ::1] B, Py_ssize_t[::1] counts) noexcept nogil:
    cdef Py_ssize_t n = R.shape[0], r = R.shape[1], k, j, l
    for j in range(m):
        counts[j] = 0
        for l in range(r):
            B[j, l] = 0.0
    for k in range(n):
        if skip_self and k == i:
            continue
        j = _bucket(levels, m, D[i, k])
        if j < m:
            counts[j] += 1
            _add_row(&B[j, 0], &R[k, 0], r)


def box_means_buckets(dist, resp, h, bint loo):
    """Bucket-walk local means; kept for comparison, see ``box_means`` below."""
    cdef const double[:, ::1] D = np.ascontiguousarray(dist, dtype=np.float64)
    R_in = np.ascontiguousarray(resp, dtype=np.float64)
    h = np.ascontiguousarray(h, dtype=np.float64)
    cdef Py_ssize_t n = R_in.shape[0], r = R_in.shape[1]
    out_arr = np.empty((n, r), dtype=np.float64)
    if n == 0 or r == 0:
        return out_arr
    # columns permuted so bandwidth levels ascend; a neighbour in bucket j then
    # only touches the suffix of columns starting at starts[j]
    levels_arr, inverse = np.unique(h, return_inverse=True)
    levels_arr = np.ascontiguousarray(levels_arr, dtype=np.float64)
    col_order_arr = np.argsort(inverse, kind="stable").astype(np.intp)
    starts_arr = np.searchsorted(inverse[col_order_arr], np.arange(levels_arr.size + 1)).astype(np.intp)
    Rp_arr = np.ascontiguousarray(R_in[:, col_order_arr])
    tot_arr = Rp_arr.sum(axis=0)
    cdef Py_ssize_t m = levels_arr.size
    outp_arr = np.empty((n, r), dtype=np.float64)
    acc_arr = np.empty(r, dtype=np.float64)
    counts_arr = np.empty(m, dtype=np.intp)
    B_arr = np.empty((m, r), dtype=np.float64)

    cdef const double[:, ::1] Rp = Rp_arr
    cdef const double[::1] lev = levels_arr
    cdef const Py_ssize_t[::1] starts = starts_arr
    cdef const double[::1] tot = tot_arr
    cdef double[:, ::1] B = B_arr
    cdef Py_ssize_t[::1] counts = counts_arr
    cdef double[::1] acc = acc_arr
    cdef double[:, ::1] outp = outp_arr
    cdef Py_ssize_t i, j, k, l, s0, cnt
    with nogil:
        for i in range(n):
            for j in range(m):
                counts[j] = 0
                for l in range(starts[j], r):
                    B[j, l] = 0.0
            for k in range(n):
                if loo and k == i:
                    continue
                j = _bucket(&lev[0], m, D[i, k])
                if j < m:
                    counts[j] += 1
                    s0 = starts[j]
                    _add_row(&B[j, s0], &Rp[k, s0], r - s0)
            for l in range(r):
                acc[l] = 0.0
            cnt = 0
            for j in range(m):
                cnt += counts[j]
                s0 = starts[j]
                if counts[j]:
                    _add_row(&acc[s0], &B[j, s0], r - s0)
                for l in range(s0, starts[j + 1]):
                    if cnt > 0:
                        outp[i, l] = acc[l] / cnt
                    elif loo:
                        outp[i, l] = (tot[l] - Rp[i, l]) / (n - 1) if n > 1 else 0.0
                    else:
                        outp[i, l] = tot[l] / n
    out_arr[:, col_order_arr] = outp_arr
    return out_arr


def box_cv_scores(dist, resp, cands):
    cdef const double[:, ::1] D = np.ascontiguousarray(dist, dtype=np.float64)
    cdef const double[:, ::1] R = np.ascontiguousarray(resp, dtype=np.float64)
    cdef const double[::1] C = np.ascontiguousarray(cands, dtype=np.float64)
    cdef Py_ssize_t n = R.shape[0], r = R.shape[1], m = C.shape[0]
    scores_arr = np.zeros((m, r), dtype=np.float64)
    if n < 1 or m < 1 or r < 1:
        return scores_arr
    tot_arr = np.asarray(R).sum(axis=0)
    B_arr = np.empty((m, r), dtype=np.float64)
    counts_arr = np.empty(m, dtype=np.intp)
    acc_arr = np.empty(r, dtype=np.float64)
    cdef const double[::1] tot = tot_arr
    cdef double[:, ::1] B = B_arr
    cdef Py_ssize_t[::1] counts = counts_arr
    cdef double[::1] acc = acc_arr
    cdef double[:, ::1] scores = scores_arr
    cdef Py_ssize_t i, j, l, cnt
    cdef double inv, e
    cdef double* a
    cdef const double* yi
    cdef double* sj
    with nogil:
        a = &acc[0]
        for i in range(n):
            _fill_buckets(D, R, &C[0], m, i, True, B, counts)
            yi = &R[i, 0]
            for l in range(r):
                a[l] = 0.0
            cnt = 0
            for j in range(m):
                cnt += counts[j]
                if counts[j]:
                    _add_row(a, &B[j, 0], r)
                sj = &scores[j, 0]
                if cnt > 0:
                    inv = 1.0 / cnt
                    for l in range(r):
                        e = yi[l] - a[l] * inv
                        sj[l] += e * e
                elif n > 1:
                    for l in range(r):
                        e = yi[l] - (tot[l] - yi[l]) / (n - 1)
                        sj[l] += e * e
                else:
                    for l in range(r):
                        sj[l] += yi[l] * yi[l]
    return scores_arr
