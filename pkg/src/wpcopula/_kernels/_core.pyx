# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled kernels: pairwise moment sums and brute-force neighbor scans.

Semantics mirror ``_backend_numpy`` exactly (same tie handling, same
neighbor ordering); all inner loops release the GIL so callers can run
independent work units on a thread pool.
"""

from libc.math cimport exp, fabs
from libc.stdlib cimport free, malloc, qsort

import numpy as np

cimport numpy as cnp

from ._backend_numpy import check_knn_args

cnp.import_array()


cdef inline double _sqdist(const double* a, const double* b, Py_ssize_t d) noexcept nogil:
    cdef Py_ssize_t t
    cdef double s = 0.0, diff
    for t in range(d):
        diff = a[t] - b[t]
        s += diff * diff
    return s


cdef double _kth_smallest(double* a, Py_ssize_t n, Py_ssize_t k) noexcept nogil:
    # Quickselect with median-of-three pivot; k is a 0-based order index.
    cdef Py_ssize_t lo = 0, hi = n - 1, i, j, mid
    cdef double pivot, tmp
    while lo < hi:
        mid = lo + (hi - lo) // 2
        if a[mid] < a[lo]:
            tmp = a[mid]; a[mid] = a[lo]; a[lo] = tmp
        if a[hi] < a[lo]:
            tmp = a[hi]; a[hi] = a[lo]; a[lo] = tmp
        if a[hi] < a[mid]:
            tmp = a[hi]; a[hi] = a[mid]; a[mid] = tmp
        pivot = a[mid]
        i = lo
        j = hi
        while i <= j:
            while a[i] < pivot:
                i += 1
            while a[j] > pivot:
                j -= 1
            if i <= j:
                tmp = a[i]; a[i] = a[j]; a[j] = tmp
                i += 1
                j -= 1
        if k <= j:
            hi = j
        elif k >= i:
            lo = i
        else:
            return a[k]
    return a[lo]


cdef struct DistIdx:
    double d
    Py_ssize_t i


cdef int _cmp_dist_idx(const void* pa, const void* pb) noexcept nogil:
    # Order by distance, then training index: matches a stable argsort.
    cdef const DistIdx* a = <const DistIdx*> pa
    cdef const DistIdx* b = <const DistIdx*> pb
    if a.d < b.d:
        return -1
    if a.d > b.d:
        return 1
    if a.i < b.i:
        return -1
    if a.i > b.i:
        return 1
    return 0


def pair_stat_sums(const double[::1] g1, const double[::1] g2, const double[:, ::1] x, double scale):
    """See ``_backend_numpy.pair_stat_sums``; exploits pair symmetry."""
    cdef Py_ssize_t n = x.shape[0]
    cdef Py_ssize_t d = x.shape[1]
    cdef double s2 = 2.0 * scale * scale
    cdef double norm = (np.pi / 2.0) ** (d / 2.0) * scale ** d
    cdef double total = 0.0, abs_total = 0.0
    cdef double row, abs_row, mdiag, a1, a2, m, w, term, qi
    cdef Py_ssize_t i, j
    cdef double* q = <double*> malloc(n * sizeof(double))
    if q == NULL:
        raise MemoryError()
    try:
        with nogil:
            for i in range(n):
                q[i] = 0.25 * (1.0 - g1[i] * g1[i]) * (1.0 - g2[i] * g2[i])
            for i in range(n):
                mdiag = (1.0 - g1[i]) * (1.0 - g2[i]) - 2.0 * q[i] + 1.0 / 9.0
                row = 0.0
                abs_row = 0.0
                qi = q[i]
                for j in range(i + 1, n):
                    a1 = 1.0 - (g1[i] if g1[i] > g1[j] else g1[j])
                    a2 = 1.0 - (g2[i] if g2[i] > g2[j] else g2[j])
                    m = a1 * a2 - (qi + q[j]) + 1.0 / 9.0
                    w = exp(-_sqdist(&x[i, 0], &x[j, 0], d) / s2)
                    term = m * w
                    row += term
                    abs_row += fabs(term)
                total += mdiag + 2.0 * row
                abs_total += fabs(mdiag) + 2.0 * abs_row
    finally:
        free(q)
    return norm * total, norm * abs_total


def knn_cdf_batch(const double[:, ::1] xtr, const double[::1] ytr, Py_ssize_t k,
                  const double[:, ::1] xq, const double[::1] yq):
    """See ``_backend_numpy.knn_cdf_batch``."""
    check_knn_args(np.asarray(xtr), np.asarray(ytr), k, np.asarray(xq), np.asarray(yq))
    cdef Py_ssize_t m = xtr.shape[0]
    cdef Py_ssize_t d = xtr.shape[1]
    cdef Py_ssize_t nq = xq.shape[0]
    out_arr = np.empty(nq, dtype=np.float64)
    cdef double[::1] out = out_arr
    cdef double* d2 = <double*> malloc(m * sizeof(double))
    cdef double* buf = <double*> malloc(m * sizeof(double))
    if d2 == NULL or buf == NULL:
        free(d2); free(buf)
        raise MemoryError()
    cdef Py_ssize_t q, i, num, need
    cdef double r, yv
    try:
        with nogil:
            for q in range(nq):
                for i in range(m):
                    d2[i] = _sqdist(&xq[q, 0], &xtr[0, 0] + i * d, d)
                    buf[i] = d2[i]
                r = _kth_smallest(buf, m, k - 1)
                num = 0
                need = k
                yv = yq[q]
                for i in range(m):
                    if d2[i] < r:
                        need -= 1
                        if ytr[i] <= yv:
                            num += 1
                # ties at the k-th distance, taken in training-index order
                for i in range(m):
                    if need == 0:
                        break
                    if d2[i] == r:
                        need -= 1
                        if ytr[i] <= yv:
                            num += 1
                out[q] = <double> num / <double> k
    finally:
        free(d2)
        free(buf)
    return out_arr


def knn_reg_sse(const double[:, ::1] xtr, const double[::1] ytr,
                const double[:, ::1] xq, const double[::1] yq, const long[::1] ks):
    """See ``_backend_numpy.knn_reg_sse``."""
    check_knn_args(np.asarray(xtr), np.asarray(ytr), int(max(ks)), np.asarray(xq), np.asarray(yq))
    cdef Py_ssize_t m = xtr.shape[0]
    cdef Py_ssize_t d = xtr.shape[1]
    cdef Py_ssize_t nq = xq.shape[0]
    cdef Py_ssize_t nk = ks.shape[0]
    sse_arr = np.zeros(nk, dtype=np.float64)
    cdef double[::1] sse = sse_arr
    cdef DistIdx* pairs = <DistIdx*> malloc(m * sizeof(DistIdx))
    cdef double* csum = <double*> malloc(m * sizeof(double))
    if pairs == NULL or csum == NULL:
        free(pairs); free(csum)
        raise MemoryError()
    cdef Py_ssize_t q, i, j, k
    cdef double acc, err
    try:
        with nogil:
            for q in range(nq):
                for i in range(m):
                    pairs[i].d = _sqdist(&xq[q, 0], &xtr[0, 0] + i * d, d)
                    pairs[i].i = i
                qsort(pairs, m, sizeof(DistIdx), _cmp_dist_idx)
                acc = 0.0
                for i in range(m):
                    acc += ytr[pairs[i].i]
                    csum[i] = acc
                for j in range(nk):
                    k = ks[j]
                    err = yq[q] - csum[k - 1] / <double> k
                    sse[j] += err * err
    finally:
        free(pairs)
        free(csum)
    return sse_arr


def knn_neighbors(const double[:, ::1] xtr, Py_ssize_t k, const double[:, ::1] xq):
    """See ``_backend_numpy.knn_neighbors``."""
    check_knn_args(np.asarray(xtr), np.empty(xtr.shape[0]), k, np.asarray(xq), None)
    cdef Py_ssize_t m = xtr.shape[0]
    cdef Py_ssize_t d = xtr.shape[1]
    cdef Py_ssize_t nq = xq.shape[0]
    offsets_arr = np.arange(nq + 1, dtype=np.int64) * k
    indices_arr = np.empty(nq * k, dtype=np.int64)
    cdef long[::1] iv = indices_arr
    cdef double* d2 = <double*> malloc(m * sizeof(double))
    cdef double* buf = <double*> malloc(m * sizeof(double))
    if d2 == NULL or buf == NULL:
        free(d2); free(buf)
        raise MemoryError()
    cdef Py_ssize_t q, i, pos = 0, need
    cdef double r
    try:
        with nogil:
            for q in range(nq):
                for i in range(m):
                    d2[i] = _sqdist(&xq[q, 0], &xtr[0, 0] + i * d, d)
                    buf[i] = d2[i]
                r = _kth_smallest(buf, m, k - 1)
                need = k
                for i in range(m):
                    if d2[i] < r:
                        need -= 1
                # single ascending pass keeps the emitted indices sorted:
                # everything strictly inside, plus the first `need` ties
                for i in range(m):
                    if d2[i] < r:
                        iv[pos] = <long> i
                        pos += 1
                    elif d2[i] == r and need > 0:
                        iv[pos] = <long> i
                        pos += 1
                        need -= 1
    finally:
        free(d2)
        free(buf)
    return offsets_arr, indices_arr
