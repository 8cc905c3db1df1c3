# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled hot kernels: truncated tensor products, Chen signature folds and
log-rank split scans.

Accumulation order in the tensor kernels matches ``_pyref`` slot for slot, so
both backends return bit-identical arrays.
"""
import numpy as np

cimport numpy as cnp
from libc.math cimport fabs, sqrt

cnp.import_array()

BACKEND = "native"


cdef void _offsets(Py_ssize_t dim, Py_ssize_t level, Py_ssize_t* offs) noexcept nogil:
    cdef Py_ssize_t k, size = 1
    offs[0] = 0
    for k in range(level + 1):
        offs[k + 1] = offs[k] + size
        size *= dim


cdef void _concat_into(double* out, const double* a, const double* b,
                       Py_ssize_t dim, Py_ssize_t level,
                       const Py_ssize_t* offs) noexcept nogil:
    """out = a * b (concatenation product), out zero-initialised by caller."""
    cdef Py_ssize_t k, i, p, q, na, nb
    cdef double* tgt
    cdef const double* av
    cdef const double* bv
    cdef double ap
    for k in range(level + 1):
        tgt = out + offs[k]
        for i in range(k + 1):
            av = a + offs[i]
            bv = b + offs[k - i]
            na = offs[i + 1] - offs[i]
            nb = offs[k - i + 1] - offs[k - i]
            for p in range(na):
                ap = av[p]
                for q in range(nb):
                    tgt[p * nb + q] += ap * bv[q]


cdef void _segment_exp_into(double* out, const double* delta,
                            Py_ssize_t dim, Py_ssize_t level,
                            const Py_ssize_t* offs) noexcept nogil:
    cdef Py_ssize_t k, p, j, nprev
    cdef const double* prev
    cdef double* cur
    out[0] = 1.0
    for k in range(1, level + 1):
        prev = out + offs[k - 1]
        cur = out + offs[k]
        nprev = offs[k] - offs[k - 1]
        for p in range(nprev):
            for j in range(dim):
                cur[p * dim + j] = (prev[p] * delta[j]) / k


def concat_product(double[::1] a, double[::1] b, Py_ssize_t dim, Py_ssize_t level):
    cdef cnp.ndarray[double, ndim=1] offs_buf
    cdef Py_ssize_t offs_arr[64]
    if level + 2 > 64:
        raise ValueError("truncation level too large")
    _offsets(dim, level, offs_arr)
    out_np = np.zeros(offs_arr[level + 1])
    cdef double[::1] out = out_np
    with nogil:
        _concat_into(&out[0], &a[0], &b[0], dim, level, offs_arr)
    return out_np


def segment_exp(double[::1] increment, Py_ssize_t level):
    cdef Py_ssize_t dim = increment.shape[0]
    cdef Py_ssize_t offs_arr[64]
    if level + 2 > 64:
        raise ValueError("truncation level too large")
    _offsets(dim, level, offs_arr)
    out_np = np.empty(offs_arr[level + 1])
    cdef double[::1] out = out_np
    with nogil:
        _segment_exp_into(&out[0], &increment[0], dim, level, offs_arr)
    return out_np


def chen_signature(double[:, ::1] increments, Py_ssize_t level):
    cdef Py_ssize_t n = increments.shape[0]
    cdef Py_ssize_t dim = increments.shape[1]
    cdef Py_ssize_t offs_arr[64]
    cdef Py_ssize_t size, s, j, i
    cdef bint nonzero
    if level + 2 > 64:
        raise ValueError("truncation level too large")
    _offsets(dim, level, offs_arr)
    size = offs_arr[level + 1]
    sig_np = np.zeros(size)
    cdef double[::1] sig = sig_np
    seg_np = np.zeros(size)
    cdef double[::1] seg = seg_np
    tmp_np = np.zeros(size)
    cdef double[::1] tmp = tmp_np
    cdef double* sig_p = &sig[0]
    cdef double* seg_p = &seg[0]
    cdef double* tmp_p = &tmp[0]
    cdef double* swap
    with nogil:
        sig_p[0] = 1.0
        for s in range(n):
            nonzero = False
            for j in range(dim):
                if increments[s, j] != 0.0:
                    nonzero = True
                    break
            if not nonzero:
                continue
            _segment_exp_into(seg_p, &increments[s, 0], dim, level, offs_arr)
            for i in range(size):
                tmp_p[i] = 0.0
            _concat_into(tmp_p, sig_p, seg_p, dim, level, offs_arr)
            swap = sig_p
            sig_p = tmp_p
            tmp_p = swap
    if sig_p == &sig[0]:
        return sig_np
    return tmp_np


def logrank_scan(double[::1] times, cnp.uint8_t[::1] events, double[::1] values,
                 double[::1] thresholds):
    """Absolute standardized log-rank statistic per candidate threshold.

    ``times`` ascending; left group is ``values <= threshold``. Returns
    (scores, left sizes, left event counts).
    """
    cdef Py_ssize_t m = times.shape[0]
    cdef Py_ssize_t n_thr = thresholds.shape[0]
    scores_np = np.zeros(n_thr)
    n_left_np = np.zeros(n_thr, dtype=np.int64)
    e_left_np = np.zeros(n_thr, dtype=np.int64)
    cdef double[::1] scores = scores_np
    cdef cnp.int64_t[::1] n_left = n_left_np
    cdef cnp.int64_t[::1] e_left = e_left_np
    cdef Py_ssize_t t, i, j, g_start
    cdef double thr, n_risk, n1_risk, d_tot, d1, grp_left
    cdef double observed, expected, variance, frac, nl, el
    with nogil:
        for t in range(n_thr):
            thr = thresholds[t]
            nl = 0.0
            el = 0.0
            for i in range(m):
                if values[i] <= thr:
                    nl += 1.0
                    if events[i]:
                        el += 1.0
            n_left[t] = <cnp.int64_t> nl
            e_left[t] = <cnp.int64_t> el
            observed = 0.0
            expected = 0.0
            variance = 0.0
            n_risk = m
            n1_risk = nl
            i = 0
            while i < m:
                g_start = i
                d_tot = 0.0
                d1 = 0.0
                grp_left = 0.0
                while i < m and times[i] == times[g_start]:
                    if events[i]:
                        d_tot += 1.0
                        if values[i] <= thr:
                            d1 += 1.0
                    if values[i] <= thr:
                        grp_left += 1.0
                    i += 1
                if d_tot > 0.0:
                    frac = n1_risk / n_risk
                    observed += d1
                    expected += d_tot * frac
                    if n_risk > 1.0:
                        variance += d_tot * frac * (1.0 - frac) * (n_risk - d_tot) / (n_risk - 1.0)
                n_risk -= i - g_start
                n1_risk -= grp_left
            if variance > 0.0:
                scores[t] = fabs(observed - expected) / sqrt(variance)
    return scores_np, n_left_np, e_left_np
