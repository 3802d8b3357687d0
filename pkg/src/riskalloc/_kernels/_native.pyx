# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled versions of the hot evaluation kernels.

Semantics mirror ``riskalloc._kernels._numpy``: growth dot products and
stage products accumulate in the same index order, so per-sample outputs
match the fallback bitwise.  Scalar reductions use Kahan compensation.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport log

cnp.import_array()


cdef inline double _growth_at(const double[:, ::1] returns, const double[::1] weights,
                              Py_ssize_t row, Py_ssize_t m) noexcept nogil:
    cdef double s = weights[0] * returns[row, 0]
    cdef Py_ssize_t i
    for i in range(1, m):
        s += weights[i] * returns[row, i]
    return s


cdef inline void _kahan_add(double* acc, double* comp, double value) noexcept nogil:
    cdef double y = value - comp[0]
    cdef double t = acc[0] + y
    comp[0] = (t - acc[0]) - y
    acc[0] = t


def atom_moments(const double[:, ::1] returns, const double[::1] probs,
                 const double[::1] weights):
    """See ``_numpy.atom_moments``."""
    cdef Py_ssize_t a = returns.shape[0]
    cdef Py_ssize_t m = returns.shape[1]
    cdef cnp.ndarray[cnp.float64_t, ndim=1] e_ratio = np.zeros(m)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] e_log_ratio = np.zeros(m)
    cdef double[::1] er = e_ratio
    cdef double[::1] elr = e_log_ratio
    cdef double[::1] er_c = np.zeros(m)
    cdef double[::1] elr_c = np.zeros(m)
    cdef double e_log = 0.0, e_log_c = 0.0
    cdef double e_log2 = 0.0, e_log2_c = 0.0
    cdef double min_growth = 0.0
    cdef double s, ls, rw, p
    cdef Py_ssize_t row, i

    with nogil:
        for row in range(a):
            s = _growth_at(returns, weights, row, m)
            if row == 0 or s < min_growth:
                min_growth = s
            ls = log(s)
            p = probs[row]
            _kahan_add(&e_log, &e_log_c, p * ls)
            _kahan_add(&e_log2, &e_log2_c, p * ls * ls)
            rw = p / s
            for i in range(m):
                _kahan_add(&er[i], &er_c[i], rw * returns[row, i])
                _kahan_add(&elr[i], &elr_c[i], rw * ls * returns[row, i])
    return e_log, e_log2, e_ratio, e_log_ratio, min_growth


cdef inline Py_ssize_t _upper_bound(const double[::1] cdf, double u) noexcept nogil:
    # first index with cdf[idx] > u, clipped to the last atom
    cdef Py_ssize_t lo = 0
    cdef Py_ssize_t hi = cdf.shape[0]
    cdef Py_ssize_t mid
    while lo < hi:
        mid = (lo + hi) >> 1
        if cdf[mid] <= u:
            lo = mid + 1
        else:
            hi = mid
    if lo >= cdf.shape[0]:
        lo = cdf.shape[0] - 1
    return lo


def discrete_paths(const double[:, ::1] uniforms, const double[::1] cdf,
                   const double[:, ::1] gross):
    """See ``_numpy.discrete_paths``."""
    cdef Py_ssize_t n_samples = uniforms.shape[0]
    cdef Py_ssize_t n_stages = uniforms.shape[1]
    cdef Py_ssize_t m = gross.shape[1]
    cdef cnp.ndarray[cnp.float64_t, ndim=2] out = np.ones((n_samples, m))
    cdef double[:, ::1] o = out
    cdef Py_ssize_t row, k, i, idx
    with nogil:
        for row in range(n_samples):
            for k in range(n_stages):
                idx = _upper_bound(cdf, uniforms[row, k])
                for i in range(m):
                    o[row, i] *= gross[idx, i]
    return out


def uniform_paths(const double[:, ::1] uniforms, double gross_max):
    """See ``_numpy.uniform_paths``."""
    cdef Py_ssize_t n_samples = uniforms.shape[0]
    cdef Py_ssize_t n_stages = uniforms.shape[1]
    cdef cnp.ndarray[cnp.float64_t, ndim=1] out = np.ones(n_samples)
    cdef double[::1] o = out
    cdef Py_ssize_t row, k
    with nogil:
        for row in range(n_samples):
            for k in range(n_stages):
                o[row] *= (1.0 - uniforms[row, k]) * gross_max
    return out


def log_growth_sums(const double[:, ::1] returns, const double[::1] weights):
    """See ``_numpy.log_growth_sums``."""
    cdef Py_ssize_t n_samples = returns.shape[0]
    cdef Py_ssize_t m = returns.shape[1]
    cdef double s1 = 0.0, c1 = 0.0
    cdef double s2 = 0.0, c2 = 0.0
    cdef double s3 = 0.0, c3 = 0.0
    cdef double s4 = 0.0, c4 = 0.0
    cdef double min_growth = 0.0
    cdef double s, ls, l2
    cdef Py_ssize_t row
    with nogil:
        for row in range(n_samples):
            s = _growth_at(returns, weights, row, m)
            if row == 0 or s < min_growth:
                min_growth = s
            ls = log(s)
            l2 = ls * ls
            _kahan_add(&s1, &c1, ls)
            _kahan_add(&s2, &c2, l2)
            _kahan_add(&s3, &c3, l2 * ls)
            _kahan_add(&s4, &c4, l2 * l2)
    return s1, s2, s3, s4, min_growth
