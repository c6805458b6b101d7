# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernels for the quadratic-cost loops.

Every row is reduced in a fixed order, so results do not depend on the
thread schedule.
"""
import numpy as np
cimport numpy as cnp
from cython.parallel cimport prange
from libc.math cimport sqrt, fabs

cnp.import_array()


cdef inline double _dist(const double[:, ::1] x, Py_ssize_t i, Py_ssize_t j, Py_ssize_t dim) noexcept nogil:
    cdef double acc = 0.0, t
    cdef Py_ssize_t c
    for c in range(dim):
        t = x[i, c] - x[j, c]
        acc = acc + t * t
    return sqrt(acc)


def pairwise_distances(const double[:, ::1] x, int n_threads=0):
    cdef Py_ssize_t n = x.shape[0], dim = x.shape[1], i, j
    out_arr = np.zeros((n, n), dtype=np.float64)
    cdef double[:, ::1] out = out_arr
    cdef int nt = n_threads if n_threads > 0 else 0
    if nt > 0:
        for i in prange(n, nogil=True, schedule="static", num_threads=nt):
            for j in range(i + 1, n):
                out[i, j] = _dist(x, i, j, dim)
    else:
        for i in prange(n, nogil=True, schedule="static"):
            for j in range(i + 1, n):
                out[i, j] = _dist(x, i, j, dim)
    for i in range(n):
        for j in range(i + 1, n):
            out[j, i] = out[i, j]
    return out_arr


cdef void _gnsa_row(const double[:, ::1] z, const double[:, ::1] ref, double nz,
                    double eps_dist, double tie_tol, Py_ssize_t i, double[:, ::1] g,
                    double[::1] s_rows) noexcept nogil:
    cdef Py_ssize_t n = z.shape[0], dim = z.shape[1], k, c
    cdef double d, diff, s, acc_s = 0.0
    for k in range(n):
        if k == i:
            continue
        d = _dist(z, i, k, dim)
        diff = d / nz - ref[i, k]
        if diff > tie_tol:
            s = 1.0
        elif diff < -tie_tol:
            s = -1.0
        else:
            continue
        acc_s = acc_s + s * d
        if d <= eps_dist:
            continue
        for c in range(dim):
            g[i, c] = g[i, c] + s * (z[i, c] - z[k, c]) / d
    s_rows[i] = acc_s


def gnsa_rows(const double[:, ::1] z, const double[:, ::1] ref, double nz,
              double eps_dist=1e-12, double tie_tol=0.0, int n_threads=0):
    """Per-row sign-weighted unit-vector sums and sign-weighted distance sums.

    Returns ``(g, s_rows)`` where ``g[i] = sum_k s_ik (z_i - z_k) / d_ik`` and
    ``s_rows[i] = sum_k s_ik d_ik`` with ``s_ik = sign(d_ik / nz - ref_ik)``;
    differences within ``tie_tol`` count as ties (``s_ik = 0``).
    """
    cdef Py_ssize_t n = z.shape[0], dim = z.shape[1], i
    g_arr = np.zeros((n, dim), dtype=np.float64)
    s_arr = np.zeros(n, dtype=np.float64)
    cdef double[:, ::1] g = g_arr
    cdef double[::1] s_rows = s_arr
    cdef int nt = n_threads if n_threads > 0 else 0
    if nt > 0:
        for i in prange(n, nogil=True, schedule="static", num_threads=nt):
            _gnsa_row(z, ref, nz, eps_dist, tie_tol, i, g, s_rows)
    else:
        for i in prange(n, nogil=True, schedule="static"):
            _gnsa_row(z, ref, nz, eps_dist, tie_tol, i, g, s_rows)
    return g_arr, s_arr
