# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled single-pass versions of the per-row reduction kernels.

Signatures mirror ``prlandscape._kernels_py``; each function makes one
fused pass over the measurement rows without m-length temporaries.
"""

import numpy as np

cimport numpy as cnp

cnp.import_array()


def residuals(const double[:, ::1] rows, const double[::1] y2, const double[::1] z):
    cdef Py_ssize_t m = rows.shape[0], n = rows.shape[1]
    cdef Py_ssize_t j, k
    cdef double s
    out_arr = np.empty(m, dtype=np.float64)
    cdef double[::1] out = out_arr
    for j in range(m):
        s = 0.0
        for k in range(n):
            s += rows[j, k] * z[k]
        out[j] = s * s - y2[j]
    return out_arr


def loss(const double[:, ::1] rows, const double[::1] y2, const double[::1] z):
    cdef Py_ssize_t m = rows.shape[0], n = rows.shape[1]
    cdef Py_ssize_t j, k
    cdef double s, r, acc = 0.0
    for j in range(m):
        s = 0.0
        for k in range(n):
            s += rows[j, k] * z[k]
        r = s * s - y2[j]
        acc += r * r
    return acc / m


def loss_gradient(const double[:, ::1] rows, const double[::1] y2, const double[::1] z):
    cdef Py_ssize_t m = rows.shape[0], n = rows.shape[1]
    cdef Py_ssize_t j, k
    cdef double s, r, w, acc = 0.0
    g_arr = np.zeros(rows.shape[1], dtype=np.float64)
    cdef double[::1] g = g_arr
    for j in range(m):
        s = 0.0
        for k in range(n):
            s += rows[j, k] * z[k]
        r = s * s - y2[j]
        acc += r * r
        w = r * s
        for k in range(n):
            g[k] += w * rows[j, k]
    for k in range(n):
        g[k] *= 4.0 / m
    return acc / m, g_arr


def quad_form(const double[:, ::1] rows, const double[::1] y2, const double[::1] z,
              const double[::1] xi):
    cdef Py_ssize_t m = rows.shape[0], n = rows.shape[1]
    cdef Py_ssize_t j, k
    cdef double s, u, acc = 0.0
    for j in range(m):
        s = 0.0
        u = 0.0
        for k in range(n):
            s += rows[j, k] * z[k]
            u += rows[j, k] * xi[k]
        acc += u * u * (3.0 * s * s - y2[j])
    return 4.0 * acc / m


def hvp(const double[:, ::1] rows, const double[::1] y2, const double[::1] z, const double[::1] v):
    cdef Py_ssize_t m = rows.shape[0], n = rows.shape[1]
    cdef Py_ssize_t j, k
    cdef double s, u, w
    out_arr = np.zeros(rows.shape[1], dtype=np.float64)
    cdef double[::1] out = out_arr
    for j in range(m):
        s = 0.0
        u = 0.0
        for k in range(n):
            s += rows[j, k] * z[k]
            u += rows[j, k] * v[k]
        w = (3.0 * s * s - y2[j]) * u
        for k in range(n):
            out[k] += w * rows[j, k]
    for k in range(n):
        out[k] *= 4.0 / m
    return out_arr


def moments(const double[:, ::1] rows, const double[::1] x, const double[::1] zhat):
    cdef Py_ssize_t m = rows.shape[0], n = rows.shape[1]
    cdef Py_ssize_t j, k
    cdef double s, t, s2, t2
    cdef double a = 0.0, b = 0.0, a1 = 0.0, c1 = 0.0, d = 0.0
    for j in range(m):
        s = 0.0
        t = 0.0
        for k in range(n):
            s += rows[j, k] * zhat[k]
            t += rows[j, k] * x[k]
        s2 = s * s
        t2 = t * t
        a += s2 * s2
        b += s2 * t2
        a1 += s2 * s * t
        c1 += s * t2 * t
        d += t2 * t2
    return a / m, b / m, a1 / m, c1 / m, d / m
