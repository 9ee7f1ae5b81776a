# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled row-wise conversion kernels (hot path).

One fused pass per row instead of the several full-array passes the numpy
fallback needs, which matters when Monte Carlo loops push 1e5+ conversions.
Semantics match ``_convert_ref`` exactly; see there for the conventions.
"""

from libc.math cimport M_PI, atan2, cos, sin, sqrt

import numpy as np

cimport numpy as cnp

cnp.import_array()


def cart_to_sph(double[:, ::1] g):
    cdef Py_ssize_t n = g.shape[0]
    cdef Py_ssize_t d = g.shape[1]
    cdef cnp.ndarray mag_arr = np.empty(n, dtype=np.float64)
    cdef cnp.ndarray ang_arr = np.empty((n, d - 1), dtype=np.float64)
    cdef cnp.ndarray suf_arr = np.empty(d, dtype=np.float64)
    cdef double[::1] mag = mag_arr
    cdef double[:, ::1] ang = ang_arr
    cdef double[::1] suf = suf_arr
    cdef Py_ssize_t i, z
    cdef double acc, x, y, a

    for i in range(n):
        acc = 0.0
        for z in range(d - 1, -1, -1):
            acc += g[i, z] * g[i, z]
            suf[z] = acc
        mag[i] = sqrt(acc)

        for z in range(d - 2):
            x = g[i, z]
            y = sqrt(suf[z + 1])
            if y == 0.0 and x == 0.0:
                ang[i, z] = 0.0  # zero suffix: angle unconstrained
            else:
                ang[i, z] = atan2(y, x)

        y = g[i, d - 1]
        x = g[i, d - 2]
        if y == 0.0 and x == 0.0:
            ang[i, d - 2] = 0.0
        else:
            a = atan2(y, x)
            if a == -M_PI:
                a = M_PI  # half-open canonical range at -pi
            ang[i, d - 2] = a

    return mag_arr, ang_arr


def sph_to_cart(double[::1] mag, double[:, ::1] ang):
    cdef Py_ssize_t n = ang.shape[0]
    cdef Py_ssize_t dm1 = ang.shape[1]
    cdef cnp.ndarray out_arr = np.empty((n, dm1 + 1), dtype=np.float64)
    cdef double[:, ::1] out = out_arr
    cdef Py_ssize_t i, z
    cdef double prod

    for i in range(n):
        prod = mag[i]
        for z in range(dm1):
            out[i, z] = prod * cos(ang[i, z])
            prod *= sin(ang[i, z])
        out[i, dm1] = prod

    return out_arr
