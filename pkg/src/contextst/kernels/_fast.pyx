# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot kernels: centered moving average and GAF outer products."""

import numpy as np

cimport numpy as cnp
from libc.math cimport sqrt

cnp.import_array()


def moving_average(double[::1] x, int kappa):
    """Centered (2*kappa+1)-point mean with replicate padding at both edges."""
    cdef Py_ssize_t n = x.shape[0]
    cdef Py_ssize_t w = 2 * kappa + 1
    if w > n:
        raise ValueError("window exceeds series length")
    if kappa == 0:
        return np.asarray(x).copy()
    out_arr = np.empty(n, dtype=np.float64)
    cdef double[::1] out = out_arr
    cdef Py_ssize_t t, j, lo, hi
    cdef double acc = 0.0
    # initial window at t = 0, then slide: drop the clamped trailing index,
    # add the clamped leading one
    for j in range(-kappa, kappa + 1):
        acc += x[0 if j < 0 else j]
    out[0] = acc / w
    for t in range(1, n):
        lo = t - kappa - 1
        if lo < 0:
            lo = 0
        hi = t + kappa
        if hi >= n:
            hi = n - 1
        acc += x[hi] - x[lo]
        out[t] = acc / w
    return out_arr


def gaf_from_normalized(double[::1] xt):
    """GAF(i, j) = xt_i * xt_j - sqrt(1 - xt_i^2) * sqrt(1 - xt_j^2)."""
    cdef Py_ssize_t n = xt.shape[0]
    out_arr = np.empty((n, n), dtype=np.float64)
    cdef double[:, ::1] out = out_arr
    comp_arr = np.empty(n, dtype=np.float64)
    cdef double[::1] comp = comp_arr
    cdef Py_ssize_t i, j
    cdef double c
    for i in range(n):
        c = 1.0 - xt[i] * xt[i]
        comp[i] = sqrt(c) if c > 0.0 else 0.0
    for i in range(n):
        for j in range(n):
            out[i, j] = xt[i] * xt[j] - comp[i] * comp[j]
    return out_arr
