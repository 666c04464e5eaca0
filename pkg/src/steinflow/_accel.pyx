# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot kernels: pairwise squared distances and the Gaussian Gram matrix.

Entry (i, j) is computed independently of (j, i) summation order, so the
results are exactly symmetric and match the pure-numpy fallback entrywise.
"""

from libc.math cimport exp

import numpy as np


def pairwise_sq_dists(double[:, ::1] x):
    """All pairwise squared Euclidean distances of the rows of x, as an n-by-n array."""
    cdef Py_ssize_t n = x.shape[0]
    cdef Py_ssize_t d = x.shape[1]
    out = np.empty((n, n), dtype=np.float64)
    cdef double[:, ::1] o = out
    cdef Py_ssize_t i, j, k
    cdef double acc, diff
    for i in range(n):
        o[i, i] = 0.0
        for j in range(i + 1, n):
            acc = 0.0
            for k in range(d):
                diff = x[i, k] - x[j, k]
                acc += diff * diff
            o[i, j] = acc
            o[j, i] = acc
    return out


def gram_gaussian(double[:, ::1] x, double sigma2):
    """Gram matrix of exp(-|x_i - x_j|^2 / (2 sigma2)); unit diagonal by construction."""
    cdef Py_ssize_t n = x.shape[0]
    cdef Py_ssize_t d = x.shape[1]
    out = np.empty((n, n), dtype=np.float64)
    cdef double[:, ::1] o = out
    cdef double inv = 1.0 / (2.0 * sigma2)
    cdef Py_ssize_t i, j, k
    cdef double acc, diff, v
    for i in range(n):
        o[i, i] = 1.0
        for j in range(i + 1, n):
            acc = 0.0
            for k in range(d):
                diff = x[i, k] - x[j, k]
                acc += diff * diff
            v = exp(-acc * inv)
            o[i, j] = v
            o[j, i] = v
    return out
