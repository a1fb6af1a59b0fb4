# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled inner loops: pairwise distances, Gram assembly, affinity sums."""

import numpy as np

cimport numpy as cnp
from libc.math cimport exp

cnp.import_array()


def pairwise_sq_dists(X):
    """Exact squared Euclidean distances between all rows of X."""
    cdef double[:, ::1] x = np.ascontiguousarray(X, dtype=np.float64)
    cdef Py_ssize_t n = x.shape[0], D = x.shape[1]
    S = np.zeros((n, n), dtype=np.float64)
    cdef double[:, ::1] s = S
    cdef Py_ssize_t i, j, k
    cdef double acc, diff
    for i in range(n):
        for j in range(i + 1, n):
            acc = 0.0
            for k in range(D):
                diff = x[i, k] - x[j, k]
                acc += diff * diff
            s[i, j] = acc
            s[j, i] = acc
    return S


def cross_sq_dists(X, Z):
    """Squared Euclidean distances between rows of X (n) and rows of Z (m)."""
    cdef double[:, ::1] x = np.ascontiguousarray(X, dtype=np.float64)
    cdef double[:, ::1] z = np.ascontiguousarray(Z, dtype=np.float64)
    cdef Py_ssize_t n = x.shape[0], m = z.shape[0], D = x.shape[1]
    S = np.empty((n, m), dtype=np.float64)
    cdef double[:, ::1] s = S
    cdef Py_ssize_t i, j, k
    cdef double acc, diff
    for i in range(n):
        for j in range(m):
            acc = 0.0
            for k in range(D):
                diff = x[i, k] - z[j, k]
                acc += diff * diff
            s[i, j] = acc
    return S


def affinity_stats(S, t):
    """Arithmetic and harmonic averaged kernel affinity from squared distances.

    Single fused pass; no Gram matrix is materialised.
    """
    cdef double[:, ::1] sm = np.ascontiguousarray(S, dtype=np.float64)
    cdef Py_ssize_t n = sm.shape[0]
    cdef double scale = -1.0 / (2.0 * <double> t)
    rowsum = np.zeros(n, dtype=np.float64)
    cdef double[::1] rs = rowsum
    cdef Py_ssize_t i, j
    cdef double e
    for i in range(n):
        for j in range(i + 1, n):
            e = exp(sm[i, j] * scale)
            rs[i] += e
            rs[j] += e
    V = rowsum / (n - 1)
    arith = float(V.mean())
    if np.any(V <= 0.0):
        return arith, 0.0
    return arith, float(1.0 / np.mean(1.0 / V))
