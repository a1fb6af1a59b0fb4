"""Pure-NumPy implementations of the hot numerical kernels.

Mirrors the API of the compiled ``_kernels`` extension; selected at import
time by ``ebgp._core`` when the extension is unavailable or disabled.
"""

import numpy as np


def pairwise_sq_dists(X):
    """Exact squared Euclidean distances between all rows of X.

    Returns a symmetric (n, n) matrix with zero diagonal.  Distances are
    accumulated as differences (not the |x|^2 + |y|^2 - 2xy expansion) to
    keep them exact in double precision.
    """
    X = np.ascontiguousarray(X, dtype=np.float64)
    n = X.shape[0]
    S = np.empty((n, n), dtype=np.float64)
    for i in range(n):
        d = X[i] - X
        S[i] = (d * d).sum(axis=1)
    np.fill_diagonal(S, 0.0)
    return S


def cross_sq_dists(X, Z):
    """Squared Euclidean distances between rows of X (n) and rows of Z (m)."""
    X = np.ascontiguousarray(X, dtype=np.float64)
    Z = np.ascontiguousarray(Z, dtype=np.float64)
    n = X.shape[0]
    S = np.empty((n, Z.shape[0]), dtype=np.float64)
    for i in range(n):
        d = X[i] - Z
        S[i] = (d * d).sum(axis=1)
    return S


def gram_from_sq_dists(S, t, out=None):
    """exp(-S / (2 t)) evaluated elementwise, optionally into ``out``."""
    if out is None:
        out = np.empty_like(S)
    np.multiply(S, -1.0 / (2.0 * t), out=out)
    np.exp(out, out=out)
    return out


def affinity_stats(S, t):
    """Arithmetic and harmonic averaged kernel affinity from squared distances.

    Per-point affinities are V_i = mean_{j != i} exp(-S_ij / (2 t)).  Returns
    (mean of V_i, harmonic mean of V_i).  The harmonic mean is 0.0 when some
    V_i underflows to zero.
    """
    n = S.shape[0]
    K = np.exp(S / (-2.0 * t))
    V = (K.sum(axis=1) - 1.0) / (n - 1)
    arith = float(V.mean())
    if np.any(V <= 0.0):
        return arith, 0.0
    return arith, float(1.0 / np.mean(1.0 / V))
