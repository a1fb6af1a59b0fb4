"""Shared helpers: brute-force dense oracles and tiny fixture writers."""

import numpy as np


def dense_sq_dists(X):
    X = np.atleast_2d(X)
    return ((X[:, None, :] - X[None, :, :]) ** 2).sum(-1)


def dense_gram(X, t):
    return np.exp(-dense_sq_dists(X) / (2.0 * t))


def dense_mll(X, Y, t, sigma2):
    """Marginal log-likelihood through an explicit inverse and determinant."""
    K = dense_gram(X, t)
    A = K + sigma2 * np.eye(K.shape[0])
    _, logdet = np.linalg.slogdet(A)
    quad = Y @ np.linalg.solve(A, Y)
    return -0.5 * quad - 0.5 * logdet - 0.5 * len(Y) * np.log(2 * np.pi)


def dense_predict(X, Y, t, sigma2, X_test):
    K = dense_gram(X, t)
    A = K + sigma2 * np.eye(K.shape[0])
    Xt = np.atleast_2d(X_test)
    cross = np.exp(-((X[:, None, :] - Xt[None, :, :]) ** 2).sum(-1) / (2.0 * t))
    return cross.T @ np.linalg.solve(A, Y)


def dense_node_moments(X, Y, t, sigma2):
    K = dense_gram(X, t)
    A = K + sigma2 * np.eye(K.shape[0])
    B = np.linalg.solve(A, K)
    mu = K @ np.linalg.solve(A, Y)
    Sigma = K - K @ B
    return mu, 0.5 * (Sigma + Sigma.T)


def random_instance(rng, n_max=50, d_max=4):
    """A random GP problem with moderate conditioning."""
    n = int(rng.integers(2, n_max + 1))
    d = int(rng.integers(1, d_max + 1))
    X = rng.random((n, d))
    Y = rng.standard_normal(n)
    t = float(np.exp(rng.uniform(np.log(1e-2), 0.0)))
    sigma2 = float(np.exp(rng.uniform(np.log(1e-3), 0.0)))
    return X, Y, t, sigma2


def write_pgm(path, arr):
    """Binary (P5) 8-bit PGM writer for loader tests."""
    arr = np.asarray(arr, dtype=np.uint8)
    h, w = arr.shape
    with open(path, "wb") as fh:
        fh.write(b"P5\n%d %d\n255\n" % (w, h))
        fh.write(arr.tobytes())
