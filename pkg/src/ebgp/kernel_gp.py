"""Squared-exponential kernel, Gram factorisation and GP posterior formulas.

The kernel is h_t(x, x') = exp(-||x - x'||^2 / (2 t)) with bandwidth t in
squared-length units.  All solves go through a cached Cholesky factor of
K_t + sigma^2 I; no explicit inverses or determinants.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_solve, cholesky, solve_triangular
from scipy.linalg.lapack import dpotrf

from . import _core
from .exceptions import InvalidInputError, InvalidParameterError, NumericalFailureError

# Escalating diagonal jitter used when K_t + sigma^2 I fails to factorise
# (near-duplicate points at large t can make K_t numerically rank-deficient
# while sigma^2 is tiny).
JITTER_LADDER = (0.0, 1e-12, 1e-10, 1e-8)

LOG_2PI = math.log(2.0 * math.pi)


@dataclass(frozen=True)
class KernelParams:
    """Bandwidth and observation-noise variance of the GP model."""

    bandwidth: float
    noise_variance: float

    def __post_init__(self):
        if not (self.bandwidth > 0.0 and math.isfinite(self.bandwidth)):
            raise InvalidParameterError(f"bandwidth must be positive, got {self.bandwidth}")
        if not (self.noise_variance > 0.0 and math.isfinite(self.noise_variance)):
            raise InvalidParameterError(
                f"noise_variance must be positive, got {self.noise_variance}"
            )


def kernel_eval(x, y, t):
    """Kernel affinity exp(-||x - y||^2 / (2 t)) of two points.

    Symmetric in (x, y) and equal to 1 when x == y.
    """
    if not t > 0.0:
        raise InvalidParameterError(f"bandwidth must be positive, got {t}")
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    d = x - y
    return float(np.exp(-float(d @ d) / (2.0 * t)))


def gram_matrix(X, t):
    """Dense n-by-n kernel matrix of the rows of X at bandwidth t.

    Symmetric with unit diagonal.  Construction is O(n^2 D); no low-rank
    approximation.
    """
    if not t > 0.0:
        raise InvalidParameterError(f"bandwidth must be positive, got {t}")
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    if X.shape[0] < 1 or X.size == 0:
        raise InvalidInputError("gram_matrix needs at least one point")
    S = _core.pairwise_sq_dists(X)
    return _core.gram_from_sq_dists(S, t)


def cross_gram(X, Z, t):
    """n-by-m kernel matrix between rows of X and rows of Z."""
    if not t > 0.0:
        raise InvalidParameterError(f"bandwidth must be positive, got {t}")
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    Z = np.atleast_2d(np.asarray(Z, dtype=np.float64))
    if X.shape[1] != Z.shape[1]:
        raise InvalidInputError(
            f"dimension mismatch: {X.shape[1]} vs {Z.shape[1]} columns"
        )
    S = _core.cross_sq_dists(X, Z)
    return _core.gram_from_sq_dists(S, t)


def _chol_shifted(K, shift):
    """Lower Cholesky factor of K + shift*I, escalating jitter on failure."""
    n = K.shape[0]
    for jitter in JITTER_LADDER:
        M = K.copy()
        M.flat[:: n + 1] += shift + jitter
        try:
            return cholesky(M, lower=True, overwrite_a=True, check_finite=False)
        except np.linalg.LinAlgError:
            continue
    raise NumericalFailureError(
        f"Cholesky factorisation failed after jitter escalation {JITTER_LADDER}",
        attempts=JITTER_LADDER,
    )


def _chol_shifted_into(K, shift, work):
    """Like :func:`_chol_shifted` but factorising in a caller-owned buffer.

    Only the lower triangle of the result is meaningful (the strict upper
    triangle holds stale data); every downstream solve here reads the lower
    triangle only.  K + shift*I is symmetric, so handing LAPACK the
    transposed view factorises in place without a layout copy.
    """
    n = K.shape[0]
    for jitter in JITTER_LADDER:
        np.copyto(work, K)
        work.flat[:: n + 1] += shift + jitter
        L, info = dpotrf(work.T, lower=1, overwrite_a=1)
        if info == 0:
            return L
    raise NumericalFailureError(
        f"Cholesky factorisation failed after jitter escalation {JITTER_LADDER}",
        attempts=JITTER_LADDER,
    )


@dataclass(frozen=True)
class GPFit:
    """Cached factorisation of K_t + sigma^2 I at a fixed bandwidth.

    Immutable after construction; safe to share read-only across threads.
    ``chol_lower`` is the lower-triangular factor and ``alpha`` solves
    (K_t + sigma^2 I) alpha = Y.
    """

    train_inputs: np.ndarray
    train_targets: np.ndarray
    params: KernelParams
    chol_lower: np.ndarray
    alpha: np.ndarray


def fit_gp(X, Y, params, gram=None):
    """Factorise K_t + sigma^2 I and pre-solve for the training targets.

    ``gram`` may supply a precomputed kernel matrix for the rows of X.
    """
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    Y = np.asarray(Y, dtype=np.float64).ravel()
    if X.shape[0] != Y.shape[0]:
        raise InvalidInputError(f"X has {X.shape[0]} rows but Y has {Y.shape[0]} entries")
    K = gram_matrix(X, params.bandwidth) if gram is None else gram
    L = _chol_shifted(K, params.noise_variance)
    alpha = cho_solve((L, True), Y, check_finite=False)
    return GPFit(train_inputs=X, train_targets=Y, params=params,
                 chol_lower=L, alpha=alpha)


def marginal_log_likelihood(X, Y, params, gram=None):
    """Gaussian marginal log-likelihood of Y under the GP at ``params``.

    Evaluates -1/2 Y^T (K_t + s^2 I)^{-1} Y - 1/2 log|K_t + s^2 I|
    - (n/2) log(2 pi) through the triangular factor.
    """
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    Y = np.asarray(Y, dtype=np.float64).ravel()
    if X.shape[0] != Y.shape[0]:
        raise InvalidInputError(f"X has {X.shape[0]} rows but Y has {Y.shape[0]} entries")
    K = gram_matrix(X, params.bandwidth) if gram is None else gram
    return _mll_from_gram(K, Y, params.noise_variance)


def _mll_from_gram(K, Y, noise_variance):
    n = K.shape[0]
    L = _chol_shifted(K, noise_variance)
    beta = solve_triangular(L, Y, lower=True, check_finite=False)
    logdet_half = float(np.log(np.diag(L)).sum())
    return float(-0.5 * beta @ beta - logdet_half - 0.5 * n * LOG_2PI)


def posterior_predict(fit, X_test):
    """Posterior predictive mean at each row of X_test.

    Returns h_t(X, x*)^T alpha, the conditional mean E[f^t(x*) | X, Y].
    """
    X_test = np.atleast_2d(np.asarray(X_test, dtype=np.float64))
    if X_test.shape[0] < 1 or X_test.size == 0:
        raise InvalidInputError("X_test must contain at least one point")
    if X_test.shape[1] != fit.train_inputs.shape[1]:
        raise InvalidInputError(
            f"test points have {X_test.shape[1]} coordinates, "
            f"fit expects {fit.train_inputs.shape[1]}"
        )
    Kx = cross_gram(fit.train_inputs, X_test, fit.params.bandwidth)
    return Kx.T @ fit.alpha


def posterior_node_moments(fit):
    """Posterior mean and covariance of the latent values at the training inputs.

    mu = K_t (K_t + s^2 I)^{-1} Y and Sigma = K_t - K_t (K_t + s^2 I)^{-1} K_t;
    the trace of Sigma is bounded by n sigma^2.
    """
    K = gram_matrix(fit.train_inputs, fit.params.bandwidth)
    mu = K @ fit.alpha
    B = cho_solve((fit.chol_lower, True), K, check_finite=False)
    Sigma = K - K @ B
    Sigma = 0.5 * (Sigma + Sigma.T)
    return mu, Sigma


class GramCache:
    """Pairwise squared distances of a fixed point set, plus a one-slot Gram memo.

    The memo makes prior (affinity) and likelihood evaluations at the same
    proposed bandwidth share a single Gram construction inside MCMC loops.
    The array returned by :meth:`gram` is owned by the cache and overwritten
    by the next call with a different bandwidth; copy it to retain it.
    """

    def __init__(self, X):
        self.X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        self._sq = None
        self._memo_t = None
        self._memo_K = None

    @property
    def n(self):
        return self.X.shape[0]

    @property
    def sq_dists(self):
        if self._sq is None:
            self._sq = _core.pairwise_sq_dists(self.X)
        return self._sq

    def gram(self, t):
        if not t > 0.0:
            raise InvalidParameterError(f"bandwidth must be positive, got {t}")
        if self._memo_t is not None and t == self._memo_t:
            return self._memo_K
        S = self.sq_dists
        if self._memo_K is None:
            self._memo_K = np.empty_like(S)
        _core.gram_from_sq_dists(S, t, out=self._memo_K)
        self._memo_t = t
        return self._memo_K

    def affinity(self, t):
        """Arithmetic averaged kernel affinity at bandwidth t."""
        K = self.gram(t)
        n = self.n
        return float((K.sum() - n) / (n * (n - 1)))

    def harmonic_affinity(self, t):
        """Harmonic-mean averaged kernel affinity at bandwidth t."""
        K = self.gram(t)
        n = self.n
        V = (K.sum(axis=1) - 1.0) / (n - 1)
        if np.any(V <= 0.0):
            return 0.0
        return float(1.0 / np.mean(1.0 / V))

    def median_sq_dist(self):
        """Median of the n(n-1)/2 pairwise squared distances."""
        iu = np.triu_indices(self.n, k=1)
        return float(np.median(self.sq_dists[iu]))
