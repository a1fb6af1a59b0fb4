"""End-to-end regression estimators.

The two Bayesian estimators average the GP posterior mean over an MH chain
of bandwidths (data-driven prior or rescaled Gamma prior); the baselines
pick a single bandwidth by marginal likelihood, by the median heuristic, or
by cross-validated ridge regression, and the trivial single-point baseline
simply memorises its targets.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.linalg import cho_solve

from . import _core
from .datagen import Dataset
from .exceptions import InvalidInputError, InvalidParameterError
from .kernel_gp import (
    GramCache,
    KernelParams,
    _chol_shifted,
    fit_gp,
    marginal_log_likelihood,
    posterior_predict,
)
from .manifold_stats import DEGENERATE_RATIO, KnnConfig, estimate_dimension
from .priors import RescaledGammaPrior, empirical_bayes_prior
from .sampler import MHConfig, mh_sample_bandwidth, mh_sample_joint
from .seeding import derive_seed

METHODS = ("eb-gp", "gamma-gp", "gp-mle", "gp-median", "kernel-ridge-cv",
           "single-point")


def default_bandwidth_grid(num=60, lo=1e-4, hi=1.0):
    """Log-spaced bandwidth grid used by the MLE and ridge-CV baselines."""
    return np.geomspace(lo, hi, num)


@dataclass
class EstimatorConfig:
    """Method selection plus every knob the individual estimators read.

    ``sigma2`` is the observation-noise variance, or "infer" to sample it
    jointly (eb-gp only).  ``seed`` drives the method-internal randomness
    (T_n subset, CV split, dimension-estimator anchor); the MH chain has its
    own seed inside ``mh``.
    """

    method: str = "eb-gp"
    sigma2: float | str = 0.01
    a0: float = 1.0
    b0: float = 1.0
    gamma1: float = 0.25
    gamma2: float = 0.25
    mh: MHConfig = field(default_factory=MHConfig)
    rho: float | None = None
    cv_grid: np.ndarray | None = None
    cv_fraction: float = 0.1
    cv_indices: np.ndarray | None = None
    truncation: float | None = None
    affinity_variant: str = "arithmetic"
    seed: int = 0

    def __post_init__(self):
        if self.method not in METHODS:
            raise InvalidParameterError(
                f"unknown method {self.method!r}; choose from {METHODS}"
            )
        if isinstance(self.sigma2, str):
            if self.sigma2 != "infer":
                raise InvalidParameterError(f"sigma2 must be positive or 'infer'")
            if self.method != "eb-gp":
                raise InvalidParameterError("sigma2='infer' is supported for eb-gp only")
        elif not self.sigma2 > 0.0:
            raise InvalidParameterError(f"sigma2 must be positive, got {self.sigma2}")
        if not 0.0 < self.cv_fraction < 1.0:
            raise InvalidParameterError("cv_fraction must be in (0, 1)")


@dataclass
class Prediction:
    """Posterior-mean estimates on the test (and training) points.

    ``bandwidths`` holds the post-burn-in chain for the Bayesian methods and
    the single selected bandwidth otherwise.  Truncated variants are filled
    by :func:`truncate_prediction`.
    """

    test_means: np.ndarray | None
    train_means: np.ndarray | None = None
    bandwidths: np.ndarray | None = None
    sigma2s: np.ndarray | None = None
    acceptance_rate: float | None = None
    truncation: float | None = None
    truncated_test_means: np.ndarray | None = None
    truncated_train_means: np.ndarray | None = None
    chain: object = field(default=None, repr=False)


def truncate_prediction(pred, M):
    """Clamp the predictions elementwise to [-M, M]."""
    if not M > 0.0:
        raise InvalidParameterError(f"truncation level must be positive, got {M}")
    clip = lambda a: None if a is None else np.clip(a, -M, M)
    return replace(pred, truncation=M,
                   truncated_test_means=clip(pred.test_means),
                   truncated_train_means=clip(pred.train_means))


def _as_xy(train):
    if isinstance(train, Dataset):
        return train.X, train.Y
    X, Y = train
    return (np.atleast_2d(np.asarray(X, dtype=np.float64)),
            np.asarray(Y, dtype=np.float64).ravel())


def _chain_posterior_mean(X, Y, chain, sigma2, X_test, cache):
    """Average the conditional posterior mean over the (t, sigma2) chain.

    Rejected proposals repeat the previous state bit-for-bit, so the chain
    is collapsed to unique states with multiplicities before refactorising.
    """
    ts = chain.samples
    s2s = chain.sigma2_samples
    if s2s is None:
        s2s = np.full(ts.size, float(sigma2))
    weights = {}
    for t, s2 in zip(ts, s2s):
        key = (float(t), float(s2))
        weights[key] = weights.get(key, 0) + 1
    n = X.shape[0]
    train_acc = np.zeros(n)
    test_acc = None
    cross_sq = None
    cross_buf = None
    if X_test is not None:
        X_test = np.atleast_2d(np.asarray(X_test, dtype=np.float64))
        if X_test.shape[1] != X.shape[1]:
            raise InvalidInputError("test points disagree with training dimension")
        cross_sq = _core.cross_sq_dists(X, X_test)
        cross_buf = np.empty_like(cross_sq)
        test_acc = np.zeros(X_test.shape[0])
    for (t, s2), w in weights.items():
        K = cache.gram(t)
        if chain.alphas is not None and (t, s2) in chain.alphas:
            alpha = chain.alphas[(t, s2)]
        else:
            L = _chol_shifted(K, s2)
            alpha = cho_solve((L, True), Y, check_finite=False)
        train_acc += w * (K @ alpha)
        if test_acc is not None:
            Kx = _core.gram_from_sq_dists(cross_sq, t, out=cross_buf)
            test_acc += w * (Kx.T @ alpha)
    B = ts.size
    train_acc /= B
    if test_acc is not None:
        test_acc /= B
    return train_acc, test_acc


def fit_predict_eb_gp(train, X_test, config):
    """GP regression with the data-driven bandwidth prior (the main method).

    Builds T_n and the affinity statistic from the predictors, samples the
    bandwidth posterior by MH and averages the conditional posterior means
    over the post-burn-in chain.  With ``sigma2='infer'`` the noise variance
    is sampled jointly under a uniform prior.
    """
    X, Y = _as_xy(train)
    if X.shape[0] < 2:
        raise InvalidInputError("eb-gp needs at least 2 training points")
    prior = empirical_bayes_prior(
        X, a0=config.a0, b0=config.b0, gamma1=config.gamma1,
        knn=KnnConfig(gamma2=config.gamma2),
        variant=config.affinity_variant,
        seed=derive_seed(config.seed, "tn-subset"),
    )
    cache = prior.gram_cache
    if config.sigma2 == "infer":
        chain = mh_sample_joint(X, Y, prior, config.mh, collect_alphas=True)
        train_means, test_means = _chain_posterior_mean(
            X, Y, chain, None, X_test, cache)
    else:
        chain = mh_sample_bandwidth(X, Y, prior, config.sigma2, config.mh,
                                    collect_alphas=True)
        train_means, test_means = _chain_posterior_mean(
            X, Y, chain, config.sigma2, X_test, cache)
    return Prediction(test_means=test_means, train_means=train_means,
                      bandwidths=chain.samples.copy(),
                      sigma2s=None if chain.sigma2_samples is None
                      else chain.sigma2_samples.copy(),
                      acceptance_rate=chain.acceptance_rate, chain=chain)


def fit_predict_gamma_gp(train, X_test, config):
    """GP regression with the rescaled Gamma bandwidth prior.

    The intrinsic dimension comes from ``config.rho`` when supplied and is
    otherwise re-estimated from the training predictors with this run's
    seed.
    """
    X, Y = _as_xy(train)
    if X.shape[0] < 2:
        raise InvalidInputError("gamma-gp needs at least 2 training points")
    rho = config.rho
    if rho is None:
        est = estimate_dimension(X, seed=derive_seed(config.seed, "dim-anchor"))
        if est == DEGENERATE_RATIO:
            raise InvalidInputError(
                "dimension estimation degenerate; supply rho explicitly"
            )
        rho = float(est)
    prior = RescaledGammaPrior(rho=rho, a0=config.a0, b0=config.b0)
    if config.sigma2 == "infer":
        raise InvalidParameterError("sigma2='infer' is supported for eb-gp only")
    cache = GramCache(X)
    prior_with_cache = _AttachCache(prior, cache)
    chain = mh_sample_bandwidth(X, Y, prior_with_cache, config.sigma2,
                                config.mh, collect_alphas=True)
    train_means, test_means = _chain_posterior_mean(
        X, Y, chain, config.sigma2, X_test, cache)
    return Prediction(test_means=test_means, train_means=train_means,
                      bandwidths=chain.samples.copy(),
                      acceptance_rate=chain.acceptance_rate, chain=chain)


class _AttachCache:
    """Expose a prior callable together with a shared Gram cache."""

    def __init__(self, prior, cache):
        self._prior = prior
        self.gram_cache = cache
        self.support = getattr(prior, "support", None)

    def __call__(self, t):
        return self._prior(t)


def select_bandwidth_mle(X, Y, sigma2, grid):
    """Bandwidth maximising the marginal likelihood over a grid (ties -> smallest)."""
    grid = np.asarray(grid, dtype=np.float64).ravel()
    if grid.size == 0:
        raise InvalidInputError("bandwidth grid is empty")
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    cache = GramCache(X)
    lls = np.array([
        marginal_log_likelihood(X, Y, KernelParams(float(t), sigma2),
                                gram=cache.gram(float(t)))
        for t in grid
    ])
    best = lls.max()
    return float(grid[lls == best].min())


def select_bandwidth_median(X):
    """Median of the pairwise squared Euclidean distances."""
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    if X.shape[0] < 2:
        raise InvalidInputError("median heuristic needs at least 2 points")
    med = GramCache(X).median_sq_dist()
    if med == 0.0:
        import warnings

        warnings.warn("median heuristic is degenerate: all pairwise distances zero")
    return med


def _fixed_bandwidth_prediction(X, Y, t, sigma2, X_test):
    fit = fit_gp(X, Y, KernelParams(t, sigma2))
    train_means = posterior_predict(fit, X)
    test_means = None if X_test is None else posterior_predict(fit, X_test)
    return Prediction(test_means=test_means, train_means=train_means,
                      bandwidths=np.array([t]))


def fit_predict_gp_mle(train, X_test, config):
    """GP with the bandwidth chosen by marginal-likelihood maximisation."""
    X, Y = _as_xy(train)
    grid = config.cv_grid if config.cv_grid is not None else default_bandwidth_grid()
    t = select_bandwidth_mle(X, Y, config.sigma2, grid)
    return _fixed_bandwidth_prediction(X, Y, t, config.sigma2, X_test)


def fit_predict_gp_median(train, X_test, config):
    """GP with the median-heuristic bandwidth (non-adaptive baseline)."""
    X, Y = _as_xy(train)
    t = select_bandwidth_median(X)
    return _fixed_bandwidth_prediction(X, Y, t, config.sigma2, X_test)


def fit_predict_kernel_ridge_cv(train, X_test, config):
    """Kernel ridge regression with a held-out-set bandwidth choice.

    Splits off ceil(cv_fraction * n) validation points, scores each grid
    bandwidth by validation squared error of the ridge predictor (the noise
    variance acts as the ridge parameter), then refits on the full training
    set at the winning bandwidth.
    """
    X, Y = _as_xy(train)
    n = X.shape[0]
    n_val = int(math.ceil(config.cv_fraction * n))
    if n_val < 1 or n - n_val < 1:
        raise InvalidParameterError(
            f"cv split degenerate: {n_val} validation points out of {n}"
        )
    if config.cv_indices is not None:
        val_idx = np.asarray(config.cv_indices, dtype=np.intp)
    else:
        rng = np.random.default_rng(derive_seed(config.seed, "cv-split"))
        val_idx = rng.permutation(n)[:n_val]
    mask = np.zeros(n, dtype=bool)
    mask[val_idx] = True
    X_tr, Y_tr = X[~mask], Y[~mask]
    X_val, Y_val = X[mask], Y[mask]
    grid = config.cv_grid if config.cv_grid is not None else default_bandwidth_grid()
    grid = np.asarray(grid, dtype=np.float64).ravel()
    if grid.size == 0:
        raise InvalidInputError("bandwidth grid is empty")
    cache = GramCache(X_tr)
    cross_sq = _core.cross_sq_dists(X_tr, X_val)
    errs = np.empty(grid.size)
    for i, t in enumerate(grid):
        K = cache.gram(float(t))
        L = _chol_shifted(K, config.sigma2)
        alpha = cho_solve((L, True), Y_tr, check_finite=False)
        pred = _core.gram_from_sq_dists(cross_sq, float(t)).T @ alpha
        errs[i] = float(np.mean((pred - Y_val) ** 2))
    best = errs.min()
    t_star = float(grid[errs == best].min())
    return _fixed_bandwidth_prediction(X, Y, t_star, config.sigma2, X_test)


def fit_predict_single_point(train, X_test, config):
    """Memorising baseline: predicts the observed response at each training
    point and exposes no out-of-sample prediction."""
    _, Y = _as_xy(train)
    return Prediction(test_means=None, train_means=Y.copy())


_DISPATCH = {
    "eb-gp": fit_predict_eb_gp,
    "gamma-gp": fit_predict_gamma_gp,
    "gp-mle": fit_predict_gp_mle,
    "gp-median": fit_predict_gp_median,
    "kernel-ridge-cv": fit_predict_kernel_ridge_cv,
    "single-point": fit_predict_single_point,
}


def fit_predict(train, X_test, config):
    """Run the configured estimator; applies truncation when configured."""
    pred = _DISPATCH[config.method](train, X_test, config)
    if config.truncation is not None:
        pred = truncate_prediction(pred, config.truncation)
    return pred
