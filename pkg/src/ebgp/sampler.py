"""Metropolis-Hastings sampling of the bandwidth posterior.

The target is p(t | X, Y) proportional to L(Y | X, t) p(t), sampled with a
Gaussian random walk on log t (the Jacobian enters the acceptance ratio, so
the chain targets the density in t).  A grid-based exhaustive posterior is
provided as a validation oracle, and a joint variant additionally samples
the noise variance under a uniform prior.
"""

from __future__ import annotations

import csv
import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.linalg import solve_triangular

from .exceptions import InvalidInputError, InvalidParameterError
from .kernel_gp import LOG_2PI, GramCache, _chol_shifted_into

NEG_INF = float("-inf")

SIGMA2_BOUNDS = (1e-4, 1.0)


@dataclass
class MHConfig:
    """Chain length, proposal scale and initialisation of the MH sampler.

    ``initial_t`` is either a positive bandwidth or "median-heuristic"
    (median pairwise squared distance, projected into the prior support).
    A zero ``proposal_step`` (or ``sigma2_step``) freezes that block, which
    keeps the chain clamped at its initial value; useful for tests.
    """

    n_iter: int = 3000
    burn_in: int = 1000
    proposal_step: float = 0.3
    seed: int = 0
    initial_t: float | str = "median-heuristic"
    sigma2_step: float = 0.3
    initial_sigma2: float = 0.01

    def __post_init__(self):
        if self.n_iter < 1:
            raise InvalidParameterError("n_iter must be >= 1")
        if not 0 <= self.burn_in < self.n_iter:
            raise InvalidParameterError("burn_in must satisfy 0 <= burn_in < n_iter")
        if self.proposal_step < 0 or self.sigma2_step < 0:
            raise InvalidParameterError("proposal steps must be nonnegative")


@dataclass
class PosteriorChain:
    """MH trace over the bandwidth (and optionally the noise variance).

    ``ts``, ``log_posteriors`` and ``accepted`` cover the full trace
    including burn-in; ``samples`` strips the burn-in.
    """

    ts: np.ndarray
    log_posteriors: np.ndarray
    accepted: np.ndarray
    burn_in: int
    sigma2s: np.ndarray | None = None
    sigma2_accepted: np.ndarray | None = None
    # (t, sigma2) -> presolved (K + sigma2 I)^{-1} Y for every visited state,
    # filled when the chain is run with collect_alphas=True
    alphas: dict | None = None

    @property
    def n_iter(self):
        return self.ts.size

    @property
    def samples(self):
        return self.ts[self.burn_in:]

    @property
    def sigma2_samples(self):
        return None if self.sigma2s is None else self.sigma2s[self.burn_in:]

    @property
    def acceptance_rate(self):
        if self.n_iter < 2:
            return 0.0
        return float(self.accepted[1:].sum() / (self.n_iter - 1))

    @property
    def sigma2_acceptance_rate(self):
        if self.sigma2_accepted is None or self.n_iter < 2:
            return None
        return float(self.sigma2_accepted[1:].sum() / (self.n_iter - 1))

    def to_csv(self, path):
        """Dump the full trace as CSV (iter, t, [sigma2,] log_posterior, accepted)."""
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            if self.sigma2s is None:
                writer.writerow(["iter", "t", "log_posterior", "accepted"])
                for i in range(self.n_iter):
                    writer.writerow([i, repr(float(self.ts[i])),
                                     repr(float(self.log_posteriors[i])),
                                     int(self.accepted[i])])
            else:
                writer.writerow(["iter", "t", "sigma2", "log_posterior", "accepted"])
                for i in range(self.n_iter):
                    writer.writerow([i, repr(float(self.ts[i])), repr(float(self.sigma2s[i])),
                                     repr(float(self.log_posteriors[i])),
                                     int(self.accepted[i])])


def metropolis_accept(log_ratio, u):
    """Metropolis acceptance decision for a symmetric-on-the-sampling-scale move."""
    if log_ratio >= 0.0:
        return True
    if u <= 0.0:
        return True
    return math.log(u) < log_ratio


def random_walk_mh(log_target, x0, step, n_iter, seed=0):
    """Generic Gaussian random-walk MH chain for a scalar log-target.

    Returns (states, accepted) arrays of length n_iter; the first state is
    x0 and each subsequent step draws one proposal and one uniform.
    """
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    x = float(x0)
    lt = log_target(x)
    if lt == NEG_INF:
        raise InvalidParameterError("initial state has zero target density")
    xs = np.empty(n_iter)
    accepted = np.zeros(n_iter, dtype=bool)
    xs[0] = x
    for i in range(1, n_iter):
        prop = x + step * rng.standard_normal()
        u = rng.random()
        lt_prop = log_target(prop)
        if lt_prop != NEG_INF and metropolis_accept(lt_prop - lt, u):
            x, lt = prop, lt_prop
            accepted[i] = True
        xs[i] = x
    return xs, accepted


def _make_loglik(cache, Y):
    """Marginal log-likelihood evaluator sharing one factorisation buffer.

    Returns (loglik, last_alpha); ``last_alpha`` presolves the weights of
    the most recent evaluation and must be called before the next one (the
    triangular factor lives in a reused buffer).
    """
    Y = np.asarray(Y, dtype=np.float64).ravel()
    n = Y.size
    const = -0.5 * n * LOG_2PI
    state = {}

    def loglik(t, sigma2):
        K = cache.gram(t)
        if "work" not in state:
            state["work"] = np.empty_like(K)
        L = _chol_shifted_into(K, sigma2, state["work"])
        beta = solve_triangular(L, Y, lower=True, check_finite=False)
        state["L"] = L
        state["beta"] = beta
        return float(-0.5 * beta @ beta - np.log(np.diag(L)).sum() + const)

    def last_alpha():
        return solve_triangular(state["L"], state["beta"], lower=True,
                                trans="T", check_finite=False)

    return loglik, last_alpha


def _shared_cache(prior_logdensity, X):
    cache = getattr(prior_logdensity, "gram_cache", None)
    if cache is not None and cache.X.shape == np.shape(X) and np.array_equal(cache.X, X):
        return cache
    return GramCache(X)


def _resolve_initial_t(config, prior_logdensity, cache):
    if isinstance(config.initial_t, str):
        if config.initial_t != "median-heuristic":
            raise InvalidParameterError(f"unknown initial_t {config.initial_t!r}")
        t0 = cache.median_sq_dist()
        if t0 <= 0.0:
            warnings.warn("median-heuristic bandwidth is degenerate (zero)")
        support = getattr(prior_logdensity, "support", None)
        if support is not None:
            lo, hi = support
            floor = lo * (1.0 + 1e-9) if lo > 0.0 else 0.0
            t0 = min(max(t0, floor), hi)
        if t0 <= 0.0:
            raise InvalidParameterError(
                "median-heuristic initialisation failed (degenerate distances)"
            )
        return t0
    t0 = float(config.initial_t)
    if t0 <= 0.0:
        raise InvalidParameterError(f"initial_t must be positive, got {t0}")
    return t0


def _sample(X, Y, prior_logdensity, config, *, sigma2=None, joint=False,
            sigma2_bounds=SIGMA2_BOUNDS, collect_alphas=False):
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    Y = np.asarray(Y, dtype=np.float64).ravel()
    if X.shape[0] != Y.size:
        raise InvalidInputError("X and Y disagree on the sample size")
    cache = _shared_cache(prior_logdensity, X)
    loglik, last_alpha = _make_loglik(cache, Y)
    rng = np.random.default_rng(config.seed)

    t = _resolve_initial_t(config, prior_logdensity, cache)
    lp = prior_logdensity(t)
    if lp == NEG_INF:
        raise InvalidParameterError(f"initial bandwidth {t} is outside the prior support")
    if joint:
        s2 = float(config.initial_sigma2)
        lo_s, hi_s = sigma2_bounds
        if not lo_s <= s2 <= hi_s:
            raise InvalidParameterError(
                f"initial sigma2 {s2} outside the prior range [{lo_s}, {hi_s}]"
            )
    else:
        s2 = float(sigma2)
        if s2 <= 0.0:
            raise InvalidParameterError(f"sigma2 must be positive, got {s2}")
    ll = loglik(t, s2)
    alphas = None
    if collect_alphas:
        alphas = {(t, s2): last_alpha()}

    n_iter = config.n_iter
    ts = np.empty(n_iter)
    logpost = np.empty(n_iter)
    accepted = np.zeros(n_iter, dtype=bool)
    sigma2s = np.empty(n_iter) if joint else None
    sigma2_accepted = np.zeros(n_iter, dtype=bool) if joint else None

    ts[0] = t
    logpost[0] = ll + lp
    if joint:
        sigma2s[0] = s2

    theta = math.log(t)
    for i in range(1, n_iter):
        if config.proposal_step > 0.0:
            theta_prop = theta + config.proposal_step * rng.standard_normal()
            u = rng.random()
            t_prop = math.exp(theta_prop)
            lp_prop = prior_logdensity(t_prop)
            if lp_prop != NEG_INF:
                ll_prop = loglik(t_prop, s2)
                log_ratio = (ll_prop + lp_prop + theta_prop) - (ll + lp + theta)
                if metropolis_accept(log_ratio, u):
                    theta, t, lp, ll = theta_prop, t_prop, lp_prop, ll_prop
                    accepted[i] = True
                    if alphas is not None:
                        alphas[(t, s2)] = last_alpha()
        if joint and config.sigma2_step > 0.0:
            ls_prop = math.log(s2) + config.sigma2_step * rng.standard_normal()
            u = rng.random()
            s2_prop = math.exp(ls_prop)
            if sigma2_bounds[0] <= s2_prop <= sigma2_bounds[1]:
                ll_prop = loglik(t, s2_prop)
                log_ratio = (ll_prop + ls_prop) - (ll + math.log(s2))
                if metropolis_accept(log_ratio, u):
                    s2, ll = s2_prop, ll_prop
                    sigma2_accepted[i] = True
                    if alphas is not None:
                        alphas[(t, s2)] = last_alpha()
        ts[i] = t
        logpost[i] = ll + lp
        if joint:
            sigma2s[i] = s2

    return PosteriorChain(ts=ts, log_posteriors=logpost, accepted=accepted,
                          burn_in=config.burn_in, sigma2s=sigma2s,
                          sigma2_accepted=sigma2_accepted, alphas=alphas)


def mh_sample_bandwidth(X, Y, prior_logdensity, sigma2, config,
                        collect_alphas=False):
    """Sample the bandwidth posterior at fixed noise variance.

    ``prior_logdensity`` is any callable t -> log density (possibly
    unnormalised, -inf outside its support); proposals landing outside the
    support are rejected without a likelihood evaluation.  The chain is
    deterministic given ``config.seed``.  ``collect_alphas`` additionally
    stores the presolved weights of every visited state so posterior-mean
    prediction can skip the refactorisations.
    """
    return _sample(X, Y, prior_logdensity, config, sigma2=sigma2, joint=False,
                   collect_alphas=collect_alphas)


def mh_sample_joint(X, Y, prior_logdensity, config, sigma2_bounds=SIGMA2_BOUNDS,
                    collect_alphas=False):
    """Blockwise MH over (bandwidth, noise variance).

    Alternates a log-t update with a log-sigma2 update under a uniform prior
    for sigma2 on ``sigma2_bounds``.  With ``config.sigma2_step == 0`` the
    noise block is skipped entirely, so the t-chain coincides with
    :func:`mh_sample_bandwidth` run at ``config.initial_sigma2``.
    """
    return _sample(X, Y, prior_logdensity, config, joint=True,
                   sigma2_bounds=sigma2_bounds, collect_alphas=collect_alphas)


def grid_posterior(X, Y, prior_logdensity, sigma2, t_grid):
    """Exhaustive normalised posterior over a fixed bandwidth grid.

    Softmax of log-likelihood plus log-prior with log-sum-exp stabilisation;
    the result sums to one and is invariant to constant shifts of the
    log-target.
    """
    t_grid = np.asarray(t_grid, dtype=np.float64).ravel()
    if t_grid.size < 2:
        raise InvalidInputError("grid_posterior needs at least 2 grid points")
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    Y = np.asarray(Y, dtype=np.float64).ravel()
    cache = _shared_cache(prior_logdensity, X)
    loglik, _ = _make_loglik(cache, Y)
    logs = np.empty(t_grid.size)
    for i, t in enumerate(t_grid):
        lp = prior_logdensity(float(t))
        logs[i] = NEG_INF if lp == NEG_INF else lp + loglik(float(t), sigma2)
    if np.all(np.isneginf(logs)):
        raise InvalidInputError("all grid points have zero posterior density")
    m = np.max(logs)
    w = np.exp(logs - m)
    probs = w / w.sum()
    return probs
