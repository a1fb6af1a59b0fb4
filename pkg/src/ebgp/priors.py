"""Bandwidth priors: data-driven (empirical Bayes), rescaled Gamma, and the
polynomial-times-exponential envelope diagnostics that justify them.

The empirical-Bayes prior has unnormalised log-density
``-a0 log t - b0 / v(t)`` on the support ``(gamma1 * Tn^2, 1]`` where ``Tn``
is the averaged k-NN distance and ``v(t)`` an averaged kernel affinity.
The rescaled Gamma prior makes ``t^(-rho/2)`` Gamma-distributed and needs
the intrinsic dimension ``rho`` as an input.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.optimize import linprog

from .exceptions import InvalidInputError, InvalidParameterError, NumericalFailureError
from .kernel_gp import GramCache
from .manifold_stats import KnnConfig, subset_indices, tn_statistic

NEG_INF = float("-inf")

# Smallest fitted decay constant accepted as genuine exponential decay in the
# envelope diagnostics; a fit hitting (numerical) zero means the density has
# no exp(-K / t^(rho/2)) factor.
MIN_DECAY_CONSTANT = 1e-6


@dataclass
class EmpiricalBayesPrior:
    """Data-driven bandwidth prior built from k-NN and affinity statistics.

    Callable as an unnormalised log-density; evaluates to -inf outside the
    support ``(gamma1 * tn^2, 1]``.  ``affinity`` must be a pure function of
    the bandwidth.
    """

    a0: float
    b0: float
    gamma1: float
    tn: float
    affinity: Callable[[float], float]
    variant: str = "arithmetic"
    gram_cache: GramCache | None = field(default=None, repr=False)

    def __post_init__(self):
        for name in ("a0", "b0", "gamma1"):
            if not getattr(self, name) > 0.0:
                raise InvalidParameterError(f"{name} must be positive")
        if self.tn < 0.0:
            raise InvalidParameterError("tn must be nonnegative")
        if not self.support[0] < 1.0:
            raise InvalidParameterError(
                f"support lower bound {self.support[0]} must be below 1; "
                "the k-NN scale is too coarse for this sample"
            )

    @property
    def support(self):
        """(lower, upper) with the lower end open and the upper closed."""
        return (self.gamma1 * self.tn ** 2, 1.0)

    def __call__(self, t):
        lo, hi = self.support
        if not (lo < t <= hi):
            return NEG_INF
        v = self.affinity(t)
        if v <= 0.0:
            return NEG_INF
        return -self.a0 * math.log(t) - self.b0 / v


def empirical_bayes_prior(X, *, a0=1.0, b0=1.0, gamma1=0.25,
                          knn=KnnConfig(), variant="arithmetic", seed=0):
    """Build an :class:`EmpiricalBayesPrior` from a predictor matrix.

    Computes Tn over a seeded random subset (k and subset size follow the
    sample-size rules in :mod:`ebgp.manifold_stats`) and wires the affinity
    statistic through a shared :class:`~ebgp.kernel_gp.GramCache` so MCMC
    can reuse Gram matrices between prior and likelihood evaluations.
    """
    if variant not in ("arithmetic", "harmonic"):
        raise InvalidParameterError(f"unknown affinity variant {variant!r}")
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    n = X.shape[0]
    k, size = knn.resolve(n)
    subset = subset_indices(n, size, seed)
    tn = tn_statistic(X, subset, k)
    cache = GramCache(X)
    affinity = cache.affinity if variant == "arithmetic" else cache.harmonic_affinity
    return EmpiricalBayesPrior(a0=a0, b0=b0, gamma1=gamma1, tn=tn,
                               affinity=affinity, variant=variant,
                               gram_cache=cache)


@dataclass(frozen=True)
class RescaledGammaPrior:
    """Bandwidth prior under which t^(-rho/2) is Gamma(a0, b0) distributed."""

    rho: float
    a0: float = 1.0
    b0: float = 1.0
    normalized: bool = True

    def __post_init__(self):
        for name in ("rho", "a0", "b0"):
            if not getattr(self, name) > 0.0:
                raise InvalidParameterError(f"{name} must be positive")

    @property
    def support(self):
        return (0.0, math.inf)

    def __call__(self, t):
        if t <= 0.0:
            return NEG_INF
        half = 0.5 * self.rho
        val = -(half * (self.a0 - 1.0) + half + 1.0) * math.log(t) - self.b0 * t ** (-half)
        if self.normalized:
            val += math.log(half) + self.a0 * math.log(self.b0) - math.lgamma(self.a0)
        return val


def _adaptive_simpson(g, a, b, rtol, max_depth=40):
    """Adaptive composite Simpson rule on [a, b]."""

    def simpson(fa, fm, fb, h):
        return h / 6.0 * (fa + 4.0 * fm + fb)

    def recurse(a, m, b, fa, fm, fb, whole, depth):
        lm, rm = 0.5 * (a + m), 0.5 * (m + b)
        flm, frm = g(lm), g(rm)
        left = simpson(fa, flm, fm, m - a)
        right = simpson(fm, frm, fb, b - m)
        err = left + right - whole
        if depth <= 0 or abs(err) <= 15.0 * rtol * (abs(left + right) + 1e-300):
            return left + right + err / 15.0
        return (recurse(a, lm, m, fa, flm, fm, left, depth - 1)
                + recurse(m, rm, b, fm, frm, fb, right, depth - 1))

    m = 0.5 * (a + b)
    fa, fm, fb = g(a), g(m), g(b)
    whole = simpson(fa, fm, fb, b - a)
    return recurse(a, m, b, fa, fm, fb, whole, max_depth)


def log_normalizer(log_density, lower, upper, rtol=1e-6):
    """log of the integral of exp(log_density) over (lower, upper].

    Integrates on the log-t axis with adaptive Simpson; the density may be
    sharply decaying near the lower end of its support.
    """
    if not (0.0 < lower < upper):
        raise InvalidParameterError(f"bad integration range ({lower}, {upper}]")
    # stabilise by pulling out the peak value over a coarse scan
    xs = np.linspace(math.log(lower), math.log(upper), 200)
    vals = np.array([log_density(math.exp(x)) + x for x in xs])
    shift = float(np.max(vals))
    if not math.isfinite(shift):
        raise NumericalFailureError("density evaluates to -inf over the whole range")

    def g(x):
        lp = log_density(math.exp(x))
        if lp == NEG_INF:
            return 0.0
        return math.exp(lp + x - shift)

    integral = _adaptive_simpson(g, math.log(lower), math.log(upper), rtol)
    if not (integral > 0.0 and math.isfinite(integral)):
        raise NumericalFailureError(f"normalisation quadrature failed ({integral})")
    return math.log(integral) + shift


class NormalizedLogDensity:
    """Wrap a log-density with its numerically computed log-normaliser."""

    def __init__(self, log_density, lower, upper, rtol=1e-6):
        self.base = log_density
        self.log_z = log_normalizer(log_density, lower, upper, rtol=rtol)

    def __call__(self, t):
        val = self.base(t)
        return val if val == NEG_INF else val - self.log_z


def normalized(prior, rtol=1e-6):
    """Numerically normalised version of a prior over its finite support."""
    lo, hi = prior.support
    if not math.isfinite(hi):
        raise InvalidParameterError("normalisation needs a bounded support")
    return NormalizedLogDensity(prior, lo, hi, rtol=rtol)


@dataclass
class A3Report:
    """Result of the two-sided envelope diagnostic for a bandwidth prior.

    The lower check asks the density to dominate C1 t^(-a1) exp(-K1 t^(-rho/2))
    on a window around the theoretically optimal bandwidth scale; the upper
    check asks it to be dominated by the same functional form (with genuine
    exponential decay, K2 > 0) below that scale.  Constants are fitted by a
    minimax (Chebyshev) fit in log space, then shifted so the envelope is
    tight on the grid.
    """

    s: float
    rho: float
    n: int
    D: int
    lower_interval: tuple
    upper_interval: tuple
    lower_grid: np.ndarray
    lower_log_density: np.ndarray
    lower_ok: np.ndarray
    upper_grid: np.ndarray
    upper_log_density: np.ndarray
    upper_ok: np.ndarray
    constants: dict
    lower_pass: bool
    upper_pass: bool

    def summary(self):
        return (f"lower: {'pass' if self.lower_pass else 'FAIL'} "
                f"({int(self.lower_ok.sum())}/{self.lower_ok.size} points), "
                f"upper: {'pass' if self.upper_pass else 'FAIL'} "
                f"({int(self.upper_ok.sum())}/{self.upper_ok.size} points)")


def _chebyshev_envelope_fit(ts, ys, rho):
    """Minimax fit of y ~ c - a log t - K t^(-rho/2) with a, K >= 0.

    Returns (c, a, K, max_abs_residual) or None when the LP fails.
    """
    lt = np.log(ts)
    u = ts ** (-0.5 * rho)
    m = ts.size
    # variables: c, a, K, e
    A = np.zeros((2 * m, 4))
    b = np.zeros(2 * m)
    A[:m, 0] = -1.0
    A[:m, 1] = lt
    A[:m, 2] = u
    A[:m, 3] = -1.0
    b[:m] = -ys
    A[m:, 0] = 1.0
    A[m:, 1] = -lt
    A[m:, 2] = -u
    A[m:, 3] = -1.0
    b[m:] = ys
    res = linprog(c=[0.0, 0.0, 0.0, 1.0], A_ub=A, b_ub=b,
                  bounds=[(None, None), (0.0, None), (0.0, None), (0.0, None)],
                  method="highs")
    if not res.success:
        return None
    c, a, K, e = res.x
    return float(c), float(a), float(K), float(e)


def _envelope(ts, c, a, K, rho):
    return c - a * np.log(ts) - K * ts ** (-0.5 * rho)


def check_a3_bounds(prior_logdensity, s, rho, n, D, grid_size=30,
                    lower_grid=None, upper_grid=None):
    """Check the two-sided prior envelope at sample size n.

    ``prior_logdensity`` must be normalised (or consistently scaled; see
    :func:`normalized`).  Default grids follow the prescribed windows:
    the lower one is [1, 2] times n^(-2/(2s+rho)) (log n)^(2(1+D)/(2s+rho)),
    the upper one spans six decades below
    n^(-2/(2s+rho)) (log n)^(-4(1+D)/((2+rho/s) rho)).  Custom grids may be
    supplied to probe other ranges.
    """
    for name, val in (("s", s), ("rho", rho)):
        if not val > 0.0:
            raise InvalidParameterError(f"{name} must be positive")
    if n < 3 or D < 1:
        raise InvalidParameterError("need n >= 3 and D >= 1")
    logn = math.log(n)
    base = n ** (-2.0 / (2.0 * s + rho))
    r_lower = base * logn ** (2.0 * (1.0 + D) / (2.0 * s + rho))
    r_upper = base * logn ** (-4.0 * (1.0 + D) / ((2.0 + rho / s) * rho))
    lower_interval = (1.0 * r_lower, 2.0 * r_lower)
    upper_interval = (0.0, 1.0 * r_upper)
    if lower_grid is None:
        lower_grid = np.geomspace(lower_interval[0], lower_interval[1], grid_size)
    else:
        lower_grid = np.asarray(lower_grid, dtype=np.float64)
    if upper_grid is None:
        upper_grid = np.geomspace(upper_interval[1] * 1e-6, upper_interval[1], grid_size)
    else:
        upper_grid = np.asarray(upper_grid, dtype=np.float64)

    y_lo = np.array([prior_logdensity(float(t)) for t in lower_grid])
    y_up = np.array([prior_logdensity(float(t)) for t in upper_grid])

    constants = {"a1": None, "K1": None, "C1": None,
                 "a2": None, "K2": None, "C2": None}

    # lower envelope: fit on the finite points, shift down so it never
    # exceeds the density on the grid; points with zero density fail
    finite_lo = np.isfinite(y_lo)
    lower_ok = np.zeros(lower_grid.size, dtype=bool)
    if finite_lo.all():
        fit = _chebyshev_envelope_fit(lower_grid, y_lo, rho)
        if fit is not None:
            c, a, K, _ = fit
            model = _envelope(lower_grid, c, a, K, rho)
            c1 = c - float(np.max(model - y_lo))
            model = _envelope(lower_grid, c1, a, K, rho)
            constants.update(a1=a, K1=K, C1=math.exp(c1))
            lower_ok = y_lo >= model - 1e-9
    lower_pass = bool(lower_ok.all())

    # upper envelope: zero-density points dominate trivially; on the rest
    # the fitted decay constant must be genuinely positive
    finite_up = np.isfinite(y_up)
    upper_ok = ~finite_up
    decay_present = True
    if finite_up.any():
        ts = upper_grid[finite_up]
        fit = _chebyshev_envelope_fit(ts, y_up[finite_up], rho)
        if fit is None:
            decay_present = False
        else:
            c, a, K, _ = fit
            model = _envelope(ts, c, a, K, rho)
            c2 = c + float(np.max(y_up[finite_up] - model))
            model = _envelope(ts, c2, a, K, rho)
            constants.update(a2=a, K2=K, C2=math.exp(c2))
            upper_ok[finite_up] = y_up[finite_up] <= model + 1e-9
            decay_present = K >= MIN_DECAY_CONSTANT
    upper_pass = bool(upper_ok.all()) and decay_present

    return A3Report(s=s, rho=rho, n=n, D=D,
                    lower_interval=lower_interval, upper_interval=upper_interval,
                    lower_grid=lower_grid, lower_log_density=y_lo, lower_ok=lower_ok,
                    upper_grid=upper_grid, upper_log_density=y_up, upper_ok=upper_ok,
                    constants=constants, lower_pass=lower_pass, upper_pass=upper_pass)


def rate_exponent(s, rho):
    """Contraction-rate exponent s / (2s + rho)."""
    if not (s > 0.0 and rho > 0.0):
        raise InvalidParameterError("s and rho must be positive")
    return s / (2.0 * s + rho)


def misspecified_rate_exponent(rho, rho_minus, rho_plus, s):
    """Rate exponent under a dimension-misspecified prior envelope.

    Requires rho_plus >= rho_minus and rho_minus > rho_plus * rho /
    (2s + rho_plus); returns
    (1 - (rho_plus / min(rho_minus, rho)) * rho / (2s + rho_plus)) / 2,
    which reduces to s / (2s + rho) when rho_minus = rho_plus = rho.
    """
    for name, val in (("rho", rho), ("rho_minus", rho_minus),
                      ("rho_plus", rho_plus), ("s", s)):
        if not val > 0.0:
            raise InvalidParameterError(f"{name} must be positive")
    if rho_plus < rho_minus:
        raise InvalidParameterError("rho_plus must be >= rho_minus")
    if not rho_minus > rho_plus * rho / (2.0 * s + rho_plus):
        raise InvalidParameterError(
            "infeasible: rho_minus must exceed rho_plus * rho / (2s + rho_plus)"
        )
    return 0.5 * (1.0 - (rho_plus / min(rho_minus, rho)) * rho / (2.0 * s + rho_plus))
