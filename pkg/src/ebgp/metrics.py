"""Error norms and the log-log rate-slope fit."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .exceptions import InvalidInputError

def _paired(f_hat, f_star):
    f_hat = np.asarray(f_hat, dtype=np.float64).ravel()
    f_star = np.asarray(f_star, dtype=np.float64).ravel()
    if f_hat.size != f_star.size:
        raise InvalidInputError(
            f"length mismatch: {f_hat.size} predictions vs {f_star.size} targets"
        )
    if f_hat.size == 0:
        raise InvalidInputError("error norms need at least one value")
    return f_hat, f_star


def error_n(f_hat, f_star):
    """Root of the in-sample mean squared error, sqrt(mean((f_hat - f*)^2)).

    Reported as the norm value (not its square), matching the usual
    error-versus-sample-size axes.
    """
    f_hat, f_star = _paired(f_hat, f_star)
    d = f_hat - f_star
    return float(np.sqrt(np.mean(d * d)))


def error_2_empirical(f_hat, f_star):
    """Test-set estimate of the population L2 error; same formula as error_n."""
    return error_n(f_hat, f_star)


@dataclass(frozen=True)
class RateFit:
    slope: float
    intercept: float
    stderr: float


def fit_rate_slope(ns, errors):
    """Ordinary least squares of log error against log n.

    Recovers the exponent of an exact power law and reports the slope's
    standard error from the residuals.
    """
    ns = np.asarray(ns, dtype=np.float64).ravel()
    errors = np.asarray(errors, dtype=np.float64).ravel()
    if ns.size != errors.size:
        raise InvalidInputError("ns and errors must have equal length")
    if ns.size < 3:
        raise InvalidInputError("rate fit needs at least 3 points")
    if np.any(errors <= 0.0) or np.any(ns <= 0.0):
        raise InvalidInputError("rate fit needs positive sample sizes and errors")
    x = np.log(ns)
    y = np.log(errors)
    xbar = x.mean()
    sxx = float(((x - xbar) ** 2).sum())
    if sxx == 0.0:
        raise InvalidInputError("all sample sizes identical; slope undefined")
    slope = float(((x - xbar) * (y - y.mean())).sum() / sxx)
    intercept = float(y.mean() - slope * xbar)
    resid = y - (intercept + slope * x)
    dof = ns.size - 2
    sigma2 = float((resid ** 2).sum() / dof) if dof > 0 else 0.0
    return RateFit(slope=slope, intercept=intercept,
                   stderr=float(np.sqrt(sigma2 / sxx)))
