"""Desk-scale numerical oracles for the analytic objects behind the method.

Covers the manifold smoothing operator (kernel integral with the
(2 pi eps)^(-d/2) normaliser), the RKHS-norm double integral, and empirical
concentration-band checks for the affinity statistic and the k-NN radii on
manifolds with known uniform density.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _core
from .exceptions import InvalidInputError, InvalidParameterError
from .manifold_stats import knn_distances, unit_ball_volume

# Quadrature must resolve the kernel length-scale sqrt(eps) with at least
# this many nodes for the trapezoid error to stay below the oracle tolerances.
NODES_PER_KERNEL_SCALE = 10


@dataclass(frozen=True)
class ParamManifold:
    """Quadrature representation of a 1-parameter manifold embedded in R^D.

    ``points`` are the ambient quadrature nodes, ``weights`` the volume
    element (arc length for curves), ``spacing`` the largest arc gap between
    adjacent nodes.  Integrating the constant one function recovers the
    manifold volume.
    """

    name: str
    dim: int
    points: np.ndarray
    weights: np.ndarray
    spacing: float
    density: float | None = None

    @property
    def volume(self):
        return float(self.weights.sum())

    @property
    def n_nodes(self):
        return self.points.shape[0]


def _nodes_for(length, eps, n_nodes):
    if n_nodes is not None:
        return int(n_nodes)
    if eps is None:
        raise InvalidParameterError("supply either n_nodes or eps to size the quadrature")
    return int(math.ceil(length / (math.sqrt(eps) / NODES_PER_KERNEL_SCALE)))


def circle_manifold(radius=1.0, center=(0.0, 0.0), D=2, n_nodes=None, eps=None):
    """Uniform quadrature on a circle (periodic trapezoid, exact volume)."""
    if radius <= 0.0:
        raise InvalidParameterError("radius must be positive")
    if D < 2:
        raise InvalidParameterError("circle embedding needs D >= 2")
    length = 2.0 * math.pi * radius
    N = max(8, _nodes_for(length, eps, n_nodes))
    theta = 2.0 * math.pi * np.arange(N) / N
    points = np.zeros((N, D))
    points[:, 0] = center[0] + radius * np.cos(theta)
    points[:, 1] = center[1] + radius * np.sin(theta)
    weights = np.full(N, length / N)
    return ParamManifold(name="circle", dim=1, points=points, weights=weights,
                         spacing=length / N, density=1.0 / length)


def segment_manifold(length=1.0, D=2, n_nodes=None, eps=None, origin=None):
    """Composite-trapezoid quadrature on a straight segment along axis 0."""
    if length <= 0.0:
        raise InvalidParameterError("length must be positive")
    # N nodes span the segment with N-1 gaps
    N = max(9, _nodes_for(length, eps, n_nodes) + (0 if n_nodes else 1))
    s = np.linspace(0.0, length, N)
    points = np.zeros((N, D))
    points[:, 0] = s
    if origin is not None:
        points += np.asarray(origin, dtype=np.float64)
    h = length / (N - 1)
    weights = np.full(N, h)
    weights[0] = weights[-1] = h / 2.0
    return ParamManifold(name="segment", dim=1, points=points, weights=weights,
                         spacing=h, density=1.0 / length)


def curve_manifold(phi, t0, t1, n_nodes, name="curve", density=None):
    """Trapezoid quadrature on a generic curve from a vectorised parametrisation.

    ``phi`` maps an array of parameters to ambient points; the speed is
    differenced numerically, so the quadrature volume is approximate.
    """
    if n_nodes < 9:
        raise InvalidParameterError("curve quadrature needs at least 9 nodes")
    ts = np.linspace(t0, t1, int(n_nodes))
    points = np.asarray(phi(ts), dtype=np.float64)
    if points.shape[0] != ts.size:
        raise InvalidInputError("phi must return one ambient point per parameter")
    grads = np.gradient(points, ts, axis=0)
    speed = np.sqrt((grads * grads).sum(axis=1))
    h = (t1 - t0) / (n_nodes - 1)
    weights = speed * h
    weights[0] *= 0.5
    weights[-1] *= 0.5
    seg = np.sqrt(((points[1:] - points[:-1]) ** 2).sum(axis=1))
    return ParamManifold(name=name, dim=1, points=points, weights=weights,
                         spacing=float(seg.max()), density=density)


def _check_resolution(manifold, eps):
    required_spacing = math.sqrt(eps) / NODES_PER_KERNEL_SCALE
    if manifold.spacing > required_spacing:
        need = int(math.ceil(manifold.n_nodes * manifold.spacing / required_spacing))
        raise InvalidParameterError(
            f"quadrature too coarse for eps={eps}: node spacing "
            f"{manifold.spacing:.3g} exceeds {required_spacing:.3g}; "
            f"about {need} nodes required"
        )


def g_epsilon_apply(manifold, f, x, eps):
    """Kernel smoothing of f on the manifold at the ambient point x.

    Evaluates (2 pi eps)^(-d/2) * integral of exp(-|x - y|^2 / (2 eps)) f(y)
    against the volume element.  ``f`` must be vectorised over an (N, D)
    array of points.
    """
    if eps <= 0.0:
        raise InvalidParameterError("eps must be positive")
    _check_resolution(manifold, eps)
    x = np.asarray(x, dtype=np.float64).ravel()
    d = manifold.points - x
    sq = (d * d).sum(axis=1)
    kernel = np.exp(-sq / (2.0 * eps))
    vals = np.asarray(f(manifold.points), dtype=np.float64)
    if vals.ndim == 0:
        vals = np.full(manifold.n_nodes, float(vals))
    pref = (2.0 * math.pi * eps) ** (-manifold.dim / 2.0)
    return float(pref * (manifold.weights * kernel * vals).sum())


def rkhs_norm_squared(manifold, g, eps):
    """Squared Hilbert norm of the kernel-smoothed function with weight g.

    Double quadrature of the bilinear form
    integral integral exp(-|x - y|^2 / (2 eps)) g(x) g(y) dV(x) dV(y);
    nonnegative by positive definiteness of the kernel.
    """
    if eps <= 0.0:
        raise InvalidParameterError("eps must be positive")
    _check_resolution(manifold, eps)
    vals = np.asarray(g(manifold.points), dtype=np.float64)
    if vals.ndim == 0:
        vals = np.full(manifold.n_nodes, float(vals))
    wg = manifold.weights * vals
    S = _core.pairwise_sq_dists(manifold.points)
    H = _core.gram_from_sq_dists(S, eps)
    return float(wg @ H @ wg)


@dataclass(frozen=True)
class AffinityBandTable:
    """Per-bandwidth check of the two-sided affinity concentration band."""

    t_grid: np.ndarray
    values: np.ndarray
    ratios: np.ndarray
    lower: np.ndarray
    upper: np.ndarray
    ok: np.ndarray

    @property
    def all_pass(self):
        return bool(self.ok.all())


def affinity_band_check(X, p, d, t_grid, t0=0.01):
    """Check v(t) against [1/4, 7/4] * (2 pi)^(d/2) * p * t^(d/2) per grid point.

    Valid for uniform-density samples (p = p_min = p_max) on a d-dimensional
    manifold, for t inside [n^(-2/d) (log n)^(3/d), t0].  This is a report,
    not an assertion: clustered samples may legitimately fail the band.
    """
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    n = X.shape[0]
    t_grid = np.asarray(t_grid, dtype=np.float64).ravel()
    t_min = n ** (-2.0 / d) * math.log(n) ** (3.0 / d)
    if np.any(t_grid < t_min) or np.any(t_grid > t0):
        raise InvalidParameterError(
            f"t_grid must lie inside [{t_min:.3g}, {t0}] for this check"
        )
    S = _core.pairwise_sq_dists(X)
    values = np.array([_core.affinity_stats(S, float(t))[0] for t in t_grid])
    scale = (2.0 * math.pi) ** (d / 2.0) * p * t_grid ** (d / 2.0)
    lower, upper = 0.25 * scale, 1.75 * scale
    ok = (values >= lower) & (values <= upper)
    return AffinityBandTable(t_grid=t_grid, values=values,
                             ratios=values / t_grid ** (d / 2.0),
                             lower=lower, upper=upper, ok=ok)


@dataclass(frozen=True)
class KnnBandReport:
    """Per-point check of the k-NN radius concentration band."""

    k: int
    reference: float
    band: tuple
    distances: np.ndarray
    ok: np.ndarray
    small_n: bool

    @property
    def pass_fraction(self):
        return float(self.ok.mean())


def knn_band_check(X, p, d, gamma2=0.25):
    """Check each k-NN radius against [0.9, 1.2] times its concentration scale.

    Uses k = ceil(gamma2 log^2 n) and the reference radius
    (gamma2 / (p nu_d))^(1/d) (log^2 n / n)^(1/d) with nu_d the unit-ball
    volume.  Reports per-point booleans; samples far below the asymptotic
    regime are flagged with ``small_n`` instead of being rejected.
    """
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    n = X.shape[0]
    k = int(math.ceil(gamma2 * math.log(n) ** 2))
    k = max(k, 2)
    if k > n:
        raise InvalidParameterError(f"k={k} exceeds the sample size {n}")
    nu = unit_ball_volume(d)
    reference = (gamma2 / (p * nu)) ** (1.0 / d) \
        * (math.log(n) ** 2 / n) ** (1.0 / d)
    distances = knn_distances(X, k)
    lo, hi = 0.9 * reference, 1.2 * reference
    ok = (distances >= lo) & (distances <= hi)
    return KnnBandReport(k=k, reference=reference, band=(lo, hi),
                         distances=distances, ok=ok, small_n=n < 100)
