"""Nearest-neighbour statistics, kernel-affinity averages and dimension estimators.

These are the empirical quantities behind the data-driven bandwidth prior:
the averaged k-NN distance T_n, the averaged kernel affinity v(t) in its
arithmetic and harmonic variants, and two intrinsic-dimension estimators
(k-NN ratio and box counting).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _core
from .exceptions import InvalidInputError, InvalidParameterError

#: Failure signal returned by :func:`estimate_dimension` when the two
#: k-NN radii coincide and the log-ratio is undefined.
DEGENERATE_RATIO = "degenerate-ratio"


@dataclass(frozen=True)
class KnnConfig:
    """Neighbour count and averaging-subset size for the T_n statistic.

    ``k`` and ``subset_size`` default to the sample-size rules of
    :func:`default_k` and :func:`default_subset_size` when left as None.
    """

    k: int | None = None
    subset_size: int | None = None
    gamma2: float = 0.25

    def resolve(self, n):
        k = self.k if self.k is not None else default_k(n, self.gamma2)
        size = (self.subset_size if self.subset_size is not None
                else default_subset_size(n))
        if not 1 <= k <= n:
            raise InvalidParameterError(f"k={k} outside 1..{n}")
        if not 1 <= size <= n:
            raise InvalidParameterError(f"subset size {size} outside 1..{n}")
        return k, size


def default_k(n, gamma2=0.25):
    """Neighbour count ceil(gamma2 * log^2 n), with k=2 for small n (< 200)."""
    if n < 200:
        return 2
    return int(math.ceil(gamma2 * math.log(n) ** 2))


def default_subset_size(n):
    """Averaging-subset size ceil(log^3 n), the whole sample for n < 200."""
    if n < 200:
        return n
    return min(n, int(math.ceil(math.log(n) ** 3)))


def _as_points(X):
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    if X.size == 0:
        raise InvalidInputError("point set is empty")
    return X


def knn_distances(X, k, indices=None):
    """Distance from each selected point to its k-th nearest neighbour.

    Each point counts as its own 1st neighbour, so the returned value is the
    k-th smallest of the n distances from the point to the whole sample
    (infimum convention: duplicates at distance zero are counted).
    """
    X = _as_points(X)
    n = X.shape[0]
    if not 1 <= k <= n:
        raise InvalidParameterError(f"k={k} outside 1..{n}")
    rows = np.arange(n) if indices is None else np.asarray(indices, dtype=np.intp)
    out = np.empty(rows.shape[0], dtype=np.float64)
    for pos, i in enumerate(rows):
        d = X[i] - X
        sq = (d * d).sum(axis=1)
        # k-th smallest squared distance; ties share a value so a partial
        # selection is enough for the distance itself
        out[pos] = math.sqrt(float(np.partition(sq, k - 1)[k - 1]))
    return out


def knn_distance(X, i, k):
    """k-th nearest-neighbour distance of point i (self counts as 1st)."""
    return float(knn_distances(X, k, indices=[i])[0])


def tn_statistic(X, S, k):
    """Mean k-th nearest-neighbour distance over the index subset S."""
    S = np.asarray(S, dtype=np.intp).ravel()
    if S.size == 0:
        raise InvalidInputError("subset S is empty")
    return float(knn_distances(X, k, indices=S).mean())


def kernel_affinity_stat(X, t):
    """Averaged kernel affinity: mean of exp(-||X_i - X_j||^2 / (2t)) over i != j.

    Monotone nondecreasing in t with values in (0, 1] (up to floating-point
    underflow at extremely small t).
    """
    X = _as_points(X)
    if X.shape[0] < 2:
        raise InvalidInputError("affinity statistics need at least two points")
    if not t > 0.0:
        raise InvalidParameterError(f"bandwidth must be positive, got {t}")
    arith, _ = _core.affinity_stats(_core.pairwise_sq_dists(X), t)
    return arith


def harmonic_affinity_stat(X, t):
    """Harmonic-mean variant of the averaged kernel affinity.

    Harmonic mean of the per-point affinities V_i = mean_{j != i} h_t(X_i, X_j);
    never exceeds the arithmetic variant.  Intended for samples mixing
    components of different intrinsic dimensions.
    """
    X = _as_points(X)
    if X.shape[0] < 2:
        raise InvalidInputError("affinity statistics need at least two points")
    if not t > 0.0:
        raise InvalidParameterError(f"bandwidth must be positive, got {t}")
    _, harm = _core.affinity_stats(_core.pairwise_sq_dists(X), t)
    return harm


def estimate_dimension(X, k=None, seed=0):
    """k-NN ratio estimate of the intrinsic dimension at a random anchor.

    Uses the closest integer to log(2) / (log R_k - log R_ceil(k/2)) at an
    anchor drawn from the seeded RNG, with k defaulting to ceil(sqrt(n)).
    The raw ratio is clamped to [1, D] before rounding (it can exceed the
    ambient dimension at small n).  Returns :data:`DEGENERATE_RATIO` when
    the two radii coincide.
    """
    X = _as_points(X)
    n, D = X.shape
    if n < 4:
        raise InvalidInputError("dimension estimation needs at least 4 points")
    if k is None:
        k = int(math.ceil(math.sqrt(n)))
    if not 2 <= k <= n:
        raise InvalidParameterError(f"k={k} outside 2..{n}")
    k_half = int(math.ceil(k / 2))
    if k_half >= k:
        raise InvalidParameterError(f"k={k} leaves no gap to ceil(k/2)")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    anchor = int(rng.integers(n))
    d = X[anchor] - X
    sq = np.sort((d * d).sum(axis=1))
    r_k = math.sqrt(float(sq[k - 1]))
    r_half = math.sqrt(float(sq[k_half - 1]))
    if r_k == r_half:
        return DEGENERATE_RATIO
    if r_half == 0.0:
        raw = 0.0
    else:
        raw = math.log(2.0) / (math.log(r_k) - math.log(r_half))
    return int(round(min(max(raw, 1.0), float(D))))


@dataclass(frozen=True)
class BoxCountResult:
    """Occupied-box counts per radius and the fitted log-log slope."""

    radii: np.ndarray
    counts: np.ndarray
    slope: float
    intercept: float


def box_counting_dimension(X, radii):
    """Box-counting dimension estimate from occupied sup-norm boxes.

    Counts occupied axis-aligned boxes of side 2r (sup-norm balls of radius
    r) on a lattice anchored at the data minimum, then fits the least-squares
    slope of log N(r) against log(1/r).
    """
    X = _as_points(X)
    radii = np.asarray(radii, dtype=np.float64).ravel()
    if radii.size < 3:
        raise InvalidInputError("box counting needs at least 3 radii")
    if np.any(radii <= 0.0) or np.any(radii >= 1.0):
        raise InvalidParameterError("radii must lie in (0, 1)")
    if np.any(np.diff(radii) >= 0.0):
        raise InvalidParameterError("radii must be strictly descending")
    mins = X.min(axis=0)
    extent = X.max(axis=0) - mins
    counts = np.empty(radii.size, dtype=np.int64)
    for pos, r in enumerate(radii):
        side = 2.0 * r
        n_cells = np.maximum(np.ceil(extent / side), 1.0)
        idx = np.floor((X - mins) / side)
        # points on the top face fall into the last cell
        idx = np.minimum(idx, n_cells - 1.0).astype(np.int64)
        counts[pos] = np.unique(idx, axis=0).shape[0]
    logs = np.log(1.0 / radii)
    logn = np.log(counts.astype(np.float64))
    slope, intercept = np.polyfit(logs, logn, 1)
    return BoxCountResult(radii=radii, counts=counts,
                          slope=float(slope), intercept=float(intercept))


def unit_ball_volume(d):
    """Volume of the unit ball in R^d: pi^(d/2) / Gamma(d/2 + 1)."""
    if d < 1:
        raise InvalidParameterError(f"dimension must be >= 1, got {d}")
    return math.pi ** (d / 2.0) / math.gamma(d / 2.0 + 1.0)


def subset_indices(n, size, seed=0):
    """Random index subset of the given size, without replacement, seeded."""
    if not 1 <= size <= n:
        raise InvalidParameterError(f"subset size {size} outside 1..{n}")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    if size == n:
        return np.arange(n)
    return np.sort(rng.choice(n, size=size, replace=False))
