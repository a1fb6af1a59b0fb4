"""Synthetic manifold datasets with known ground truth, plus an image loader.

All generators are deterministic given their seed, emit predictors inside
the unit cube, and record the exact noise draws so tests can recover them.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .exceptions import InvalidInputError, InvalidParameterError

DEFAULT_SIGMA = 0.1


@dataclass
class Dataset:
    """Predictors in [0,1]^D, noisy responses and the ground-truth values."""

    X: np.ndarray
    Y: np.ndarray
    f_star: np.ndarray
    sigma: float
    meta: dict = field(default_factory=dict)

    @property
    def n(self):
        return self.X.shape[0]

    @property
    def ambient_dim(self):
        return self.X.shape[1]

    def to_csv(self, path):
        """Write as CSV with header x1,...,xD,y,fstar."""
        D = self.ambient_dim
        header = [f"x{i + 1}" for i in range(D)] + ["y", "fstar"]
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(header)
            for i in range(self.n):
                writer.writerow([repr(float(v)) for v in self.X[i]]
                                + [repr(float(self.Y[i])), repr(float(self.f_star[i]))])

    @classmethod
    def from_csv(cls, path, sigma=float("nan")):
        with open(path, newline="") as fh:
            reader = csv.reader(fh)
            header = next(reader)
            if header[-2:] != ["y", "fstar"]:
                raise InvalidInputError(f"{path}: expected columns x1..xD,y,fstar")
            rows = [[float(v) for v in row] for row in reader if row]
        if not rows:
            raise InvalidInputError(f"{path}: no data rows")
        arr = np.asarray(rows, dtype=np.float64)
        return cls(X=arr[:, :-2], Y=arr[:, -2], f_star=arr[:, -1], sigma=sigma,
                   meta={"generator": "csv", "path": str(path)})


def add_noise(f_star, sigma, seed=0):
    """Responses f* + sigma * z with z i.i.d. standard normal from the seed."""
    if sigma < 0.0:
        raise InvalidParameterError(f"sigma must be nonnegative, got {sigma}")
    f_star = np.asarray(f_star, dtype=np.float64).ravel()
    if sigma == 0.0:
        return f_star.copy()
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    return f_star + sigma * rng.standard_normal(f_star.size)


def swiss_roll_function(u, v):
    """Ground-truth response on the roll: 4((u - 7pi/2)/(3pi/2))^2 + pi v / 45."""
    return 4.0 * ((u - 3.5 * math.pi) / (1.5 * math.pi)) ** 2 + (math.pi / 45.0) * v


def _rescale_swiss(X):
    out = np.empty_like(X)
    out[:, 0] = (X[:, 0] + 15.0) / 30.0
    out[:, 1] = X[:, 1] / 15.0
    out[:, 2] = (X[:, 2] + 15.0) / 30.0
    return out


def gen_swiss_roll(n, sigma=DEFAULT_SIGMA, seed=0):
    """Swiss-roll surface in R^3: X(u, v) = [u cos u, v, u sin u].

    u ~ Unif(pi, 9pi/2), v ~ Unif(0, 15); coordinates are affinely rescaled
    into the unit cube afterwards.
    """
    if n < 1:
        raise InvalidInputError("n must be >= 1")
    rng = np.random.default_rng(seed)
    u = rng.uniform(math.pi, 4.5 * math.pi, n)
    v = rng.uniform(0.0, 15.0, n)
    X = np.column_stack([u * np.cos(u), v, u * np.sin(u)])
    f_star = swiss_roll_function(u, v)
    Y = add_noise(f_star, sigma, rng)
    return Dataset(X=_rescale_swiss(X), Y=Y, f_star=f_star, sigma=sigma,
                   meta={"generator": "swiss-roll", "n": n, "sigma": sigma,
                         "seed": seed})


def _curve_points(ts):
    c = 3.5 * math.pi
    return np.column_stack([
        c * np.cos(math.pi * ts) * np.cos(4.0 * math.pi * ts),
        c * (1.0 + np.cos(math.pi * ts) * np.sin(4.0 * math.pi * ts)),
        c * np.sin(math.pi * ts),
    ])


# The curve's second coordinate ranges over [0, 7pi], beyond the roll's
# [0, 15], so the union uses a wider divisor there to stay in the cube.
MIXED_X2_SCALE = 7.0 * math.pi


def _rescale_mixed(X):
    out = np.empty_like(X)
    out[:, 0] = (X[:, 0] + 15.0) / 30.0
    out[:, 1] = X[:, 1] / MIXED_X2_SCALE
    out[:, 2] = (X[:, 2] + 15.0) / 30.0
    return out


def gen_mixed_union(n, sigma=DEFAULT_SIGMA, seed=0):
    """Union of the Swiss roll (2D) and a closed curve (1D) in R^3.

    Each point comes from the roll or the curve with probability 1/2.  On
    the curve the response extends the roll's function through
    f(x) = f_roll(sqrt(x1^2 + x3^2), x2), which keeps it continuous where
    the two components intersect.  Note the components do intersect, so the
    union is not a disjoint stratified space; recorded in meta.
    """
    if n < 2:
        raise InvalidInputError("n must be >= 2")
    rng = np.random.default_rng(seed)
    on_curve = rng.random(n) < 0.5
    u = rng.uniform(math.pi, 4.5 * math.pi, n)
    v = rng.uniform(0.0, 15.0, n)
    ts = rng.uniform(-1.0, 1.0, n)
    X = np.column_stack([u * np.cos(u), v, u * np.sin(u)])
    f_star = swiss_roll_function(u, v)
    curve = _curve_points(ts)
    X[on_curve] = curve[on_curve]
    radius = np.sqrt(curve[:, 0] ** 2 + curve[:, 2] ** 2)
    f_curve = swiss_roll_function(radius, curve[:, 1])
    f_star[on_curve] = f_curve[on_curve]
    Y = add_noise(f_star, sigma, rng)
    return Dataset(X=_rescale_mixed(X), Y=Y, f_star=f_star, sigma=sigma,
                   meta={"generator": "mixed-union", "n": n, "sigma": sigma,
                         "seed": seed, "components": on_curve.astype(int),
                         "caveat": "components intersect"})


def gen_circle(n, radius=0.4, D=3, sigma=DEFAULT_SIGMA, seed=0,
               f_of_theta=np.cos, angles=None):
    """Uniform circle in the first two coordinates, centred in the unit cube.

    The default response is cos(theta).  ``angles`` overrides the random
    uniform angles with a deterministic array (the sample size then follows
    its length).  Uniform angles give density 1/(2 pi radius) per unit
    circumference, recorded in meta for the concentration checks.
    """
    if D < 2:
        raise InvalidParameterError("circle embedding needs D >= 2")
    if not 0.0 < radius <= 0.5:
        raise InvalidParameterError(
            f"radius {radius} does not fit the unit cube (need 0 < radius <= 0.5)"
        )
    rng = np.random.default_rng(seed)
    if angles is None:
        if n < 1:
            raise InvalidInputError("n must be >= 1")
        theta = rng.uniform(0.0, 2.0 * math.pi, n)
    else:
        theta = np.asarray(angles, dtype=np.float64).ravel()
        n = theta.size
    X = np.full((n, D), 0.5)
    X[:, 0] = 0.5 + radius * np.cos(theta)
    X[:, 1] = 0.5 + radius * np.sin(theta)
    f_star = np.asarray(f_of_theta(theta), dtype=np.float64)
    Y = add_noise(f_star, sigma, rng)
    circumference = 2.0 * math.pi * radius
    return Dataset(X=X, Y=Y, f_star=f_star, sigma=sigma,
                   meta={"generator": "circle", "n": n, "sigma": sigma,
                         "seed": seed, "radius": radius,
                         "circumference": circumference,
                         "density": 1.0 / circumference, "theta": theta})


def _read_pgm(path):
    """Minimal binary PGM (P5, maxval <= 255) reader."""
    with open(path, "rb") as fh:
        data = fh.read()
    tokens = []
    i = 0
    while len(tokens) < 4 and i < len(data):
        # skip whitespace and comment lines
        while i < len(data) and data[i:i + 1].isspace():
            i += 1
        if i < len(data) and data[i:i + 1] == b"#":
            while i < len(data) and data[i] != 0x0A:
                i += 1
            continue
        start = i
        while i < len(data) and not data[i:i + 1].isspace():
            i += 1
        tokens.append(data[start:i])
    if len(tokens) < 4 or tokens[0] != b"P5":
        raise InvalidInputError(f"{path}: not a binary (P5) PGM file")
    width, height, maxval = int(tokens[1]), int(tokens[2]), int(tokens[3])
    if maxval > 255:
        raise InvalidInputError(f"{path}: only 8-bit PGM supported")
    pixels = np.frombuffer(data, dtype=np.uint8, count=width * height, offset=i + 1)
    if pixels.size != width * height:
        raise InvalidInputError(f"{path}: truncated pixel data")
    return pixels.reshape(height, width)


def load_image_manifold(path, response_spec=None):
    """Rotation-image dataset: one flattened grayscale image per view angle.

    ``path`` holds binary PGM files and a manifest ``manifest.csv`` with
    columns ``filename,theta_radians`` (compressed formats must be converted
    to PGM beforehand).  Pixels are rescaled to [0, 1] and flattened to a
    width*height predictor row; the response is f* = cos(theta) plus
    Gaussian noise.  ``response_spec`` may override ``{"sigma": 0.1,
    "seed": 0, "f_of_theta": cos}``.
    """
    spec = {"sigma": DEFAULT_SIGMA, "seed": 0, "f_of_theta": np.cos}
    if response_spec:
        spec.update(response_spec)
    root = Path(path)
    manifest = root / "manifest.csv"
    if not manifest.exists():
        raise InvalidInputError(f"missing manifest: {manifest}")
    names, thetas = [], []
    with open(manifest, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if [h.strip() for h in header[:2]] != ["filename", "theta_radians"]:
            raise InvalidInputError("manifest must have columns filename,theta_radians")
        for row in reader:
            if not row:
                continue
            names.append(row[0].strip())
            thetas.append(float(row[1]))
    if not names:
        raise InvalidInputError("manifest lists no images")
    images = []
    shape = None
    for name in names:
        img = _read_pgm(root / name)
        if shape is None:
            shape = img.shape
        elif img.shape != shape:
            raise InvalidInputError(
                f"{name}: image size {img.shape} differs from {shape}"
            )
        images.append(img.reshape(-1).astype(np.float64) / 255.0)
    X = np.vstack(images)
    theta = np.asarray(thetas, dtype=np.float64)
    f_star = np.asarray(spec["f_of_theta"](theta), dtype=np.float64)
    Y = add_noise(f_star, spec["sigma"], spec["seed"])
    return Dataset(X=X, Y=Y, f_star=f_star, sigma=spec["sigma"],
                   meta={"generator": "image-manifold", "path": str(root),
                         "image_shape": shape, "theta": theta,
                         "seed": spec["seed"]})


GENERATORS = {
    "swiss-roll": gen_swiss_roll,
    "mixed-union": gen_mixed_union,
    "circle": gen_circle,
}


def generate(name, n, sigma=DEFAULT_SIGMA, seed=0, **kwargs):
    """Dispatch to a named generator."""
    try:
        gen = GENERATORS[name]
    except KeyError:
        raise InvalidInputError(
            f"unknown generator {name!r}; choose from {sorted(GENERATORS)}"
        ) from None
    return gen(n, sigma=sigma, seed=seed, **kwargs)
