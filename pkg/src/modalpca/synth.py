"""Seeded synthetic datasets with uniform or shifted-cluster outliers."""

import math
from dataclasses import dataclass

import numpy as np

from .baseline import dimension_95
from .errors import ConfigError
from .seeding import stream

FAMILIES = ("gaussian-diag", "laplace-scaled", "lbbp-3d")

# Stream identifiers; each coordinate gets its own stream below these.
_INLIER, _SHUFFLE, _OUTLIER = 0, 1, 2

LBBP_INLIER_VARIANCES = (1.0, 0.3)
LBBP_OUTLIER_SCALE = 0.01
LBBP_OUTLIER_SHIFT = 150.0


@dataclass(frozen=True)
class ScenarioSpec:
    family: str = "gaussian-diag"
    d: int = 20
    n: int = 200
    outlier_fraction: float = 0.0
    outlier_box: tuple = (-1.0, 1.5)
    seed: int = 0
    sigma_z: float = None

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ConfigError(f"family: unknown scenario family {self.family!r}")
        if not isinstance(self.d, (int, np.integer)) or self.d < 2:
            raise ConfigError("d: dimension must be an integer >= 2")
        if not isinstance(self.n, (int, np.integer)) or self.n < 2:
            raise ConfigError("n: sample size must be an integer >= 2")
        eps = self.outlier_fraction
        if not (isinstance(eps, (int, float)) and 0.0 <= eps < 1.0):
            raise ConfigError(f"eps: outlier fraction must be in [0, 1), got {eps!r}")
        low, high = self.outlier_box
        if not (math.isfinite(low) and math.isfinite(high) and low < high):
            raise ConfigError("outlier_box: need finite low < high")
        if int(self.seed) != self.seed or self.seed < 0:
            raise ConfigError("seed: must be a non-negative integer")
        if self.family == "lbbp-3d":
            if self.d != 3:
                raise ConfigError("d: lbbp-3d is three-dimensional")
            if self.sigma_z is None or not (math.isfinite(self.sigma_z) and self.sigma_z > 0):
                raise ConfigError("sigma_z: lbbp-3d needs sigma_z > 0")

    @property
    def n_outliers(self):
        # Guard against products like 0.29 * 100 = 28.999...
        return int(math.floor(self.outlier_fraction * self.n + 1e-9))


def population_spectrum(spec):
    """Per-coordinate variances of the inlier distribution (descending)."""
    j = np.arange(1, spec.d + 1, dtype=float)
    if spec.family == "gaussian-diag":
        return 1.0 / j ** 2
    if spec.family == "laplace-scaled":
        return 2.0 * (10.0 / j ** 2) ** 2
    return np.array([*LBBP_INLIER_VARIANCES, spec.sigma_z ** 2])


def _laplace(rng, size, loc, scale):
    # Inverse CDF on an open-interval uniform.
    u = rng.random(size) - 0.5
    u = np.where(u == -0.5, 0.0, u)
    return loc - scale * np.sign(u) * np.log1p(-2.0 * np.abs(u))


def _inlier_column(spec, j):
    rng = stream(spec.seed, _INLIER, j)
    if spec.family == "gaussian-diag":
        return rng.standard_normal(spec.n) / (j + 1)
    if spec.family == "laplace-scaled":
        return _laplace(rng, spec.n, 1.0, 10.0 / (j + 1) ** 2)
    sd = math.sqrt(LBBP_INLIER_VARIANCES[j]) if j < 2 else spec.sigma_z
    return sd * rng.standard_normal(spec.n)


def _outlier_column(spec, j, count):
    rng = stream(spec.seed, _OUTLIER, j)
    if spec.family == "lbbp-3d":
        if j < 2:
            return math.sqrt(LBBP_OUTLIER_SCALE * LBBP_INLIER_VARIANCES[j]) * rng.standard_normal(count)
        return LBBP_OUTLIER_SHIFT + spec.sigma_z * rng.standard_normal(count)
    low, high = spec.outlier_box
    return rng.uniform(low, high, count)


def ground_truth(spec):
    """First ``k`` canonical unit vectors, ``k`` from the 95% eigenvalue rule."""
    k = dimension_95(population_spectrum(spec))
    return np.eye(spec.d)[:, :k]


def generate(spec):
    """Draw a dataset.

    Returns ``(data, inlier_mask, ground_truth)``. Outliers replace the rows
    at the first ``floor(eps * n)`` positions of a seeded permutation.
    """
    X = np.column_stack([_inlier_column(spec, j) for j in range(spec.d)])
    mask = np.ones(spec.n, dtype=bool)
    count = spec.n_outliers
    if count:
        rows = stream(spec.seed, _SHUFFLE).permutation(spec.n)[:count]
        rows.sort()
        X[rows] = np.column_stack([_outlier_column(spec, j, count) for j in range(spec.d)])
        mask[rows] = False
    return X, mask, ground_truth(spec)
