"""Gaussian kernel, its derivatives and the Terrell oversmoothed bandwidth."""

import math

import numpy as np

from .errors import DegenerateSampleError, InvalidArgumentError

SQRT_2PI = math.sqrt(2.0 * math.pi)
TERRELL_CONSTANT = 1.144
# MAD -> standard deviation for normal data; only used when mad_scale is set to it.
MAD_NORMAL_SCALE = 1.482602218505602


class Bandwidth(float):
    """A strictly positive, finite kernel bandwidth."""

    def __new__(cls, h):
        value = float(h)
        if not math.isfinite(value) or value <= 0.0:
            raise InvalidArgumentError(f"bandwidth must be finite and > 0, got {h!r}")
        return super().__new__(cls, value)

    def __repr__(self):
        return f"Bandwidth({float(self)!r})"


def _finite(z, name="z"):
    arr = np.asarray(z, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise InvalidArgumentError(f"{name} must be finite")
    return arr


def _unwrap(arr):
    return float(arr) if arr.ndim == 0 else arr


def gaussian_kernel(z):
    """Standard normal density ``exp(-z**2/2)/sqrt(2*pi)``; vectorized."""
    z = _finite(z)
    return _unwrap(np.exp(-0.5 * z * z) / SQRT_2PI)


def scaled_kernel(z, h):
    """``phi(z/h)/h``; ``h`` may be an array broadcasting against ``z``."""
    if np.ndim(h) == 0:
        h = float(Bandwidth(h))
    else:
        h = _finite(h, "h")
        if np.any(h <= 0.0):
            raise InvalidArgumentError("bandwidth must be > 0")
    z = _finite(z)
    u = z / h
    return _unwrap(np.exp(-0.5 * u * u) / (SQRT_2PI * h))


def kernel_derivatives(z):
    """Return ``(phi'(z), phi''(z))`` for the Gaussian kernel."""
    z = _finite(z)
    phi = np.exp(-0.5 * z * z) / SQRT_2PI
    return _unwrap(-z * phi), _unwrap((z * z - 1.0) * phi)


def median_absolute_deviation(x):
    """Raw MAD about the median (no consistency factor)."""
    x = np.asarray(x, dtype=float)
    med = np.median(x)
    return float(np.median(np.abs(x - med)))


def terrell_bandwidth(projected, mad_scale=1.0):
    """Oversmoothed bandwidth ``1.144 * s * N**(-1/5)`` with ``s`` the MAD.

    Parameters
    ----------
    projected : array_like, shape (N,)
        Projected sample.
    mad_scale : float
        Multiplier applied to the raw MAD. ``1.0`` uses the raw MAD;
        :data:`MAD_NORMAL_SCALE` gives the normal-consistent scale.

    When more than half the sample is tied the MAD is zero; the smallest
    positive gap between distinct values is used as the scale instead.
    """
    x = _finite(projected, "projected").ravel()
    n = x.size
    if n < 2:
        raise DegenerateSampleError("bandwidth needs at least 2 points")
    scale = median_absolute_deviation(x)
    if scale <= 0.0:
        gaps = np.diff(np.unique(x))
        if gaps.size == 0:
            raise DegenerateSampleError("all projected values are identical")
        scale = float(gaps.min())
    return Bandwidth(TERRELL_CONSTANT * mad_scale * scale * n ** -0.2)


def terrell_bandwidth_columns(projected, mad_scale=1.0):
    """Column-wise :func:`terrell_bandwidth` for an ``(N, c)`` array.

    Columns with zero MAD fall back to the scalar routine.
    """
    p = np.asarray(projected, dtype=float)
    n = p.shape[0]
    med = np.median(p, axis=0)
    mad = np.median(np.abs(p - med), axis=0)
    h = TERRELL_CONSTANT * mad_scale * mad * n ** -0.2
    for j in np.flatnonzero(mad <= 0.0):
        h[j] = terrell_bandwidth(p[:, j], mad_scale)
    return h
