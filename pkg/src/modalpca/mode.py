"""Univariate mode estimation: half-sample mode and Newton refinement."""

import math
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateSampleError, InvalidArgumentError
from .kernel import SQRT_2PI, Bandwidth

DERIVATIVE_FLOOR = 1e-12
EPS = float(np.finfo(float).eps)
DEFAULT_MAX_ITER = 50


@dataclass(frozen=True)
class ModeEstimate:
    m: float
    density: float
    iterations: int
    converged: bool


def _sample(sample):
    x = np.asarray(sample, dtype=float).ravel()
    if x.size == 0:
        raise DegenerateSampleError("empty sample")
    if not np.all(np.isfinite(x)):
        raise InvalidArgumentError("sample must be finite")
    return x


def _hsm_small(s):
    k = len(s)
    if k == 1:
        return float(s[0])
    if k == 2:
        return 0.5 * (s[0] + s[1])
    left, right = s[1] - s[0], s[2] - s[1]
    if left < right:
        return 0.5 * (s[0] + s[1])
    if right < left:
        return 0.5 * (s[1] + s[2])
    return float(s[1])


def half_sample_mode(sample):
    """Half-sample mode of Bickel and Fruehwirth.

    Repeatedly keeps the ``ceil(k/2)`` consecutive order statistics with the
    smallest range until three or fewer remain. Ties between windows go to
    the leftmost one.
    """
    s = np.sort(_sample(sample))
    while len(s) > 3:
        k = len(s)
        half = (k + 1) // 2
        widths = s[half - 1:] - s[:k - half + 1]
        start = int(np.argmin(widths))
        s = s[start:start + half]
    return _hsm_small(s)


def half_sample_mode_columns(sorted_columns):
    """Half-sample mode of every column of an ``(N, c)`` array sorted along axis 0.

    Same tie-breaking as :func:`half_sample_mode`; all columns share the
    recursion depth because they share ``N``.
    """
    s = np.asarray(sorted_columns, dtype=float)
    n, c = s.shape
    cols = np.arange(c)
    start = np.zeros(c, dtype=np.intp)
    k = n
    while k > 3:
        half = (k + 1) // 2
        offsets = np.arange(k - half + 1)
        lo = s[start[None, :] + offsets[:, None], cols]
        hi = s[start[None, :] + offsets[:, None] + half - 1, cols]
        start = start + np.argmin(hi - lo, axis=0)
        k = half
    if k == 1:
        return s[start, cols].copy()
    a = s[start, cols]
    b = s[start + 1, cols]
    if k == 2:
        return 0.5 * (a + b)
    c3 = s[start + 2, cols]
    left, right = b - a, c3 - b
    return np.where(left < right, 0.5 * (a + b), np.where(right < left, 0.5 * (b + c3), b))


def kde_at(x, m, h):
    """Kernel density estimate ``(1/N) sum phi_h(m - x_i)``."""
    u = (m - x) / h
    return float(np.mean(np.exp(-0.5 * u * u)) / (SQRT_2PI * h))


def newton_mode(sample, h, m0, tol=None, max_iter=DEFAULT_MAX_ITER):
    """Refine a mode estimate by Newton's method on the KDE score equation.

    Solves ``F(m) = sum (m - x_i) phi_h(m - x_i) = 0`` with
    ``F'(m) = sum (1 - ((m - x_i)/h)**2) phi_h(m - x_i)``.

    Safeguards: a step that lowers the density is halved (up to 30 times);
    where ``F' <= 0`` (outside a concave region) a mean-shift step replaces
    the Newton step. ``|F'| < 1e-12`` or a non-finite step stops the
    iteration with ``converged=False``. The returned mode never has a lower
    density than ``m0``.

    Parameters
    ----------
    sample : array_like
    h : float
        Bandwidth.
    m0 : float
        Starting point, typically :func:`half_sample_mode`.
    tol : float, optional
        Step-size tolerance, default ``1e-8 * h``.
    max_iter : int
    """
    x = _sample(sample)
    h = float(Bandwidth(h))
    if tol is None:
        tol = 1e-8 * h
    if not tol > 0:
        raise InvalidArgumentError("tol must be > 0")
    if max_iter < 1:
        raise InvalidArgumentError("max_iter must be >= 1")
    m0 = float(m0)
    if not math.isfinite(m0):
        raise InvalidArgumentError("m0 must be finite")

    # Work on deviations from m0 so a common shift of sample and m0 cancels.
    y = x - m0
    t = 0.0
    f_start = kde_at(y, t, h)
    f_t = f_start
    converged = False
    iterations = 0
    for iterations in range(1, max_iter + 1):
        r = t - y
        u = r / h
        w = np.exp(-0.5 * u * u)
        score = float(np.dot(r, w))
        slope = float(np.sum((1.0 - u * u) * w))
        if abs(slope) < DERIVATIVE_FLOOR * max(1.0, float(np.sum(w))):
            break
        if slope > 0.0:
            step = -score / slope
        else:
            wsum = float(np.sum(w))
            if wsum <= 0.0:
                break
            step = float(np.dot(y, w)) / wsum - t
        if not math.isfinite(step):
            break
        accepted = False
        for _ in range(30):
            f_new = kde_at(y, t + step, h)
            # Differences below a few ulps of the density are round-off, not descent.
            if f_new >= f_t * (1.0 - 8 * EPS):
                accepted = True
                break
            step *= 0.5
        if not accepted:
            # No ascent available along the step: at a stationary point up to round-off.
            converged = abs(step) < tol or abs(score) <= 1e-12 * h * max(1.0, float(np.sum(w)))
            break
        t += step
        f_t = f_new
        if abs(step) < tol:
            converged = True
            break
    if f_t < f_start * (1.0 - 8 * EPS):
        t, f_t = 0.0, f_start
    return ModeEstimate(m=m0 + t, density=f_t, iterations=iterations, converged=converged)
