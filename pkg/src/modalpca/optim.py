"""Small nonlinear conjugate gradient used for the chart-coordinate subproblem."""

import math

import numpy as np

from .errors import OptimizationError

C1 = 1e-4
C2 = 0.1


def _line_search(fun, x, f0, p, slope0, alpha):
    """Strong-Wolfe step along ``p``: bracketing, then secant/bisection zoom.

    Returns ``(alpha, f, g)`` or ``None`` when no acceptable step is found.
    """
    def phi(a):
        f, g = fun(x + a * p)
        if not (math.isfinite(f) and np.all(np.isfinite(g))):
            return math.inf, math.inf, g
        return f, float(g @ p), g

    lo, f_lo, d_lo, g_lo = 0.0, f0, slope0, None
    hi = None
    best = None
    for _ in range(60):
        f_a, d_a, g_a = phi(alpha)
        if f_a > f0 + C1 * alpha * slope0 or (hi is None and f_a >= f_lo and lo > 0):
            hi, d_hi = alpha, d_a
        else:
            if best is None or f_a < best[1]:
                best = (alpha, f_a, g_a)
            if abs(d_a) <= -C2 * slope0:
                return alpha, f_a, g_a
            if d_a >= 0:
                hi, d_hi = lo, d_lo
                lo, f_lo, d_lo = alpha, f_a, d_a
            else:
                lo, f_lo, d_lo = alpha, f_a, d_a
        if hi is None:
            alpha *= 2.0
            continue
        # Secant on the directional derivative, safeguarded into the bracket interior.
        a, b = sorted((lo, hi))
        trial = None
        if math.isfinite(d_hi) and d_hi != d_lo:
            trial = lo - d_lo * (hi - lo) / (d_hi - d_lo)
        if trial is None or not (a + 0.05 * (b - a) < trial < b - 0.05 * (b - a)):
            trial = 0.5 * (a + b)
        if b - a <= 1e-16 * max(1.0, b):
            break
        alpha = trial
    return best


def polak_ribiere(fun, x0, gtol=1e-8, maxiter=100):
    """Minimize ``fun`` (returning value and gradient) by PR+ conjugate gradient.

    Strong-Wolfe line search; the direction restarts to steepest descent
    when ``beta`` goes negative or the direction stops being a descent
    direction.

    Returns ``(x, f, n_iter)``. Raises :class:`OptimizationError` with the
    best iterate when the starting value or gradient is non-finite.
    """
    x = np.asarray(x0, dtype=float).copy()
    f, g = fun(x)
    if not (math.isfinite(f) and np.all(np.isfinite(g))):
        raise OptimizationError("non-finite objective at the starting point", best=x)
    p = -g
    alpha_prev = slope_prev = None
    it = 0
    for it in range(1, maxiter + 1):
        gg = float(g @ g)
        if math.sqrt(gg) <= gtol:
            it -= 1
            break
        slope = float(g @ p)
        if slope >= 0.0:
            p = -g
            slope = -gg
        if alpha_prev is None:
            alpha = min(1.0, 1.0 / math.sqrt(gg))
        else:
            alpha = min(alpha_prev * slope_prev / slope, 1e3 * alpha_prev)
        step = _line_search(fun, x, f, p, slope, alpha)
        if step is None or step[1] >= f:
            break
        alpha, f_new, g_new = step
        x = x + alpha * p
        beta = max(0.0, float(g_new @ (g_new - g)) / gg)
        p = -g_new + beta * p
        f, g = f_new, g_new
        alpha_prev, slope_prev = alpha, slope
    return x, f, it
