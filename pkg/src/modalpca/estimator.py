"""Modal PCA fit: alternating mode and direction updates with deflation.

For each component the mode ``m`` and direction ``v`` maximize the kernel
density of the projections at their mode,
``(1/N) sum_i phi_h(m - v'x_i)``, subject to ``v`` being orthogonal to the
components found before it. Components are therefore extracted from the
most concentrated (minor) direction upward.
"""

import math
from dataclasses import dataclass, field

import numpy as np
from .errors import DegenerateSampleError, DimensionError, InvalidArgumentError, OptimizationError
from .grid import GridConfig, canonical_sign, data_scale, grid_init
from .kernel import SQRT_2PI, TERRELL_CONSTANT, Bandwidth
from .manifold import build_chart, chart_inverse, chart_inverse_jacobian, constraint_matrix
from .mode import half_sample_mode, newton_mode
from .optim import polak_ribiere

# Relative bandwidth floor for projections with (numerically) no spread.
BANDWIDTH_FLOOR = 1e-9


@dataclass(frozen=True)
class FitConfig:
    n_components: int = 1
    grid: GridConfig = field(default_factory=GridConfig)
    outer_tol: float = 1e-7
    max_outer: int = 200
    inner_tol: float = 1e-8
    max_inner: int = None  # default 100 * (d - k)
    seed: int = 0
    mad_scale: float = 1.0
    record_trace: bool = False

    def __post_init__(self):
        if int(self.n_components) != self.n_components or self.n_components < 1:
            raise InvalidArgumentError("n_components must be an integer >= 1")
        for name in ("outer_tol", "inner_tol", "mad_scale"):
            value = getattr(self, name)
            if not (isinstance(value, (int, float)) and math.isfinite(value) and value > 0):
                raise InvalidArgumentError(f"{name} must be a finite number > 0")
        if int(self.max_outer) != self.max_outer or self.max_outer < 1:
            raise InvalidArgumentError("max_outer must be an integer >= 1")
        if self.max_inner is not None and (int(self.max_inner) != self.max_inner or self.max_inner < 1):
            raise InvalidArgumentError("max_inner must be an integer >= 1")


@dataclass(frozen=True)
class TraceStep:
    """One objective evaluation; steps sharing ``segment`` share a bandwidth."""

    segment: int
    stage: str
    bandwidth: float
    objective: float


@dataclass(frozen=True, eq=False)
class ModalComponent:
    index: int
    direction: np.ndarray
    mode: float
    bandwidth: float
    objective: float
    iterations: int
    converged: bool
    trace: tuple = ()


@dataclass(frozen=True, eq=False)
class MpcaModel:
    components: tuple
    dim: int
    n_samples: int

    @property
    def n_components(self):
        return len(self.components)

    @property
    def directions(self):
        """``(d, r)`` matrix whose columns are MC_1..MC_r."""
        return np.column_stack([c.direction for c in self.components])

    @property
    def modes(self):
        return np.array([c.mode for c in self.components])

    @property
    def bandwidths(self):
        return np.array([c.bandwidth for c in self.components])

    @property
    def center(self):
        """``sum_k m_k v_k``: the mode point when ``r == d``, a partial sum otherwise."""
        return self.directions @ self.modes

    def minor_subspace(self, r=None):
        V = self.directions
        return V if r is None else V[:, :r]

    def principal_subspace(self, p):
        """Orthonormal basis of the ``p``-dimensional principal subspace.

        With all ``d`` components this is the span of the last ``p``
        extracted directions. Otherwise it is the orthogonal complement of the
        minor components, which requires ``r == d - p``.
        """
        d, r = self.dim, self.n_components
        if not 1 <= p <= d:
            raise DimensionError(f"p must be in [1, {d}]")
        V = self.directions
        if r == d:
            return V[:, d - p:]
        if r != d - p:
            raise DimensionError(f"a {p}-dimensional principal subspace needs {d - p} minor components, have {r}")
        U, _, _ = np.linalg.svd(V, full_matrices=True)
        return U[:, r:]


def _check_data(data):
    X = np.asarray(data, dtype=float)
    if X.ndim != 2:
        raise DimensionError("data must be a 2-D array")
    n, d = X.shape
    if n < 2:
        raise DegenerateSampleError("need at least 2 observations")
    if d < 2:
        raise DimensionError("need at least 2 columns")
    if not np.all(np.isfinite(X)):
        raise InvalidArgumentError("data must be finite")
    return X


def objective(data, m, v, h):
    """Kernel density of the projections ``v'x_i`` evaluated at ``m``."""
    X = np.asarray(data, dtype=float)
    h = float(Bandwidth(h))
    u = (m - X @ np.asarray(v, dtype=float)) / h
    return float(np.mean(np.exp(-0.5 * u * u)) / (SQRT_2PI * h))


def select_bandwidth(projected, floor, mad_scale=1.0):
    """Terrell bandwidth with a floor for projections that have collapsed."""
    z = np.asarray(projected, dtype=float)
    n = z.size
    mad = float(np.median(np.abs(z - np.median(z))))
    if mad <= 0.0:
        gaps = np.diff(np.unique(z))
        mad = float(gaps.min()) if gaps.size else 0.0
    return Bandwidth(max(TERRELL_CONSTANT * mad_scale * mad * n ** -0.2, floor))


def relaxation_weights(residuals, h):
    """Normalized Jensen weights ``q_i`` proportional to ``phi_h(residual_i)``."""
    u2 = (np.asarray(residuals, dtype=float) / h) ** 2
    w = np.exp(-0.5 * (u2 - u2.min()))
    return w / w.sum()


def _project_out(v, C):
    if C.shape[1]:
        v = v - C @ (C.T @ v)
        v = v - C @ (C.T @ v)
    return v / np.linalg.norm(v)


def weighted_direction_update(data, m, v_curr, constraints, h, inner_tol=1e-8, max_inner=None,
                              weights=None):
    """One minorize-maximize step for the direction at fixed mode and bandwidth.

    Minimizes ``G(v) = sum_i q_i (m - v'x_i)^2`` over the constrained sphere,
    with ``q_i`` the normalized kernel weights at ``v_curr``, by Polak-Ribiere
    conjugate gradient in chart coordinates centered at ``v_curr``. The step
    is rejected (``v_curr`` returned) unless the kernel density strictly
    increases.

    ``weights`` optionally reweights observations (contaminated measures);
    the kernel density is then the weighted average.
    """
    X = np.asarray(data, dtype=float)
    v_curr = np.asarray(v_curr, dtype=float)
    C = constraint_matrix(constraints, X.shape[1])
    chart = build_chart(v_curr, [C[:, j] for j in range(C.shape[1])])
    if chart.dim == 0:
        return v_curr.copy()
    p = None if weights is None else np.asarray(weights, dtype=float)

    def density(v):
        u = (m - X @ v) / h
        k = np.exp(-0.5 * u * u)
        return float(k.mean() if p is None else p @ k)

    z = X @ v_curr
    q = relaxation_weights(m - z, h)
    if p is not None:
        q = q * p
        q = q / q.sum()
    S = X.T @ (q[:, None] * X)
    s = X.T @ q
    norm = float(np.trace(S)) + m * m
    if not norm > 0.0:
        return v_curr.copy()
    S = S / norm
    s = s / norm
    m2 = m * m / norm

    def G(v):
        return float(v @ S @ v - 2.0 * m * (v @ s) + m2)

    def fun(beta):
        v = chart_inverse(chart, beta)
        grad_v = 2.0 * (S @ v) - 2.0 * m * s
        g = chart_inverse_jacobian(chart, beta).T @ grad_v
        return G(v), g

    if max_inner is None:
        max_inner = 100 * chart.dim
    beta0 = np.zeros(chart.dim)
    g0 = fun(beta0)[1]
    if not np.all(np.isfinite(g0)):
        raise OptimizationError("non-finite gradient of the relaxed objective", best=v_curr.copy())
    if np.linalg.norm(g0) <= inner_tol:
        return v_curr.copy()
    try:
        beta, _, _ = polak_ribiere(fun, beta0, inner_tol, int(max_inner))
    except OptimizationError as exc:
        raise OptimizationError(str(exc), best=v_curr.copy()) from exc
    v_new = _project_out(chart_inverse(chart, beta), C)
    if G(v_new) > G(v_curr) or density(v_new) <= density(v_curr):
        return v_curr.copy()
    return v_new


def _mode_step(z, h, m_prev):
    """Best of Newton from the previous mode and from the half-sample mode."""
    warm = newton_mode(z, h, m_prev)
    fresh = newton_mode(z, h, half_sample_mode(z))
    return fresh if fresh.density > warm.density else warm


def _fit_component(X, v, C, cfg, index, floor):
    d = X.shape[1]
    k = C.shape[1] + 1
    max_inner = cfg.max_inner if cfg.max_inner is not None else 100 * max(d - k, 1)
    trace = []
    z = X @ v
    h = select_bandwidth(z, floor, cfg.mad_scale)
    m = newton_mode(z, h, half_sample_mode(z)).m
    if d - C.shape[1] == 1:
        f = objective(X, m, v, h)
        return ModalComponent(index, v, m, float(h), f, 0, True, ())

    f_prev = None
    converged = False
    iterations = 0
    for iterations in range(1, cfg.max_outer + 1):
        z = X @ v
        h = select_bandwidth(z, floor, cfg.mad_scale)
        f = objective(X, m, v, h)
        if cfg.record_trace:
            trace.append(TraceStep(iterations, "bandwidth", float(h), f))
        est = _mode_step(z, h, m)
        f_m = objective(X, est.m, v, h)
        if f_m > f:
            m, f = est.m, f_m
        if cfg.record_trace:
            trace.append(TraceStep(iterations, "mode", float(h), f))
        v_new = weighted_direction_update(X, m, v, [C[:, j] for j in range(C.shape[1])], h,
                                          cfg.inner_tol, max_inner)
        f_new = objective(X, m, v_new, h)
        if f_new > f:
            v, f = v_new, f_new
        if cfg.record_trace:
            trace.append(TraceStep(iterations, "direction", float(h), f))
        if f_prev is not None and abs(f - f_prev) < cfg.outer_tol * f:
            converged = True
            break
        f_prev = f
    signed = canonical_sign(v)
    if not np.array_equal(signed, v):
        v, m = signed, -m
    return ModalComponent(index, v, float(m), float(h), f, iterations, converged, tuple(trace))


def fit(data, cfg=FitConfig()):
    """Fit ``cfg.n_components`` modal minor components.

    Each component starts from :func:`grid_init` under orthogonality to the
    earlier components, then alternates bandwidth re-selection, a mode
    update (half-sample mode + Newton) and a direction update
    (:func:`weighted_direction_update`) until the objective changes by less
    than ``outer_tol`` relative.
    """
    X = _check_data(data)
    n, d = X.shape
    if cfg.n_components > d:
        raise DimensionError(f"n_components={cfg.n_components} exceeds dimension {d}")
    scale = data_scale(X)
    if scale <= 0.0:
        raise DegenerateSampleError("all rows of the data are identical")
    floor = BANDWIDTH_FLOOR * scale
    components = []
    for k in range(1, cfg.n_components + 1):
        C = constraint_matrix([c.direction for c in components], d)
        v = grid_init(X, [c.direction for c in components], cfg.grid)
        v = _project_out(v, C)
        components.append(_fit_component(X, v, C, cfg, k, floor))
    return MpcaModel(tuple(components), d, n)
