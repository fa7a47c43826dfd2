"""GRID initializer: cyclic angular grid search over 2-D planes.

Each sweep evaluates a score for a batch of candidate directions at once;
candidate projections are laid out as columns of an ``(n, n_grid)`` array so
the reduction order (``argmax`` over columns) is fixed and deterministic.
"""

import math
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateSampleError, DimensionError, InvalidArgumentError
from .kernel import SQRT_2PI, TERRELL_CONSTANT
from .manifold import constraint_matrix
from .mode import half_sample_mode_columns

PARALLEL_TOL = 1e-8
OBJECTIVES = ("mpca-mode-density",)


@dataclass(frozen=True)
class GridConfig:
    n_grid: int = 21
    n_cycles: int = 10
    objective: str = "mpca-mode-density"
    n_passes: int = 1

    def __post_init__(self):
        if int(self.n_grid) != self.n_grid or self.n_grid < 3:
            raise InvalidArgumentError("n_grid must be an integer >= 3")
        if int(self.n_cycles) != self.n_cycles or self.n_cycles < 1:
            raise InvalidArgumentError("n_cycles must be an integer >= 1")
        if int(self.n_passes) != self.n_passes or self.n_passes < 1:
            raise InvalidArgumentError("n_passes must be an integer >= 1")
        if self.objective not in OBJECTIVES:
            raise InvalidArgumentError(f"unknown grid objective {self.objective!r}")


def data_scale(X):
    """RMS deviation of ``X`` from its coordinate-wise median; 0 iff all rows coincide."""
    X = np.asarray(X, dtype=float)
    return float(np.sqrt(np.mean((X - np.median(X, axis=0)) ** 2)))


def mode_density_score(P, floor):
    """MPCA grid score of each column of ``P``.

    Half-sample mode of the column, Terrell bandwidth of the column (raw
    MAD, floored at ``floor``), then the kernel density at that mode.
    """
    n = P.shape[0]
    S = np.sort(P, axis=0)
    m = half_sample_mode_columns(S)
    med = np.median(S, axis=0)
    mad = np.median(np.abs(S - med), axis=0)
    h = np.maximum(TERRELL_CONSTANT * mad * n ** -0.2, floor)
    u = (m - P) / h
    return np.mean(np.exp(-0.5 * u * u), axis=0) / (SQRT_2PI * h)


def pinned_density_score(h, m=0.0, weights=None):
    """Score ``sum_i p_i * exp(-(w'x_i - m)^2 / (2 h^2))`` with the mode pinned."""
    h = float(h)

    def score(P):
        u = (P - m) / h
        k = np.exp(-0.5 * u * u)
        if weights is None:
            return np.sum(k, axis=0)
        return weights @ k

    return score


def _plane_search(pa, pb, cfg, score):
    """Search ``cos(t) a + sin(t) b`` over ``n_cycles`` halving cycles.

    Returns ``(theta, best_score, last_cycle_scores)``.
    """
    ng = cfg.n_grid
    j = np.arange(ng)
    theta_hat = 0.0
    best = -math.inf
    scores = None
    for t in range(cfg.n_cycles):
        if t == 0:
            thetas = (-0.5 + j / ng) * math.pi
        else:
            half_width = math.pi / 2 ** (t + 1)
            thetas = theta_hat - half_width + j * (2.0 * half_width / ng)
        P = np.outer(pa, np.cos(thetas)) + np.outer(pb, np.sin(thetas))
        scores = score(P)
        idx = int(np.argmax(scores))
        # Later cycles only move the estimate on a strict improvement.
        if t == 0 or scores[idx] > best:
            theta_hat = float(thetas[idx])
            best = float(scores[idx])
    return theta_hat, best, scores


def canonical_sign(v, tol=1e-12):
    """Flip ``v`` so its first non-negligible coordinate is non-negative."""
    v = np.asarray(v, dtype=float)
    nz = np.flatnonzero(np.abs(v) > tol)
    if nz.size and v[nz[0]] < 0:
        return -v
    return v.copy()


def _default_score(X):
    scale = data_scale(X)
    if scale <= 0.0:
        raise DegenerateSampleError("all rows of the data are identical")
    floor = 1e-9 * scale
    return lambda P: mode_density_score(P, floor)


def grid_search_2d(data, cfg=GridConfig(), score=None):
    """Angular grid search for the MPCA direction of two-column data.

    Sweeps ``theta`` over ``[-pi/2, pi/2)`` at ``n_grid`` points, then runs
    ``n_cycles - 1`` refinement cycles on intervals of half-width
    ``pi / 2**(t+1)`` around the incumbent. Returns ``(cos, sin)`` of the
    best angle; ties go to the smallest angle.
    """
    X = np.asarray(data, dtype=float)
    if X.ndim != 2 or X.shape[1] != 2:
        raise DimensionError("grid_search_2d needs an (n, 2) array")
    if X.shape[0] < 2:
        raise DegenerateSampleError("need at least 2 rows")
    if score is None:
        score = _default_score(X)
    theta, _, _ = _plane_search(X[:, 0], X[:, 1], cfg, score)
    return canonical_sign(np.array([math.cos(theta), math.sin(theta)]))


def _orthonormalize_against(v, Q):
    for _ in range(2):
        if Q.shape[1]:
            v = v - Q @ (Q.T @ v)
    return v


def grid_init(data, constraints=(), cfg=GridConfig(), score=None, basis=None):
    """Initial MPCA direction orthogonal to ``constraints``.

    Starting from the first admissible (complement-projected) basis vector,
    each basis vector ``e_i`` in turn spans a plane with the current
    direction; the plane is searched with the cyclic angular grid and the
    direction updated when a candidate strictly beats it.

    Parameters
    ----------
    data : ndarray, shape (n, d)
    constraints : sequence of unit vectors
        Previously fixed, mutually orthonormal directions.
    cfg : GridConfig
    score : callable, optional
        Maps an ``(n, c)`` array of candidate projections to ``c`` scores.
        Defaults to the half-sample-mode kernel density.
    basis : ndarray, shape (d, d), optional
        Orthogonal matrix whose columns replace the canonical basis
        (rotated grids).
    """
    X = np.asarray(data, dtype=float)
    n, d = X.shape
    if n < 2:
        raise DegenerateSampleError("need at least 2 rows")
    C = constraint_matrix(constraints, d)
    if d - C.shape[1] < 1:
        raise DimensionError("constraints leave an empty complement")
    if score is None:
        score = _default_score(X)
    E = np.eye(d) if basis is None else np.asarray(basis, dtype=float)

    candidates = []
    for i in range(d):
        e = _orthonormalize_against(E[:, i].copy(), C)
        norm = np.linalg.norm(e)
        candidates.append(e / norm if norm > PARALLEL_TOL else None)
    start = next((e for e in candidates if e is not None), None)
    if start is None:
        raise DimensionError("no admissible basis direction")
    a = start
    if d - C.shape[1] == 1:
        return canonical_sign(a)

    for _ in range(cfg.n_passes):
        for e in candidates:
            if e is None or abs(np.dot(a, e)) > 1.0 - PARALLEL_TOL:
                continue
            b = _orthonormalize_against(e - np.dot(a, e) * a, C)
            b = b / np.linalg.norm(b)
            pa, pb = X @ a, X @ b
            theta, best, _ = _plane_search(pa, pb, cfg, score)
            incumbent = float(score(pa[:, None])[0])
            if best > incumbent:
                a = math.cos(theta) * a + math.sin(theta) * b
                a = _orthonormalize_against(a, C)
                a = a / np.linalg.norm(a)
    return canonical_sign(a)
