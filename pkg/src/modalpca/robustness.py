"""Influence function and breakdown-point lower bound for modal PCA.

Both diagnostics work on mode-centered data, where the mode of every
projection is pinned at zero and a direction ``w`` is scored by
``sum_i p_i phi_h(w'x_i)`` at a fixed bandwidth ``h``.
"""

import math
import warnings
from dataclasses import dataclass, replace

import numpy as np
from scipy import linalg

from .baseline import cpca_minor
from .errors import DimensionError, InvalidArgumentError, SingularSystemError
from .estimator import FitConfig, MpcaModel, fit, weighted_direction_update
from .grid import GridConfig, canonical_sign, grid_init, pinned_density_score
from .kernel import SQRT_2PI, Bandwidth, kernel_derivatives
from .manifold import complete_basis, constraint_matrix
from .synth import ScenarioSpec, generate
from .seeding import derive_seed, stream

CONDITION_LIMIT = 1e12


# --------------------------------------------------------------------------
# Pinned-mode direction problem


def _pinned_terms(X, w, h, p):
    z = X @ w / h
    k = np.exp(-0.5 * z * z)
    pk = k if p is None else p * k
    f = float(pk.sum())
    grad = -(X.T @ (pk * z)) / h
    hess = (X.T * (pk * (z * z - 1.0))) @ X / (h * h)
    return f, grad, hess


def refine_pinned(data, w0, h, constraints=(), weights=None, tol=1e-14, max_iter=100):
    """Riemannian Newton ascent of ``sum_i p_i exp(-(w'x_i)^2 / 2h^2)``.

    The search stays on the unit sphere orthogonal to ``constraints``. Steps
    that fail to increase the objective are halved; where the Riemannian
    Hessian is not negative definite a scaled gradient step is used.
    Returns a unit vector, stationary to round-off.
    """
    X = np.asarray(data, dtype=float)
    h = float(Bandwidth(h))
    p = None if weights is None else np.asarray(weights, dtype=float)
    C = constraint_matrix(constraints, X.shape[1])
    w = np.asarray(w0, dtype=float)
    w = _project(w, C)
    if X.shape[1] - C.shape[1] <= 1:
        return w
    f, grad, hess = _pinned_terms(X, w, h, p)
    for _ in range(max_iter):
        T = complete_basis(np.column_stack([C, w]), X.shape[1])
        rg = T.T @ grad
        rh = T.T @ hess @ T - float(w @ grad) * np.eye(T.shape[1])
        evals = np.linalg.eigvalsh(rh)
        if evals[-1] < 0.0:
            xi = -np.linalg.solve(rh, rg)
        else:
            xi = rg / max(abs(evals).max(), 1e-300)
        if not np.all(np.isfinite(xi)) or np.linalg.norm(xi) < tol:
            break
        improved = False
        for _ in range(40):
            w_new = _project(w + T @ xi, C)
            f_new, g_new, h_new = _pinned_terms(X, w_new, h, p)
            if f_new >= f:
                improved = True
                break
            xi = 0.5 * xi
        if not improved:
            break
        step = np.linalg.norm(w_new - w)
        w, f, grad, hess = w_new, f_new, g_new, h_new
        if step < tol:
            break
    return w


def _project(v, C):
    v = np.asarray(v, dtype=float)
    if C.shape[1]:
        v = v - C @ (C.T @ v)
        v = v - C @ (C.T @ v)
    return v / np.linalg.norm(v)


def pinned_value(data, w, h):
    """``h sqrt(2 pi) sum_i phi_h(w'x_i)``: the effective count of points at the mode."""
    z = np.asarray(data, dtype=float) @ np.asarray(w, dtype=float) / float(h)
    return float(np.sum(np.exp(-0.5 * z * z)))


def pinned_ascent(data, w0, h, constraints=(), max_iter=200, tol=1e-10, inner_tol=1e-8):
    """Minorize-maximize direction updates with the mode pinned at 0, then Newton polish."""
    X = np.asarray(data, dtype=float)
    w = np.asarray(w0, dtype=float)
    if X.shape[1] - len(constraints) <= 1:
        return refine_pinned(X, w, h, constraints)
    f = pinned_value(X, w, h)
    for _ in range(max_iter):
        w_new = weighted_direction_update(X, 0.0, w, constraints, h, inner_tol)
        f_new = pinned_value(X, w_new, h)
        if f_new <= f * (1.0 + tol):
            if f_new > f:
                w = w_new
            break
        w, f = w_new, f_new
    return refine_pinned(X, w, h, constraints)


def _directions(model):
    if isinstance(model, MpcaModel):
        return model.directions
    V = np.asarray(model, dtype=float)
    return V[:, None] if V.ndim == 1 else V


def polish_directions(data, directions, h, weights=None):
    """Sequentially re-solve the pinned problem from the given starting directions."""
    V = _directions(directions)
    out = []
    for l in range(V.shape[1]):
        w = refine_pinned(data, V[:, l], h, out, weights)
        if float(w @ V[:, l]) < 0:
            w = -w
        out.append(w)
    return np.column_stack(out)


# --------------------------------------------------------------------------
# Influence function


@dataclass(frozen=True, eq=False)
class InfluenceResult:
    u: np.ndarray
    k: int
    if_vector: np.ndarray
    norm: float


class InfluenceOperator:
    """Analytic influence function of MC_1..MC_k under the empirical measure.

    For each component ``l`` with ``A_l = I - sum_{j<=l} w_j w_j'``,
    ``B_l = h^-3 mean(phi''(w_l'x/h) x x')``, ``psi_l = h^-2 mean(phi'(w_l'x/h) x)``,
    ``C_l = (w_l'psi_l) I + w_l psi_l'`` and
    ``d_l(u) = psi_l - h^-2 phi'(w_l'u/h) u``, the influence solves

        (A_l B_l - C_l) IF_l = A_l d_l + sum_{j<l} [(w_j'psi_l) I + w_j psi_l'] IF_j.

    The coupling matrices use ``psi_l`` (the multipliers of component ``l``);
    they reduce to ``C_j`` only when ``psi_l`` has no component along ``w_j``.

    Parameters
    ----------
    data : ndarray, shape (a, d)
        Mode-centered sample.
    directions : MpcaModel or ndarray
        Starting directions; re-solved on the pinned problem at ``h`` unless
        ``polish`` is false.
    h : float
        Bandwidth shared by all components.
    k : int
        Highest component index needed.
    """

    def __init__(self, data, directions, h, k=1, polish=True):
        X = np.asarray(data, dtype=float)
        V = _directions(directions)
        if not 1 <= k <= V.shape[1]:
            raise DimensionError(f"k must be in [1, {V.shape[1]}]")
        self.h = h = float(Bandwidth(h))
        V = V[:, :k]
        self.W = polish_directions(X, V, h) if polish else V.copy()
        d = X.shape[1]
        self.d, self.k = d, k
        self.psi, self.B, self.A, self.C, self.M, self.lu = [], [], [], [], [], []
        for l in range(k):
            w = self.W[:, l]
            d1, d2 = kernel_derivatives(X @ w / h)
            psi = (X.T @ d1) / (len(X) * h ** 2)
            B = (X.T * d2) @ X / (len(X) * h ** 3)
            A = np.eye(d) - self.W[:, :l + 1] @ self.W[:, :l + 1].T
            C = float(w @ psi) * np.eye(d) + np.outer(w, psi)
            M = A @ B - C
            cond = np.linalg.cond(M)
            if not math.isfinite(cond) or cond > CONDITION_LIMIT:
                raise SingularSystemError(f"influence system for MC_{l + 1} is singular (cond={cond:.3g})")
            self.psi.append(psi)
            self.B.append(B)
            self.A.append(A)
            self.C.append(C)
            self.M.append(M)
            self.lu.append(linalg.lu_factor(M))

    def _rhs(self, l, u, previous):
        w, psi, h = self.W[:, l], self.psi[l], self.h
        d1, _ = kernel_derivatives(float(w @ u) / h)
        rhs = self.A[l] @ (psi - d1 / h ** 2 * u)
        for j in range(l):
            wj = self.W[:, j]
            rhs = rhs + float(wj @ psi) * previous[j] + wj * float(psi @ previous[j])
        return rhs

    def all(self, u):
        """Influence vectors of MC_1..MC_k at contamination point ``u``."""
        u = np.asarray(u, dtype=float).ravel()
        if u.size != self.d or not np.all(np.isfinite(u)):
            raise InvalidArgumentError("u must be a finite vector of the data dimension")
        out = []
        for l in range(self.k):
            out.append(linalg.lu_solve(self.lu[l], self._rhs(l, u, out)))
        return out

    def __call__(self, u):
        return self.all(u)[-1]

    def residual(self, u):
        """Relative residual of the last linear solve."""
        vecs = self.all(u)
        rhs = self._rhs(self.k - 1, np.asarray(u, dtype=float), vecs)
        r = self.M[-1] @ vecs[-1] - rhs
        return float(np.linalg.norm(r) / max(np.linalg.norm(rhs), 1e-300))


def influence_mpca(data, model, u, k, h, polish=True):
    """Analytic influence function of MC_k at ``u``; see :class:`InfluenceOperator`."""
    vec = InfluenceOperator(data, model, h, k, polish)(u)
    return InfluenceResult(np.asarray(u, dtype=float).ravel(), k, vec, float(np.linalg.norm(vec)))


def mpca_refit(directions, h):
    """Refit procedure for :func:`influence_numeric`: pinned problem at fixed ``h``."""
    V = _directions(directions)

    def refit(data, weights, k):
        return polish_directions(data, V[:, :k], h, weights)[:, k - 1]

    return refit


def cpca_refit(data, weights, k):
    """Classical minor component ``k`` of the weighted sample."""
    return cpca_minor(data, k, weights)


def influence_numeric(data, refit, u, k, epsilon=1e-3):
    """Difference quotient ``[T((1-eps)F + eps delta_u) - T(F)] / eps``.

    ``refit(points, weights, k)`` must return the ``k``-th direction for a
    weighted sample. The contaminated direction is sign-aligned with the
    clean one before differencing.
    """
    if not 0.0 < epsilon <= 0.1:
        raise InvalidArgumentError("epsilon must be in (0, 0.1]")
    X = np.asarray(data, dtype=float)
    u = np.asarray(u, dtype=float).ravel()
    a = X.shape[0]
    Z = np.vstack([X, u])
    clean = np.r_[np.full(a, 1.0 / a), 0.0]
    dirty = np.r_[np.full(a, (1.0 - epsilon) / a), epsilon]
    w0 = refit(Z, clean, k)
    w1 = refit(Z, dirty, k)
    if float(w1 @ w0) < 0:
        w1 = -w1
    return (w1 - w0) / epsilon


def influence_grid(operator_or_fn, lim=4.0, resolution=81):
    """Rows ``(u1, u2, norm)`` over a square grid on ``[-lim, lim]^2``."""
    axis = np.linspace(-lim, lim, resolution)
    rows = []
    for u1 in axis:
        for u2 in axis:
            rows.append((float(u1), float(u2), float(np.linalg.norm(operator_or_fn(np.array([u1, u2]))))))
    return rows


# --------------------------------------------------------------------------
# Breakdown point lower bound


@dataclass(frozen=True, eq=False)
class LbbpReport:
    a: int
    M_a: float
    M_a_star: float
    b_star: int
    bound: float
    h: float
    w1: np.ndarray
    restarts: int = 0


def lbbp_bound(a, M_a, M_a_star):
    """``b* = max(0, ceil(M_a - M_a*) - 1)`` and the bound ``b* / (a + b*)``."""
    b_star = max(0, math.ceil(M_a - M_a_star) - 1)
    return b_star, b_star / (a + b_star)


def _random_rotation(rng, d):
    Q, R = np.linalg.qr(rng.standard_normal((d, d)))
    return Q * np.sign(np.diag(R))


def constrained_sup(data, w1, h, grid=GridConfig(), restarts=5, max_restarts=40, tol=1e-3, seed=0):
    """Best value of ``h sqrt(2 pi) sum phi_h(w'x_i)`` found over ``w`` orthogonal to ``w1``.

    Restart 0 uses the canonical grid; later restarts use seeded random
    rotations of it. Restarts continue past ``restarts`` until one more
    restart improves the best value by at most ``tol``. This is a lower
    estimate of the supremum, not a certificate.
    """
    X = np.asarray(data, dtype=float)
    d = X.shape[1]
    score = pinned_density_score(h)
    best = -math.inf
    count = 0
    for r in range(max_restarts):
        basis = None if r == 0 else _random_rotation(stream(seed, 7, r), d)
        w = grid_init(X, [w1], grid, score=score, basis=basis)
        w = pinned_ascent(X, w, h, [w1])
        value = pinned_value(X, w, h)
        gain = value - best
        best = max(best, value)
        count = r + 1
        if count >= max(restarts, 2) and gain <= tol:
            break
    return best, count


def lbbp(data, model, h=None, grid=GridConfig(), restarts=5, max_restarts=40, tol=1e-3, seed=0,
         polish=True):
    """Computable lower bound of the angular breakdown point of MC_1.

    Parameters
    ----------
    data : ndarray, shape (a, d)
        Mode-centered clean sample.
    model : MpcaModel
        Supplies MC_1 and, unless ``h`` is given, its bandwidth.
    """
    X = np.asarray(data, dtype=float)
    a, d = X.shape
    if d < 2:
        raise DimensionError("breakdown bound needs d >= 2")
    if h is None:
        h = model.components[0].bandwidth
    h = float(Bandwidth(h))
    w1 = _directions(model)[:, 0]
    if polish:
        w1 = canonical_sign(refine_pinned(X, w1, h))
    M_a = pinned_value(X, w1, h)
    M_star, count = constrained_sup(X, w1, h, grid, restarts, max_restarts, tol, seed)
    if M_star > M_a:
        warnings.warn("constrained search beat MC_1 (M_a* > M_a); bound reported as 0", RuntimeWarning)
    b_star, bound = lbbp_bound(a, M_a, M_star)
    return LbbpReport(a, M_a, M_star, b_star, bound, h, w1, count)


def lbbp_for_sample(X, cfg=None, **kwargs):
    """Fit a full-rank model, mode-center ``X`` with it and compute the bound."""
    d = X.shape[1]
    cfg = replace(cfg or FitConfig(), n_components=d)
    model = fit(X, cfg)
    return lbbp(X - model.center, model, **kwargs)


# --------------------------------------------------------------------------
# Breakdown experiment


@dataclass(frozen=True)
class BreakdownRow:
    alpha: float
    seed: int
    cosine: float


def _breakdown_cell(spec, alphas, seed, cfg):
    clean, _, _ = generate(replace(spec, outlier_fraction=0.0, seed=seed))
    ref = fit(clean, cfg).components[0].direction
    rows = []
    for alpha in alphas:
        if alpha == 0:
            cos = 1.0
        else:
            X, _, _ = generate(replace(spec, outlier_fraction=alpha, seed=derive_seed(seed, 1)))
            v = fit(X, cfg).components[0].direction
            cos = min(1.0, abs(float(v @ ref)))
        rows.append(BreakdownRow(float(alpha), int(seed), cos))
    return rows


def breakdown_experiment(spec, alphas, seeds, cfg=None, mapper=map):
    """|cos| between MC_1 of a clean sample and of its contaminated versions.

    For each seed the clean sample is ``spec`` drawn with no outliers. The
    contaminated samples come from a second, independent draw of the same
    size in which ``floor(alpha n)`` rows are replaced by outliers; the rows
    replaced at a smaller ``alpha`` are a subset of those at a larger one.
    ``alpha = 0`` is reported as cosine 1 by definition.
    ``mapper`` may be a pool's ordered ``map``.
    """
    alphas = [float(a) for a in alphas]
    if any(not 0.0 <= a <= 0.5 for a in alphas):
        raise InvalidArgumentError("alphas must lie in [0, 0.5]")
    cfg = replace(cfg or FitConfig(), n_components=1)
    cells = mapper(lambda s: _breakdown_cell(spec, alphas, s, cfg), list(seeds))
    return [row for cell in cells for row in cell]


def breakdown_fraction(rows, threshold=0.1):
    """Smallest ``alpha`` whose median cosine across seeds drops below ``threshold``."""
    by_alpha = {}
    for r in rows:
        by_alpha.setdefault(r.alpha, []).append(r.cosine)
    for alpha in sorted(by_alpha):
        if float(np.median(by_alpha[alpha])) < threshold:
            return alpha
    return None


def calibrate_sigma_z(target, n=500, seed=0, lo=0.01, hi=0.5, iters=30, cfg=None, **lbbp_kwargs):
    """Bisect (in log scale) the inlier spread ``sigma_z`` of the 3-D design to hit a target bound.

    The bound grows as ``sigma_z`` shrinks. Returns ``(sigma_z, report)``;
    an unreachable target returns the closest end of ``[lo, hi]``.
    """
    def evaluate(sz):
        X, _, _ = generate(ScenarioSpec("lbbp-3d", 3, n, 0.0, seed=seed, sigma_z=sz))
        return lbbp_for_sample(X, cfg, **lbbp_kwargs)

    r_lo, r_hi = evaluate(lo), evaluate(hi)
    for sz, rep, beyond in ((lo, r_lo, target > r_lo.bound), (hi, r_hi, target < r_hi.bound)):
        if beyond:
            warnings.warn(f"target bound {target} is outside the reachable range "
                          f"[{r_hi.bound:.4g}, {r_lo.bound:.4g}]; using sigma_z={sz}", RuntimeWarning)
            return sz, rep
    a, b = math.log(lo), math.log(hi)
    best = min(((lo, r_lo), (hi, r_hi)), key=lambda t: abs(t[1].bound - target))
    for _ in range(iters):
        mid = 0.5 * (a + b)
        rep = evaluate(math.exp(mid))
        if abs(rep.bound - target) < abs(best[1].bound - target):
            best = (math.exp(mid), rep)
        if rep.bound > target:
            a = mid
        else:
            b = mid
        if b - a < 1e-4:
            break
    return best
