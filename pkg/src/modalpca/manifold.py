"""Stereographic-type chart of the constrained unit sphere.

For orthonormal constraints ``c_1..c_{k-1}`` and a center ``v0`` orthogonal to
them, the set ``{v in S^{d-1}: v . c_j = 0, v != -v0}`` is mapped onto
``R^{d-k}`` by ``beta = U^T v / (1 + v0^T v)`` where ``U`` is an orthonormal
basis of the complement of ``span{c_1..c_{k-1}, v0}``.
"""

from dataclasses import dataclass

import numpy as np

from .errors import (ChartSingularityError, DimensionError, InvalidArgumentError,
                     InvalidFrameError, InvalidPointError)

FRAME_TOL = 1e-8
SINGULARITY_TOL = 1e-10
POINT_TOL = 1e-8
DEPENDENCE_TOL = 1e-8


@dataclass(frozen=True, eq=False)
class Chart:
    v0: np.ndarray
    U: np.ndarray
    constraints: tuple

    @property
    def dim(self):
        return self.U.shape[1]


def constraint_matrix(constraints, d):
    if constraints is None or len(constraints) == 0:
        return np.zeros((d, 0))
    C = np.column_stack([np.asarray(c, dtype=float).ravel() for c in constraints])
    if C.shape[0] != d:
        raise DimensionError(f"constraint length {C.shape[0]} != {d}")
    return C


def complete_basis(frame, d, tol=DEPENDENCE_TOL):
    """Orthonormal basis of the complement of the orthonormal columns of ``frame``.

    Modified Gram-Schmidt over ``e_1..e_d`` in index order; candidates whose
    residual norm falls below ``tol`` are skipped.
    """
    basis = [frame[:, j] for j in range(frame.shape[1])]
    extra = []
    for i in range(d):
        u = np.zeros(d)
        u[i] = 1.0
        for _ in range(2):
            for b in basis:
                u = u - np.dot(b, u) * b
        norm = np.linalg.norm(u)
        if norm <= tol:
            continue
        u = u / norm
        basis.append(u)
        extra.append(u)
        if len(basis) == d:
            break
    if not extra:
        return np.zeros((d, 0))
    return np.column_stack(extra)


def build_chart(v0, constraints=()):
    """Build the chart centered at ``v0`` under the given orthonormal constraints."""
    v0 = np.asarray(v0, dtype=float).ravel()
    d = v0.size
    if not np.all(np.isfinite(v0)):
        raise InvalidArgumentError("v0 must be finite")
    if abs(np.linalg.norm(v0) - 1.0) > FRAME_TOL:
        raise InvalidFrameError("v0 must be a unit vector")
    C = constraint_matrix(constraints, d)
    k1 = C.shape[1]
    if k1 >= d - 1:
        raise DimensionError(f"{k1} constraints leave no chart in dimension {d}")
    frame = np.column_stack([C, v0])
    gram = frame.T @ frame
    if np.max(np.abs(gram - np.eye(k1 + 1))) > FRAME_TOL:
        raise InvalidFrameError("constraints and v0 must be mutually orthonormal")
    U = complete_basis(frame, d)
    if U.shape[1] != d - k1 - 1:
        raise InvalidFrameError("could not complete an orthonormal frame")
    U.setflags(write=False)
    v0 = v0.copy()
    v0.setflags(write=False)
    return Chart(v0=v0, U=U, constraints=tuple(C[:, j].copy() for j in range(k1)))


def chart_forward(chart, v):
    """``U^T v / (1 + v0^T v)``."""
    v = np.asarray(v, dtype=float).ravel()
    if not np.all(np.isfinite(v)) or abs(np.linalg.norm(v) - 1.0) > POINT_TOL:
        raise InvalidPointError("point must be a finite unit vector")
    for c in chart.constraints:
        if abs(np.dot(c, v)) > POINT_TOL:
            raise InvalidPointError("point violates an orthogonality constraint")
    denom = 1.0 + float(np.dot(chart.v0, v))
    if denom < SINGULARITY_TOL:
        raise ChartSingularityError("point is the excluded antipode of the chart center")
    return chart.U.T @ v / denom


def chart_inverse(chart, beta):
    """``(2 U beta + (1 - |beta|^2) v0) / (1 + |beta|^2)``."""
    beta = np.asarray(beta, dtype=float).ravel()
    if beta.size != chart.dim:
        raise DimensionError(f"beta has length {beta.size}, chart has {chart.dim}")
    if not np.all(np.isfinite(beta)):
        raise InvalidArgumentError("beta must be finite")
    b2 = float(np.dot(beta, beta))
    v = (2.0 * (chart.U @ beta) + (1.0 - b2) * chart.v0) / (1.0 + b2)
    # Round-off drift only; the formula is exactly unit-norm in exact arithmetic.
    return v / np.linalg.norm(v)


def chart_inverse_jacobian(chart, beta):
    """Jacobian ``d v / d beta`` of :func:`chart_inverse`, shape ``(d, d-k)``."""
    beta = np.asarray(beta, dtype=float).ravel()
    b2 = float(np.dot(beta, beta))
    denom = 1.0 + b2
    v = (2.0 * (chart.U @ beta) + (1.0 - b2) * chart.v0) / denom
    return 2.0 * (chart.U - np.outer(chart.v0 + v, beta)) / denom
