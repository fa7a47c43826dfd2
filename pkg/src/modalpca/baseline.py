"""Classical PCA and the spectral distance between subspaces."""

import math

import numpy as np

from .errors import DegenerateSampleError, DimensionError, InvalidArgumentError, InvalidBasisError
from .grid import canonical_sign

RANK_TOL = 1e-10


def check_basis(B):
    """Return ``B`` as a float ``(d, p)`` array after verifying full column rank."""
    B = np.asarray(B, dtype=float)
    if B.ndim == 1:
        B = B[:, None]
    if B.ndim != 2 or B.shape[1] == 0 or B.shape[1] > B.shape[0]:
        raise InvalidBasisError(f"basis must be (d, p) with 1 <= p <= d, got {B.shape}")
    if not np.all(np.isfinite(B)):
        raise InvalidBasisError("basis must be finite")
    sv = np.linalg.svd(B, compute_uv=False)
    if sv[0] == 0.0 or sv[-1] <= RANK_TOL * sv[0]:
        raise InvalidBasisError("basis columns are linearly dependent")
    return B


def projector(B):
    """Orthogonal projector ``B (B'B)^-1 B'`` onto the column space of ``B``."""
    B = check_basis(B)
    return B @ np.linalg.solve(B.T @ B, B.T)


def specdist(B1, B2):
    """Largest principal angle (radians) between the column spaces of two bases.

    ``arcsin`` of the spectral norm of the difference of the orthogonal
    projectors; the norm is clamped to ``[0, 1]`` against round-off.
    """
    B1, B2 = check_basis(B1), check_basis(B2)
    if B1.shape[0] != B2.shape[0]:
        raise DimensionError("bases live in different ambient dimensions")
    s = np.linalg.norm(projector(B1) - projector(B2), 2)
    return math.asin(min(max(s, 0.0), 1.0))


def weighted_covariance(data, weights=None):
    X = np.asarray(data, dtype=float)
    if weights is None:
        mu = X.mean(axis=0)
        Y = X - mu
        return Y.T @ Y / (X.shape[0] - 1)
    p = np.asarray(weights, dtype=float)
    p = p / p.sum()
    mu = p @ X
    Y = X - mu
    return Y.T @ (p[:, None] * Y)


def cpca_fit(data, p, weights=None):
    """Classical PCA.

    Returns ``(basis, eigenvalues)``: the top-``p`` eigenvectors of the sample
    covariance as columns (descending eigenvalue, first non-negligible
    coordinate non-negative) and the full descending eigenvalue list.
    ``weights`` switches to a weighted mean and covariance.
    """
    X = np.asarray(data, dtype=float)
    if X.ndim != 2 or X.shape[0] < 2:
        raise DegenerateSampleError("need an (n, d) array with n >= 2")
    d = X.shape[1]
    if not 1 <= p <= d:
        raise DimensionError(f"p must be in [1, {d}], got {p}")
    cov = weighted_covariance(X, weights)
    vals, vecs = np.linalg.eigh(cov)
    order = np.argsort(vals)[::-1]
    vals = np.clip(vals[order], 0.0, None)
    vecs = vecs[:, order]
    basis = np.column_stack([canonical_sign(vecs[:, j]) for j in range(p)])
    return basis, vals


def cpca_minor(data, k=1, weights=None):
    """The ``k``-th smallest-variance eigenvector (classical MC_k)."""
    X = np.asarray(data, dtype=float)
    d = X.shape[1]
    basis, _ = cpca_fit(X, d, weights)
    return basis[:, d - k]


def dimension_95(eigenvalues, fraction=0.95):
    """Smallest ``k`` whose leading eigenvalues hold ``fraction`` of the total."""
    lam = np.asarray(eigenvalues, dtype=float)
    if lam.ndim != 1 or lam.size == 0 or np.any(lam < 0) or not np.all(np.isfinite(lam)):
        raise InvalidArgumentError("eigenvalues must be a non-empty list of finite values >= 0")
    total = float(lam.sum())
    if total <= 0.0:
        raise DegenerateSampleError("all eigenvalues are zero")
    lam = np.sort(lam)[::-1]
    ratio = np.cumsum(lam) / total
    # Guard the final partial sum against round-off just below the threshold.
    ratio[-1] = 1.0
    return int(np.argmax(ratio >= fraction)) + 1
