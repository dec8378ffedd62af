"""Dense linear-algebra substrate: SVD, pseudoinverse, orthogonal projectors.

All callers funnel matrices and vectors through :func:`as_matrix` and
:func:`as_vector`, which enforce shape and finiteness once so the numeric
routines can assume clean float64 input.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ValidationError

# Singular values at or below max(m, n) * sigma_1 * RANK_RTOL count as zero.
RANK_RTOL = 1e-12


def as_matrix(a, name: str = "matrix") -> np.ndarray:
    """Validate and return `a` as a 2-D float64 array (a copy)."""
    arr = np.array(a, dtype=float, copy=True)
    if arr.ndim != 2:
        raise ValidationError(f"{name} must be 2-D, got ndim={arr.ndim}")
    if arr.shape[0] < 1 or arr.shape[1] < 1:
        raise ValidationError(f"{name} must have at least one row and column, got {arr.shape}")
    if not np.isfinite(arr).all():
        raise ValidationError(f"{name} contains non-finite entries")
    return arr


def as_vector(x, n: int | None = None, name: str = "vector") -> np.ndarray:
    """Validate and return `x` as a 1-D float64 array (a copy).

    When `n` is given the length must match it.
    """
    arr = np.array(x, dtype=float, copy=True)
    if arr.ndim != 1:
        raise ValidationError(f"{name} must be 1-D, got ndim={arr.ndim}")
    if arr.shape[0] < 1:
        raise ValidationError(f"{name} must have at least one entry")
    if n is not None and arr.shape[0] != n:
        raise ValidationError(f"{name} has length {arr.shape[0]}, expected {n}")
    if not np.isfinite(arr).all():
        raise ValidationError(f"{name} contains non-finite entries")
    return arr


@dataclass(frozen=True, eq=False)
class SvdFactorization:
    """Full SVD a = u @ diag(sigma) @ vt with u (m, m), vt (n, n).

    `sigma` is nonincreasing with min(m, n) entries; `rank` counts the
    singular values above max(m, n) * sigma[0] * RANK_RTOL.
    """

    u: np.ndarray
    sigma: np.ndarray
    vt: np.ndarray
    rank: int

    @property
    def v(self) -> np.ndarray:
        return self.vt.T

    def row_space_basis(self) -> np.ndarray:
        """Orthonormal basis of the row space, shape (n, rank)."""
        return self.vt[: self.rank].T

    def column_space_basis(self) -> np.ndarray:
        """Orthonormal basis of the column space, shape (m, rank)."""
        return self.u[:, : self.rank]


def svd(a) -> SvdFactorization:
    """Full SVD of a dense matrix with the package rank rule applied."""
    a = as_matrix(a)
    try:
        u, sigma, vt = np.linalg.svd(a, full_matrices=True)
    except np.linalg.LinAlgError as exc:
        raise ValidationError(f"svd did not converge: {exc}") from exc
    if sigma.size and sigma[0] > 0.0:
        tol = max(a.shape) * sigma[0] * RANK_RTOL
        rank = int(np.count_nonzero(sigma > tol))
    else:
        rank = 0
    return SvdFactorization(u=u, sigma=sigma, vt=vt, rank=rank)


def pseudoinverse(a) -> np.ndarray:
    """Moore-Penrose pseudoinverse built from :func:`svd` (n, m).

    A zero matrix yields the zero matrix of transposed shape.
    """
    a = as_matrix(a)
    fac = svd(a)
    if fac.rank == 0:
        return np.zeros((a.shape[1], a.shape[0]))
    v1 = fac.row_space_basis()  # (n, r)
    u1 = fac.column_space_basis()  # (m, r)
    return (v1 / fac.sigma[: fac.rank]) @ u1.T


def row_space_projector(a) -> np.ndarray:
    """Orthogonal projector onto the span of the rows of `a` (n, n)."""
    v1 = svd(a).row_space_basis()
    return v1 @ v1.T


def null_space_projector(a) -> np.ndarray:
    """Orthogonal projector onto the null space of `a` (n, n)."""
    a = as_matrix(a)
    return np.eye(a.shape[1]) - row_space_projector(a)


def column_space_projector(a) -> np.ndarray:
    """Orthogonal projector onto the range of `a` (m, m)."""
    u1 = svd(a).column_space_basis()
    return u1 @ u1.T


def left_null_space_projector(a) -> np.ndarray:
    """Orthogonal projector onto the null space of the transpose (m, m)."""
    a = as_matrix(a)
    return np.eye(a.shape[0]) - column_space_projector(a)


def spectral_norm(a) -> float:
    """Largest singular value of `a`."""
    sig = svd(a).sigma
    return float(sig[0]) if sig.size else 0.0
