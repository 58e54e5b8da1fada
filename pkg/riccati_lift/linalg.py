"""Dense linear-algebra helpers for small matrices.

All solves go through a factorization: Cholesky for symmetric positive
definite systems, column-pivoted QR for general square systems. Explicit
inverses are only formed by :func:`inverse`, which callers use where a formula
needs the matrix itself (A⁻¹ inside the LFT and lifting constructions).
"""
from typing import NamedTuple, Optional

import numpy as np
import scipy.linalg

from .errors import DimensionError, NumericalError, PreconditionError


def as_matrix(value, name: str = "matrix") -> np.ndarray:
    """Coerce ``value`` to a 2-D float array (scalars become 1×1)."""
    arr = np.array(value, dtype=float)
    if arr.ndim == 0:
        arr = arr.reshape(1, 1)
    if arr.ndim != 2:
        raise DimensionError(f"{name} must be a 2-D matrix, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise PreconditionError(f"{name} has non-finite entries")
    return arr


def as_square(value, name: str = "matrix", dim: Optional[int] = None) -> np.ndarray:
    arr = as_matrix(value, name)
    if arr.shape[0] != arr.shape[1]:
        raise DimensionError(f"{name} must be square, got shape {arr.shape}")
    if dim is not None and arr.shape[0] != dim:
        raise DimensionError(f"{name} must be {dim}x{dim}, got {arr.shape[0]}x{arr.shape[1]}")
    return arr


def as_vector(value, dim: int, name: str = "vector") -> np.ndarray:
    arr = np.array(value, dtype=float).reshape(-1)
    if arr.shape[0] != dim:
        raise DimensionError(f"{name} must have length {dim}, got {arr.shape[0]}")
    return arr


def symmetrize(matrix: np.ndarray) -> np.ndarray:
    return 0.5 * (matrix + matrix.T)


def frozen(matrix: np.ndarray) -> np.ndarray:
    """Return ``matrix`` as a read-only array (copying if it is shared)."""
    out = np.array(matrix, dtype=float, copy=True)
    out.setflags(write=False)
    return out


def cho_solve_pd(matrix: np.ndarray, rhs: np.ndarray, what: str = "matrix") -> np.ndarray:
    """Solve ``matrix @ X = rhs`` for symmetric positive definite ``matrix``."""
    try:
        factor = scipy.linalg.cho_factor(symmetrize(matrix), lower=True, check_finite=False)
    except np.linalg.LinAlgError as e:
        raise NumericalError(f"{what} is not numerically positive definite ({e})") from e
    return scipy.linalg.cho_solve(factor, rhs, check_finite=False)


def qr_solve(matrix: np.ndarray, rhs: np.ndarray, rtol: float = 1e-12,
             what: str = "matrix") -> np.ndarray:
    """Solve the square system ``matrix @ X = rhs`` by column-pivoted QR.

    Raises NumericalError when the smallest |R_ii| falls below
    ``rtol`` times the largest.
    """
    q, r, piv = scipy.linalg.qr(matrix, pivoting=True, check_finite=False)
    diag = np.abs(np.diag(r))
    if diag.size == 0 or diag[-1] <= rtol * max(diag[0], np.finfo(float).tiny):
        raise NumericalError(f"{what} is numerically singular")
    z = scipy.linalg.solve_triangular(r, q.T @ rhs, lower=False, check_finite=False)
    x = np.empty_like(z)
    x[piv] = z
    return x


def right_divide(numerator: np.ndarray, denominator: np.ndarray, rtol: float = 1e-12,
                 what: str = "matrix") -> np.ndarray:
    """Return ``numerator @ inv(denominator)`` without forming the inverse."""
    return qr_solve(denominator.T, numerator.T, rtol=rtol, what=what).T


def inverse(matrix: np.ndarray, what: str = "matrix") -> np.ndarray:
    try:
        return scipy.linalg.inv(matrix, check_finite=False)
    except np.linalg.LinAlgError as e:
        raise NumericalError(f"{what} is singular ({e})") from e


def psd_sqrt(matrix: np.ndarray, psd_tolerance: float = 1e-9, what: str = "matrix") -> np.ndarray:
    """Symmetric PSD square root, clamping round-off negative eigenvalues to zero."""
    eigvals, eigvecs = np.linalg.eigh(symmetrize(matrix))
    scale = max(1.0, float(np.max(np.abs(eigvals))) if eigvals.size else 1.0)
    if eigvals.size and eigvals[0] < -psd_tolerance * scale:
        raise PreconditionError(f"{what} is not positive semi-definite (min eigenvalue {eigvals[0]:.3e})")
    root = np.sqrt(np.clip(eigvals, 0.0, None))
    return symmetrize((eigvecs * root) @ eigvecs.T)


class RankMargin(NamedTuple):
    """Smallest rank-relevant singular value and the largest one."""
    sigma_min: float
    sigma_max: float

    def passes(self, rtol: float) -> bool:
        return self.sigma_max > 0.0 and self.sigma_min > rtol * self.sigma_max


def row_rank_margin(matrix: np.ndarray) -> RankMargin:
    """Margin for full row rank: the rows-th singular value (0 if too few columns)."""
    rows, cols = matrix.shape
    sv = scipy.linalg.svdvals(matrix) if matrix.size else np.zeros(0)
    sigma_max = float(sv[0]) if sv.size else 0.0
    sigma_min = float(sv[rows - 1]) if cols >= rows and sv.size >= rows else 0.0
    return RankMargin(sigma_min, sigma_max)


def column_rank_margin(matrix: np.ndarray) -> RankMargin:
    """Margin for full column rank."""
    return row_rank_margin(matrix.T)


def definiteness_margin(matrix: np.ndarray) -> RankMargin:
    """Smallest and largest-magnitude eigenvalue of a symmetric matrix."""
    eigvals = np.linalg.eigvalsh(symmetrize(matrix))
    return RankMargin(float(eigvals[0]), float(np.max(np.abs(eigvals))))
