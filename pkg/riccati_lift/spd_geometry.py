"""Symmetric and symmetric positive definite matrices, and the affine-invariant
Riemannian distance on the SPD cone.

The distance between U and V is ``sqrt(sum(log(lambda_i)**2))`` over the
eigenvalues of ``U V^-1``. Those eigenvalues are computed from the symmetric
generalized eigenproblem: with ``V = L L'`` they are the eigenvalues of
``L^-1 U L^-T``, so no non-symmetric product is ever formed.
"""
import logging
from dataclasses import dataclass, field
from typing import NamedTuple, Union

import numpy as np
import scipy.linalg

from .errors import DimensionError, NumericalError, PreconditionError
from .linalg import as_square, frozen, symmetrize
from .tolerances import DEFAULT_TOLERANCES, Tolerances

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class SymMatrix:
    """An immutable real symmetric matrix.

    Symmetry is enforced on construction by averaging with the transpose.
    """
    entries: np.ndarray

    def __post_init__(self):
        arr = as_square(self.entries, "symmetric matrix")
        object.__setattr__(self, "entries", frozen(symmetrize(arr)))

    @property
    def dim(self) -> int:
        return self.entries.shape[0]

    @classmethod
    def identity(cls, dim: int, scale: float = 1.0) -> "SymMatrix":
        return cls(scale * np.eye(dim))

    def __array__(self, dtype=None, copy=None):
        if dtype is None:
            return self.entries
        return self.entries.astype(dtype)

    def __repr__(self):
        return f"{type(self).__name__}(dim={self.dim}, entries={self.entries.tolist()!r})"


@dataclass(frozen=True, eq=False, repr=False)
class SPDMatrix(SymMatrix):
    """A symmetric matrix certified positive definite.

    ``min_eig`` caches the smallest eigenvalue. Construction fails with
    PreconditionError unless ``min_eig > pd_tolerance * max(1, |lambda|_max)``.
    """
    tol: Tolerances = field(default=DEFAULT_TOLERANCES, compare=False)
    min_eig: float = field(init=False)

    def __post_init__(self):
        super().__post_init__()
        check = is_spd(self.entries, self.tol.pd_tolerance)
        if not check.ok:
            raise PreconditionError(
                f"matrix is not positive definite (min eigenvalue {check.min_eig:.3e})"
            )
        object.__setattr__(self, "min_eig", check.min_eig)

    @property
    def base(self) -> SymMatrix:
        return SymMatrix(self.entries)


MatrixLike = Union[SymMatrix, np.ndarray]


class SpdCheck(NamedTuple):
    ok: bool
    min_eig: float


def is_spd(matrix, tol: float = DEFAULT_TOLERANCES.pd_tolerance) -> SpdCheck:
    """Return whether ``matrix`` is numerically positive definite.

    True iff the smallest eigenvalue exceeds ``tol * max(1, spectral radius)``.
    Non-square or non-finite input is reported as not SPD.
    """
    arr = np.asarray(matrix, dtype=float)
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1] or arr.size == 0:
        return SpdCheck(False, float("nan"))
    if not np.all(np.isfinite(arr)):
        return SpdCheck(False, float("nan"))
    eigvals = np.linalg.eigvalsh(symmetrize(arr))
    min_eig = float(eigvals[0])
    radius = float(np.max(np.abs(eigvals)))
    return SpdCheck(min_eig > tol * max(1.0, radius), min_eig)


def as_spd(matrix, tol: Tolerances = DEFAULT_TOLERANCES) -> SPDMatrix:
    if isinstance(matrix, SPDMatrix):
        return matrix
    return SPDMatrix(np.asarray(matrix, dtype=float), tol=tol)


def generalized_eigenvalues(U, V) -> np.ndarray:
    """Eigenvalues of ``U V^-1`` for symmetric U and SPD V, via Cholesky whitening."""
    u = np.asarray(U, dtype=float)
    v = np.asarray(V, dtype=float)
    if u.shape != v.shape:
        raise DimensionError(f"dimension mismatch: {u.shape} vs {v.shape}")
    try:
        lower = scipy.linalg.cholesky(symmetrize(v), lower=True, check_finite=False)
    except np.linalg.LinAlgError as e:
        raise NumericalError(f"Cholesky factorization of V failed ({e})") from e
    half = scipy.linalg.solve_triangular(lower, u, lower=True, check_finite=False)
    whitened = scipy.linalg.solve_triangular(lower, half.T, lower=True, check_finite=False)
    return np.linalg.eigvalsh(symmetrize(whitened))


def riemannian_distance(U, V, tol: Tolerances = DEFAULT_TOLERANCES) -> float:
    """Affine-invariant Riemannian distance between two SPD matrices."""
    u = as_spd(U, tol)
    v = as_spd(V, tol)
    if u.dim != v.dim:
        raise DimensionError(f"dimension mismatch: {u.dim} vs {v.dim}")
    lam = generalized_eigenvalues(u, v)
    if lam[0] <= 0.0:
        raise NumericalError(f"non-positive generalized eigenvalue {lam[0]:.3e}")
    return float(np.sqrt(np.sum(np.log(lam) ** 2)))


def random_spd(dim: int, seed: int, cond_max: float = 100.0,
               tol: Tolerances = DEFAULT_TOLERANCES) -> SPDMatrix:
    """Deterministic random SPD matrix with condition number at most ``cond_max``.

    Built as ``O diag(lambda) O'`` with a random orthogonal ``O`` and
    log-uniform eigenvalues on ``[s, s * cond_max]`` for a random scale ``s``.
    ``cond_max == 1`` returns an exact positive multiple of the identity.
    """
    if not isinstance(dim, (int, np.integer)) or dim < 1:
        raise DimensionError(f"dim must be a positive integer, got {dim!r}")
    if not np.isfinite(cond_max) or cond_max < 1.0:
        raise PreconditionError(f"cond_max must be >= 1, got {cond_max!r}")
    rng = np.random.default_rng(seed)
    scale = float(np.exp(rng.uniform(-1.0, 1.0)))
    if cond_max == 1.0:
        return SPDMatrix(scale * np.eye(dim), tol=tol)
    q, r = np.linalg.qr(rng.standard_normal((dim, dim)))
    q = q * np.sign(np.diag(r))
    eigvals = scale * np.exp(rng.uniform(0.0, np.log(cond_max), size=dim))
    return SPDMatrix((q * eigvals) @ q.T, tol=tol)
