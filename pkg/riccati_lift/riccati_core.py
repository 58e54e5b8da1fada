"""The per-step Riccati operator, its linear-fractional form, the strict
contraction certificate and the backward recursion with optimal gains.

    R_k(P) = Q + A'(P - P B (R + B'PB)^-1 B'P) A
           = (E P + F)(G P + H)^-1

with E = A' + Q A^-1 B R^-1 B', F = Q A^-1, G = A^-1 B R^-1 B', H = A^-1.
"""
import logging
from dataclasses import dataclass, field
from typing import Dict, Iterator, List, Tuple, Union

import numpy as np

from .errors import DimensionError, NumericalError, PreconditionError, RiccatiLiftError
from .linalg import (
    as_square,
    cho_solve_pd,
    definiteness_margin,
    frozen,
    inverse,
    right_divide,
    row_rank_margin,
    symmetrize,
)
from .problem import LQProblem, StageData
from .spd_geometry import SymMatrix
from .tolerances import DEFAULT_TOLERANCES, Tolerances

logger = logging.getLogger(__name__)

__all__ = [
    "ContractionBound",
    "LFTForm",
    "LQProblem",
    "NotStrict",
    "RiccatiTrace",
    "StageData",
    "backward_recursion",
    "closed_loop_matrix",
    "contraction_bound",
    "lft_apply",
    "lft_form",
    "optimal_gain",
    "riccati_apply",
]

Q_NOT_PD = "Q not PD"
B_ROW_RANK = "B row rank"
A_SINGULAR = "A singular"


def riccati_step(A: np.ndarray, B: np.ndarray, Q: np.ndarray, R: np.ndarray,
                 P: np.ndarray) -> np.ndarray:
    """Raw Riccati map on arrays; the inner inverse is a Cholesky solve."""
    PB = P @ B
    inner = cho_solve_pd(R + B.T @ PB, PB.T, what="R + B'PB")
    return symmetrize(Q + A.T @ (P - PB @ inner) @ A)


def _check_p(stage: StageData, P) -> np.ndarray:
    return as_square(np.asarray(P, dtype=float), "P", stage.n)


def riccati_apply(stage: StageData, P) -> SymMatrix:
    """One backward Riccati step ``R_k(P)`` for PSD ``P``."""
    return SymMatrix(riccati_step(stage.A, stage.B, stage.Q, stage.R, _check_p(stage, P)))


def optimal_gain(stage: StageData, P_next) -> np.ndarray:
    """Gain K with ``u = -K x``: ``(R + B'P B)^-1 B'P A``."""
    P = _check_p(stage, P_next)
    PB = P @ stage.B
    return cho_solve_pd(stage.R + stage.B.T @ PB, PB.T @ stage.A, what="R + B'PB")


def closed_loop_matrix(stage: StageData, K: np.ndarray) -> np.ndarray:
    K = np.asarray(K, dtype=float)
    if K.shape != (stage.m, stage.n):
        raise DimensionError(f"gain must be {stage.m}x{stage.n}, got {K.shape}")
    return stage.A - stage.B @ K


@dataclass(frozen=True, eq=False)
class LFTForm:
    """Matrices of ``R(P) = (E P + F)(G P + H)^-1``."""
    E: np.ndarray
    F: np.ndarray
    G: np.ndarray
    H: np.ndarray

    def __post_init__(self):
        for name in ("E", "F", "G", "H"):
            object.__setattr__(self, name, frozen(getattr(self, name)))

    def fe_t(self) -> np.ndarray:
        """``F E'``; PSD for every valid stage."""
        return self.F @ self.E.T

    def et_g(self) -> np.ndarray:
        """``E' G``; PSD for every valid stage."""
        return self.E.T @ self.G


def lft_form(stage: StageData) -> LFTForm:
    a_inv = inverse(stage.A, what="A")
    b_rinv_bt = stage.B @ cho_solve_pd(stage.R, stage.B.T, what="R")
    G = a_inv @ b_rinv_bt
    E = stage.A.T + stage.Q @ G
    margin = row_rank_margin(E)
    if not margin.passes(stage.tol.rank_tolerance):
        raise NumericalError(f"E is numerically singular (sigma_min {margin.sigma_min:.3e})")
    return LFTForm(E=E, F=stage.Q @ a_inv, G=G, H=a_inv)


def lft_apply(lft: LFTForm, P) -> SymMatrix:
    """Evaluate ``(E P + F)(G P + H)^-1``."""
    n = lft.E.shape[0]
    P = as_square(np.asarray(P, dtype=float), "P", n)
    return SymMatrix(symmetrize(right_divide(lft.E @ P + lft.F, lft.G @ P + lft.H,
                                             what="G P + H")))


@dataclass(frozen=True)
class ContractionBound:
    """Certificate ``delta(R(X), R(Y)) <= rho * delta(X, Y)`` with ``rho = zeta / (zeta + eps)``."""
    zeta: float
    eps: float
    rho: float
    strict: bool = True


@dataclass(frozen=True)
class NotStrict:
    """The strict-contraction hypotheses fail; the operator is still non-expansive."""
    reason: str
    detail: str = ""
    strict: bool = field(default=False, init=False)


BoundResult = Union[ContractionBound, NotStrict]


def bound_from_matrices(A: np.ndarray, B: np.ndarray, Q: np.ndarray, R: np.ndarray,
                        tol: Tolerances = DEFAULT_TOLERANCES) -> BoundResult:
    """Strict-contraction certificate for raw stage matrices.

    Requires Q PD, B of full row rank and A nonsingular, each tested against
    ``tol.rank_tolerance`` relative to the largest singular value.
    """
    q_margin = definiteness_margin(Q)
    if not q_margin.passes(tol.rank_tolerance):
        return NotStrict(Q_NOT_PD, f"lambda_min(Q) = {q_margin.sigma_min:.3e}")
    b_margin = row_rank_margin(B)
    if not b_margin.passes(tol.rank_tolerance):
        return NotStrict(B_ROW_RANK, f"sigma_n(B) = {b_margin.sigma_min:.3e}")
    a_margin = row_rank_margin(A)
    if not a_margin.passes(tol.rank_tolerance):
        return NotStrict(A_SINGULAR, f"sigma_min(A) = {a_margin.sigma_min:.3e}")

    a_inv = inverse(A, what="A")
    a_inv_b = a_inv @ B
    # F E' = Q + Q A^-1 B R^-1 B' A^-T Q; zeta = ||(F E')^-1||_2 = 1 / lambda_min
    fet = symmetrize(Q + Q @ a_inv_b @ cho_solve_pd(R, a_inv_b.T @ Q, what="R"))
    fet_min = float(np.linalg.eigvalsh(fet)[0])
    if fet_min <= 0.0:
        raise NumericalError(f"F E' is not positive definite (lambda_min {fet_min:.3e})")
    zeta = 1.0 / fet_min

    schur = R + a_inv_b.T @ Q @ a_inv_b
    etg = symmetrize(a_inv_b @ cho_solve_pd(schur, a_inv_b.T, what="R + B'A^-T Q A^-1 B"))
    eps = float(np.linalg.eigvalsh(etg)[0])
    if eps <= 0.0:
        raise NumericalError(f"epsilon is not positive ({eps:.3e})")
    return ContractionBound(zeta=zeta, eps=eps, rho=zeta / (zeta + eps))


def contraction_bound(stage: StageData) -> BoundResult:
    """Strict contraction rate of ``R_k``, or the hypothesis that fails."""
    result = bound_from_matrices(stage.A, stage.B, stage.Q, stage.R, stage.tol)
    if not result.strict:
        logger.debug("stage is not strictly contractive: %s (%s)", result.reason, result.detail)
    return result


@dataclass(frozen=True, eq=False)
class RiccatiTrace:
    """Solution of ``P_k = R_k(P_{k+1})`` on ``[k_lo, k_hi]`` with ``P_{k_hi}`` the boundary."""
    k_lo: int
    k_hi: int
    matrices: Tuple[SymMatrix, ...]

    def __post_init__(self):
        if len(self.matrices) != self.k_hi - self.k_lo + 1:
            raise DimensionError(
                f"trace over [{self.k_lo}, {self.k_hi}] needs {self.k_hi - self.k_lo + 1} "
                f"matrices, got {len(self.matrices)}"
            )

    def __len__(self) -> int:
        return len(self.matrices)

    def __getitem__(self, k: int) -> SymMatrix:
        if not self.k_lo <= k <= self.k_hi:
            raise IndexError(f"index {k} outside trace range [{self.k_lo}, {self.k_hi}]")
        return self.matrices[k - self.k_lo]

    def __iter__(self) -> Iterator[Tuple[int, SymMatrix]]:
        return iter(zip(range(self.k_lo, self.k_hi + 1), self.matrices))

    @property
    def boundary(self) -> SymMatrix:
        return self.matrices[-1]

    def as_dict(self) -> Dict[int, SymMatrix]:
        return dict(iter(self))

    def verify(self, problem: LQProblem, rtol: float = 1e-9) -> List[int]:
        """Return indices k where ``P_k`` differs from ``R_k(P_{k+1})`` beyond ``rtol``."""
        bad = []
        for k in range(self.k_lo, self.k_hi):
            stage = problem.stage(k)
            expected = riccati_step(stage.A, stage.B, stage.Q, stage.R, np.asarray(self[k + 1]))
            got = np.asarray(self[k])
            if np.linalg.norm(got - expected) > rtol * max(1.0, np.linalg.norm(expected)):
                bad.append(k)
        return bad


def backward_recursion(problem: LQProblem, k_hi: int, k_lo: int, P_terminal) -> RiccatiTrace:
    """Iterate ``P_k = R_k(P_{k+1})`` from ``P_{k_hi} = P_terminal`` down to ``k_lo``."""
    if k_lo > k_hi:
        raise DimensionError(f"k_lo ({k_lo}) must not exceed k_hi ({k_hi})")
    P = as_square(np.asarray(P_terminal, dtype=float), "P_terminal", problem.n)
    margin = definiteness_margin(P)
    if margin.sigma_min < -problem.tol.psd_tolerance * max(1.0, margin.sigma_max):
        raise PreconditionError(f"P_terminal is not PSD (min eigenvalue {margin.sigma_min:.3e})")

    out = [SymMatrix(P)]
    for k in range(k_hi - 1, k_lo - 1, -1):
        stage = problem.stage(k)
        try:
            out.append(riccati_apply(stage, out[-1]))
        except RiccatiLiftError as e:
            raise e.at_stage(k) from e
    logger.debug("backward recursion over [%d, %d] done", k_lo, k_hi)
    return RiccatiTrace(k_lo=k_lo, k_hi=k_hi, matrices=tuple(reversed(out)))
