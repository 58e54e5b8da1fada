"""d-step lifting of the time-varying LQ problem.

Lifted stage t covers original steps ``dt .. d(t+1)-1``. With the stacked
input ``u_hat = (u_dt, ..., u_{d(t+1)-1})`` the lifted state ``x_t = x_dt``
evolves as ``x_{t+1} = Phi x_t + Gamma u_hat``, and the stage cost is a
quadratic form in ``(x_t, u_hat)`` with cross terms ``Xi'Delta``. The input
change of variable ``u_tilde = R_tilde^-1 Delta' Xi x_t + u_hat`` removes the
cross terms and yields an ordinary LQ stage (Q_tilde, R_tilde, A_tilde,
B_tilde) whose Riccati operator equals the composition of the d original ones.
"""
import logging
from dataclasses import dataclass
from typing import List, Optional, Tuple

import numpy as np
import scipy.linalg

from .errors import ConsistencyError, DimensionError, RiccatiLiftError, StageRangeError
from .linalg import (
    RankMargin,
    as_vector,
    cho_solve_pd,
    column_rank_margin,
    frozen,
    psd_sqrt,
    row_rank_margin,
    symmetrize,
)
from .problem import LQProblem, StageData
from .riccati_core import BoundResult, bound_from_matrices
from .tolerances import DEFAULT_TOLERANCES, Tolerances

logger = logging.getLogger(__name__)

__all__ = [
    "HatMatrices",
    "LQProblem",
    "LiftedStage",
    "RankReport",
    "StageRank",
    "build_hat",
    "build_lifted_stage",
    "lift_input",
    "lifted_contraction",
    "lifted_dynamics",
    "minimal_lift_depth",
    "phi_gamma",
    "rank_report",
    "unlift_input",
    "xi_delta",
]


def _unit_lower_block_inverse(a_blocks: List[np.ndarray], n: int) -> np.ndarray:
    """Inverse of ``I - [[0, 0], [diag(A_0..A_{d-1}), 0]]`` by block forward substitution.

    Block (i, j), i >= j, of the inverse is ``A_{i-1} ... A_j`` (identity on
    the diagonal); blocks above the diagonal are zero.
    """
    d = len(a_blocks)
    size = n * (d + 1)
    inv = np.zeros((size, size))
    for j in range(d + 1):
        block = np.eye(n)
        inv[j * n:(j + 1) * n, j * n:(j + 1) * n] = block
        for i in range(j + 1, d + 1):
            block = a_blocks[i - 1] @ block
            inv[i * n:(i + 1) * n, j * n:(j + 1) * n] = block
    return inv


@dataclass(frozen=True, eq=False)
class HatMatrices:
    """Block matrices of one lifted stage: A_hat, B_hat, C_hat, R_hat.

    ``A_hat_inv`` is the exact inverse of A_hat, built by block substitution.
    """
    n: int
    m: int
    d: int
    A_hat: np.ndarray
    B_hat: np.ndarray
    C_hat: np.ndarray
    R_hat: np.ndarray
    A_hat_inv: np.ndarray

    def __post_init__(self):
        for name in ("A_hat", "B_hat", "C_hat", "R_hat", "A_hat_inv"):
            object.__setattr__(self, name, frozen(getattr(self, name)))


def _check_depth(d: int) -> None:
    if not isinstance(d, (int, np.integer)) or d < 1:
        raise DimensionError(f"lift depth must be a positive integer, got {d!r}")


def build_hat(problem: LQProblem, t: int, d: int) -> HatMatrices:
    """Assemble A_hat, B_hat, C_hat (blocks Q_k^{1/2}) and R_hat for lifted stage t."""
    _check_depth(d)
    if t < 0:
        raise StageRangeError("negative lifted stage index", stage=t)
    n, m = problem.n, problem.m
    stages = problem.stages(d * t, d * (t + 1))
    a_blocks = [st.A for st in stages]

    A_hat = np.eye(n * (d + 1))
    A_hat[n:, :n * d] -= scipy.linalg.block_diag(*a_blocks)
    B_hat = np.vstack([np.zeros((n, m * d)), scipy.linalg.block_diag(*[st.B for st in stages])])
    roots = [psd_sqrt(st.Q, problem.tol.psd_tolerance, what="Q") for st in stages]
    C_hat = np.hstack([scipy.linalg.block_diag(*roots), np.zeros((n * d, n))])
    R_hat = scipy.linalg.block_diag(*[st.R for st in stages])
    return HatMatrices(n=n, m=m, d=d, A_hat=A_hat, B_hat=B_hat, C_hat=C_hat, R_hat=R_hat,
                       A_hat_inv=_unit_lower_block_inverse(a_blocks, n))


def phi_gamma(hat: HatMatrices) -> Tuple[np.ndarray, np.ndarray]:
    """State-transition ``Phi = A_{d-1}...A_0`` and d-step controllability matrix ``Gamma``."""
    n = hat.n
    last_rows = hat.A_hat_inv[-n:, :]
    return last_rows[:, :n].copy(), last_rows @ hat.B_hat


def xi_delta(hat: HatMatrices) -> Tuple[np.ndarray, np.ndarray]:
    """d-step observability matrix ``Xi`` and input feedthrough ``Delta``."""
    c_ainv = hat.C_hat @ hat.A_hat_inv
    return c_ainv[:, :hat.n].copy(), c_ainv @ hat.B_hat


@dataclass(frozen=True)
class StageRank:
    """Row-rank margin of Gamma and column-rank margin of Xi for one lifted stage."""
    t: int
    gamma: RankMargin
    xi: RankMargin
    passes: bool


def _stage_rank(t: int, gamma: np.ndarray, xi: np.ndarray, tol: Tolerances) -> StageRank:
    g = row_rank_margin(gamma)
    x = column_rank_margin(xi)
    return StageRank(t=t, gamma=g, xi=x,
                     passes=g.passes(tol.rank_tolerance) and x.passes(tol.rank_tolerance))


@dataclass(frozen=True, eq=False)
class LiftedStage:
    """All matrices of lifted stage t at depth d."""
    t: int
    d: int
    hat: HatMatrices
    Phi: np.ndarray
    Gamma: np.ndarray
    Xi: np.ndarray
    Delta: np.ndarray
    Q_tilde: np.ndarray
    R_tilde: np.ndarray
    A_tilde: np.ndarray
    B_tilde: np.ndarray
    input_shift: np.ndarray
    rank: StageRank
    tol: Tolerances = DEFAULT_TOLERANCES

    def __post_init__(self):
        for name in ("Phi", "Gamma", "Xi", "Delta", "Q_tilde", "R_tilde", "A_tilde",
                     "B_tilde", "input_shift"):
            object.__setattr__(self, name, frozen(getattr(self, name)))

    @property
    def n(self) -> int:
        return self.hat.n

    @property
    def A_hat(self) -> np.ndarray:
        return self.hat.A_hat

    @property
    def B_hat(self) -> np.ndarray:
        return self.hat.B_hat

    @property
    def C_hat(self) -> np.ndarray:
        return self.hat.C_hat

    @property
    def R_hat(self) -> np.ndarray:
        return self.hat.R_hat

    def q_tilde_woodbury(self) -> np.ndarray:
        """``Xi' (I + Delta R_hat^-1 Delta')^-1 Xi``, an alternative form of Q_tilde."""
        nd = self.Xi.shape[0]
        middle = np.eye(nd) + self.Delta @ cho_solve_pd(self.R_hat, self.Delta.T, what="R_hat")
        return symmetrize(self.Xi.T @ cho_solve_pd(middle, self.Xi, what="I + Delta R_hat^-1 Delta'"))

    def ldu_factor(self) -> np.ndarray:
        """L with ``[[Xi'Xi, Xi'Delta], [Delta'Xi, R_tilde]] = L' diag(Q_tilde, R_tilde) L``."""
        n, md = self.n, self.R_tilde.shape[0]
        L = np.eye(n + md)
        L[n:, :n] = self.input_shift
        return L

    def input_schur_complement(self) -> np.ndarray:
        """``R_hat + Delta'Delta - Delta'Xi Phi^-1 Gamma``.

        Block upper triangular with the diagonal blocks of R_hat; exposed as a
        diagnostic only.
        """
        phi_inv_gamma = np.linalg.solve(self.Phi, self.Gamma)
        return self.R_tilde - self.Delta.T @ self.Xi @ phi_inv_gamma

    def as_stage_data(self) -> StageData:
        """The lifted stage as ordinary StageData (requires A_tilde nonsingular)."""
        return StageData(A=self.A_tilde, B=self.B_tilde, Q=self.Q_tilde, R=self.R_tilde,
                         tol=self.tol)


def build_lifted_stage(problem: LQProblem, t: int, d: int) -> LiftedStage:
    """Construct lifted stage t at depth d."""
    try:
        hat = build_hat(problem, t, d)
    except RiccatiLiftError as e:
        if e.stage is not None:
            raise
        raise e.at_stage(t) from e
    Phi, Gamma = phi_gamma(hat)
    Xi, Delta = xi_delta(hat)
    R_tilde = symmetrize(hat.R_hat + Delta.T @ Delta)
    shift = cho_solve_pd(R_tilde, Delta.T @ Xi, what="R_tilde")
    Q_tilde = symmetrize(Xi.T @ Xi - Xi.T @ Delta @ shift)
    A_tilde = Phi - Gamma @ shift
    rank = _stage_rank(t, Gamma, Xi, problem.tol)

    if rank.passes:
        a_margin = row_rank_margin(A_tilde)
        if not a_margin.passes(problem.tol.rank_tolerance):
            raise ConsistencyError(
                f"A_tilde is singular (sigma_min {a_margin.sigma_min:.3e}) although the "
                "rank conditions hold", stage=t,
            )
    return LiftedStage(t=t, d=d, hat=hat, Phi=Phi, Gamma=Gamma, Xi=Xi, Delta=Delta,
                       Q_tilde=Q_tilde, R_tilde=R_tilde, A_tilde=A_tilde, B_tilde=Gamma,
                       input_shift=shift, rank=rank, tol=problem.tol)


@dataclass(frozen=True)
class RankReport:
    """Per-stage controllability / observability margins over ``[t_lo, t_hi]``."""
    t_lo: int
    t_hi: int
    d: int
    stages: Tuple[StageRank, ...]

    @property
    def passes(self) -> bool:
        return all(s.passes for s in self.stages)

    @property
    def failing(self) -> Tuple[int, ...]:
        return tuple(s.t for s in self.stages if not s.passes)


def rank_report(problem: LQProblem, d: int, t_lo: int, t_hi: int) -> RankReport:
    """Check full row rank of Gamma_t and full column rank of Xi_t for t in [t_lo, t_hi]."""
    if t_lo > t_hi:
        raise DimensionError(f"t_lo ({t_lo}) must not exceed t_hi ({t_hi})")
    rows = []
    for t in range(t_lo, t_hi + 1):
        hat = build_hat(problem, t, d)
        _, Gamma = phi_gamma(hat)
        Xi, _ = xi_delta(hat)
        rows.append(_stage_rank(t, Gamma, Xi, problem.tol))
    report = RankReport(t_lo=t_lo, t_hi=t_hi, d=d, stages=tuple(rows))
    logger.debug("rank report d=%d [%d, %d]: %s", d, t_lo, t_hi,
                 "pass" if report.passes else f"fail at {report.failing}")
    return report


def minimal_lift_depth(problem: LQProblem, t_lo: int, t_hi: int, d_max: Optional[int] = None,
                       horizon: Optional[int] = None) -> Optional[int]:
    """Smallest d <= d_max whose rank report passes on the window, else None.

    With ``horizon`` given, the window for each d is clipped to lifted stages
    lying inside original steps ``[0, horizon)``. Stages a finite problem does
    not define end the search.
    """
    if d_max is None:
        d_max = 4 * problem.n
    _check_depth(d_max)
    for d in range(1, d_max + 1):
        hi = t_hi if horizon is None else min(t_hi, horizon // d - 1)
        if hi < t_lo:
            break
        try:
            report = rank_report(problem, d, t_lo, hi)
        except StageRangeError:
            break
        if report.passes:
            logger.debug("minimal lift depth %d on [%d, %d]", d, t_lo, hi)
            return d
    return None


def lifted_contraction(stage: LiftedStage) -> BoundResult:
    """Strict contraction rate of the lifted Riccati operator, or the failing hypothesis."""
    result = bound_from_matrices(stage.A_tilde, stage.B_tilde, stage.Q_tilde, stage.R_tilde,
                                 stage.tol)
    if not result.strict:
        logger.warning("lifted stage %d (d=%d) not strictly contractive: %s (%s)",
                       stage.t, stage.d, result.reason, result.detail)
    return result


def lift_input(stage: LiftedStage, x_t, u_hat) -> np.ndarray:
    """``u_tilde = R_tilde^-1 Delta' Xi x_t + u_hat``."""
    x = as_vector(x_t, stage.n, "x_t")
    u = as_vector(u_hat, stage.R_tilde.shape[0], "u_hat")
    return stage.input_shift @ x + u


def unlift_input(stage: LiftedStage, x_t, u_tilde) -> np.ndarray:
    """Inverse of :func:`lift_input`."""
    x = as_vector(x_t, stage.n, "x_t")
    u = as_vector(u_tilde, stage.R_tilde.shape[0], "u_tilde")
    return u - stage.input_shift @ x


def lifted_dynamics(stage: LiftedStage, x_t, u_hat) -> np.ndarray:
    """``x_{t+1} = Phi x_t + Gamma u_hat``."""
    x = as_vector(x_t, stage.n, "x_t")
    u = as_vector(u_hat, stage.Gamma.shape[1], "u_hat")
    return stage.Phi @ x + stage.Gamma @ u
