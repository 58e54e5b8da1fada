"""Problem data for the time-varying LQ problem.

``StageData`` holds one step's (A, B, Q, R); ``LQProblem`` maps every time
index k to its StageData, either from an explicit finite list or from a
parametric modulation ``M_k = M + alpha**k * sin(omega * k) * dM``.
"""
import logging
import math
import threading
from dataclasses import dataclass, field
from typing import Dict, Optional, Sequence, Tuple

import numpy as np

from .errors import DimensionError, PreconditionError, RiccatiLiftError, StageRangeError
from .linalg import as_matrix, as_square, column_rank_margin, definiteness_margin, frozen, symmetrize
from .spd_geometry import SymMatrix
from .tolerances import DEFAULT_TOLERANCES, Tolerances

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class StageData:
    """One time step's dynamics and cost: ``x+ = A x + B u``, cost ``x'Qx + u'Ru``.

    Validated on construction: A nonsingular, Q PSD, R PD.
    """
    A: np.ndarray
    B: np.ndarray
    Q: np.ndarray
    R: np.ndarray
    tol: Tolerances = field(default=DEFAULT_TOLERANCES, repr=False)

    def __post_init__(self):
        A = as_square(self.A, "A")
        n = A.shape[0]
        B = as_matrix(self.B, "B")
        if B.shape[0] != n:
            raise DimensionError(f"B must have {n} rows, got {B.shape[0]}")
        m = B.shape[1]
        Q = as_square(self.Q, "Q", n)
        R = as_square(self.R, "R", m)

        a_margin = column_rank_margin(A)
        if not a_margin.passes(self.tol.rank_tolerance):
            raise PreconditionError(
                f"A is singular (smallest singular value {a_margin.sigma_min:.3e})"
            )
        q_margin = definiteness_margin(Q)
        if q_margin.sigma_min < -self.tol.psd_tolerance * max(1.0, q_margin.sigma_max):
            raise PreconditionError(f"Q not PSD (min eigenvalue {q_margin.sigma_min:.3e})")
        r_margin = definiteness_margin(R)
        if not r_margin.sigma_min > self.tol.pd_tolerance * max(1.0, r_margin.sigma_max):
            raise PreconditionError(f"R not PD (min eigenvalue {r_margin.sigma_min:.3e})")

        object.__setattr__(self, "A", frozen(A))
        object.__setattr__(self, "B", frozen(B))
        object.__setattr__(self, "Q", frozen(symmetrize(Q)))
        object.__setattr__(self, "R", frozen(symmetrize(R)))

    @property
    def n(self) -> int:
        return self.A.shape[0]

    @property
    def m(self) -> int:
        return self.B.shape[1]

    @property
    def Q_sym(self) -> SymMatrix:
        return SymMatrix(self.Q)

    @property
    def R_sym(self) -> SymMatrix:
        return SymMatrix(self.R)


@dataclass(frozen=True, eq=False)
class ExplicitStages:
    """A finite list of stages; index k is valid for ``0 <= k < len(stages)``."""
    stages: Tuple[StageData, ...]

    def __call__(self, k: int, tol: Tolerances) -> StageData:
        if not 0 <= k < len(self.stages):
            raise StageRangeError(f"outside explicit range [0, {len(self.stages)})")
        return self.stages[k]

    @property
    def horizon(self) -> Optional[int]:
        return len(self.stages)


@dataclass(frozen=True, eq=False)
class ModulatedStages:
    """Stages ``M_k = M + alpha**k * sin(omega * k) * dM`` for M in (A, B, Q, R)."""
    A: np.ndarray
    B: np.ndarray
    Q: np.ndarray
    R: np.ndarray
    dA: np.ndarray
    dB: np.ndarray
    dQ: np.ndarray
    dR: np.ndarray
    alpha: float
    omega: float

    def __post_init__(self):
        for name in ("A", "B", "Q", "R", "dA", "dB", "dQ", "dR"):
            object.__setattr__(self, name, frozen(as_matrix(getattr(self, name), name)))
        for name in ("A", "B", "Q", "R"):
            base, delta = getattr(self, name), getattr(self, "d" + name)
            if base.shape != delta.shape:
                raise DimensionError(
                    f"perturbation d{name} has shape {delta.shape}, expected {base.shape}"
                )

    def modulation(self, k: int) -> float:
        return self.alpha ** k * math.sin(self.omega * k)

    def __call__(self, k: int, tol: Tolerances) -> StageData:
        if k < 0:
            raise StageRangeError("negative stage index")
        s = self.modulation(k)
        return StageData(
            A=self.A + s * self.dA,
            B=self.B + s * self.dB,
            Q=self.Q + s * self.dQ,
            R=self.R + s * self.dR,
            tol=tol,
        )

    @property
    def horizon(self) -> Optional[int]:
        return None


class LQProblem:
    """Dimensions plus a stage source defining StageData for every valid k.

    Stages are validated lazily on first access and cached; the cache is
    guarded so a problem may be shared between threads.
    """

    def __init__(self, n: int, m: int, source, tol: Tolerances = DEFAULT_TOLERANCES):
        if n < 1 or m < 1:
            raise DimensionError(f"dimensions must be positive, got n={n}, m={m}")
        self.n = n
        self.m = m
        self.source = source
        self.tol = tol
        self._cache: Dict[int, StageData] = {}
        self._lock = threading.Lock()

    @classmethod
    def from_stages(cls, stages: Sequence[StageData],
                    tol: Tolerances = DEFAULT_TOLERANCES) -> "LQProblem":
        stages = tuple(stages)
        if not stages:
            raise DimensionError("explicit stage list is empty")
        n, m = stages[0].n, stages[0].m
        for k, st in enumerate(stages):
            if (st.n, st.m) != (n, m):
                raise DimensionError(f"stage {k} has dimensions ({st.n}, {st.m}), expected ({n}, {m})")
        return cls(n, m, ExplicitStages(stages), tol)

    @classmethod
    def stationary(cls, A, B, Q, R, tol: Tolerances = DEFAULT_TOLERANCES) -> "LQProblem":
        """Time-invariant problem (a modulated source with zero perturbation)."""
        A, B, Q, R = (as_matrix(M, name) for M, name in ((A, "A"), (B, "B"), (Q, "Q"), (R, "R")))
        return cls.modulated(A, B, Q, R, np.zeros_like(A), np.zeros_like(B),
                             np.zeros_like(Q), np.zeros_like(R), alpha=0.0, omega=0.0, tol=tol)

    @classmethod
    def modulated(cls, A, B, Q, R, dA, dB, dQ, dR, alpha: float, omega: float,
                  tol: Tolerances = DEFAULT_TOLERANCES) -> "LQProblem":
        source = ModulatedStages(A, B, Q, R, dA, dB, dQ, dR, alpha, omega)
        problem = cls(source.A.shape[0], source.B.shape[1], source, tol)
        problem.stage(0)
        return problem

    @property
    def horizon(self) -> Optional[int]:
        """Number of defined stages, or None when every k >= 0 is defined."""
        return self.source.horizon

    def stage(self, k: int) -> StageData:
        k = int(k)
        with self._lock:
            cached = self._cache.get(k)
        if cached is not None:
            return cached
        try:
            st = self.source(k, self.tol)
        except RiccatiLiftError as e:
            raise e.at_stage(k) from e
        if (st.n, st.m) != (self.n, self.m):
            raise DimensionError(f"has dimensions ({st.n}, {st.m}), expected ({self.n}, {self.m})",
                                 stage=k)
        with self._lock:
            self._cache[k] = st
        return st

    def stages(self, k_lo: int, k_hi: int) -> Tuple[StageData, ...]:
        """Stages ``k_lo .. k_hi - 1``."""
        return tuple(self.stage(k) for k in range(k_lo, k_hi))

    def __repr__(self):
        return f"LQProblem(n={self.n}, m={self.m}, source={type(self.source).__name__})"
