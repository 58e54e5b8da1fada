"""Closed- and open-loop simulation, finite-horizon values and receding-horizon control.

Input convention throughout is ``u_k = -K_k x_k`` for gain policies.
"""
import logging
import math
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np

from .errors import DimensionError, PreconditionError, RiccatiLiftError
from .lifting import LiftedStage
from .linalg import as_matrix, as_square, as_vector, frozen
from .problem import LQProblem
from .riccati_core import RiccatiTrace, backward_recursion, optimal_gain, riccati_apply, riccati_step
from .spd_geometry import SymMatrix

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class Trajectory:
    """States ``x_k0 .. x_{k0+N}``, inputs ``u_k0 .. u_{k0+N-1}`` and the accumulated cost.

    ``gains`` is set when the inputs came from a feedback policy.
    """
    states: np.ndarray
    inputs: np.ndarray
    cost: float
    k0: int = 0
    gains: Optional[Tuple[np.ndarray, ...]] = None

    def __post_init__(self):
        object.__setattr__(self, "states", frozen(self.states))
        object.__setattr__(self, "inputs", frozen(self.inputs))
        if self.states.shape[0] != self.inputs.shape[0] + 1:
            raise DimensionError(
                f"{self.states.shape[0]} states do not match {self.inputs.shape[0]} inputs"
            )

    @property
    def N(self) -> int:
        return self.inputs.shape[0]

    def check_dynamics(self, problem: LQProblem, rtol: float = 1e-10) -> List[int]:
        """Return the k where ``x_{k+1} != A_k x_k + B_k u_k`` beyond ``rtol``."""
        bad = []
        for i in range(self.N):
            k = self.k0 + i
            stage = problem.stage(k)
            expected = stage.A @ self.states[i] + stage.B @ self.inputs[i]
            scale = max(1.0, float(np.linalg.norm(expected)))
            if np.linalg.norm(self.states[i + 1] - expected) > rtol * scale:
                bad.append(k)
        return bad


@dataclass(frozen=True, eq=False)
class OpenLoop:
    inputs: Sequence


@dataclass(frozen=True, eq=False)
class GainSchedule:
    """Gains ``K_k`` for ``k = k0, k0 + 1, ...``."""
    gains: Sequence
    k0: int = 0


@dataclass(frozen=True, eq=False)
class ExactTerminal:
    """Terminal penalty read from a Riccati trace; windows are clipped at ``trace.k_hi``."""
    trace: RiccatiTrace


@dataclass(frozen=True, eq=False)
class ConstantTerminal:
    P: np.ndarray


@dataclass(frozen=True)
class ZeroTerminal:
    pass


TerminalSource = Union[ExactTerminal, ConstantTerminal, ZeroTerminal]


@dataclass(frozen=True, eq=False)
class RecedingHorizon:
    T_pred: int
    terminal: TerminalSource = field(default_factory=ZeroTerminal)


PolicySpec = Union[OpenLoop, GainSchedule, RecedingHorizon]


def _stage_cost(stage, x: np.ndarray, u: np.ndarray) -> float:
    return float(x @ stage.Q @ x) + float(u @ stage.R @ u)


def _terminal_cost(problem: LQProblem, P_terminal, x: np.ndarray) -> List[float]:
    if P_terminal is None:
        return []
    P = as_square(np.asarray(P_terminal, dtype=float), "P_terminal", problem.n)
    return [float(x @ P @ x)]


def _gain_at(policy: GainSchedule, problem: LQProblem, k: int) -> np.ndarray:
    i = k - policy.k0
    if not 0 <= i < len(policy.gains):
        raise DimensionError(
            f"gain schedule covers [{policy.k0}, {policy.k0 + len(policy.gains)}), not {k}"
        )
    K = as_matrix(policy.gains[i], "gain")
    if K.shape != (problem.m, problem.n):
        raise DimensionError(f"gain at {k} must be {problem.m}x{problem.n}, got {K.shape}")
    return K


def simulate(problem: LQProblem, policy: PolicySpec, x0, N: int, k0: int = 0,
             P_terminal=None) -> Trajectory:
    """Run ``x_{k+1} = A_k x_k + B_k u_k`` for N steps from ``x_k0 = x0``.

    The cost is ``sum x'Q_k x + u'R_k u`` plus ``x_N' P_terminal x_N`` when a
    terminal penalty is supplied.
    """
    if N < 0:
        raise DimensionError(f"N must be non-negative, got {N}")
    if isinstance(policy, RecedingHorizon):
        return receding_horizon_run(problem, policy.T_pred, policy.terminal, x0, N, k0=k0,
                                    P_terminal=P_terminal)
    if isinstance(policy, OpenLoop) and len(policy.inputs) < N:
        raise DimensionError(f"open-loop policy has {len(policy.inputs)} inputs, need {N}")

    x = as_vector(x0, problem.n, "x0")
    states, inputs, costs = [x], [], []
    for k in range(k0, k0 + N):
        stage = problem.stage(k)
        if isinstance(policy, OpenLoop):
            u = as_vector(policy.inputs[k - k0], problem.m, "input")
        elif isinstance(policy, GainSchedule):
            u = -_gain_at(policy, problem, k) @ x
        else:
            raise TypeError(f"unsupported policy {type(policy).__name__}")
        costs.append(_stage_cost(stage, x, u))
        x = stage.A @ x + stage.B @ u
        states.append(x)
        inputs.append(u)
    costs.extend(_terminal_cost(problem, P_terminal, x))
    gains = None
    if isinstance(policy, GainSchedule):
        gains = tuple(_gain_at(policy, problem, k) for k in range(k0, k0 + N))
    return Trajectory(states=np.array(states), inputs=np.array(inputs).reshape(N, problem.m),
                      cost=math.fsum(costs), k0=k0, gains=gains)


def finite_horizon_value(problem: LQProblem, k_lo: int, k_hi: int, P_terminal, x0) -> float:
    """Optimal cost-to-go ``x0' P_{k_lo} x0`` for the window ``[k_lo, k_hi]``."""
    trace = backward_recursion(problem, k_hi, k_lo, P_terminal)
    x = as_vector(x0, problem.n, "x0")
    return float(x @ np.asarray(trace[k_lo]) @ x)


def optimal_gain_schedule(problem: LQProblem, trace: RiccatiTrace) -> GainSchedule:
    """Optimal feedback gains for ``k_lo <= k < k_hi`` of ``trace``."""
    gains = []
    for k in range(trace.k_lo, trace.k_hi):
        try:
            gains.append(optimal_gain(problem.stage(k), trace[k + 1]))
        except RiccatiLiftError as e:
            raise e.at_stage(k) from e
    return GainSchedule(gains=tuple(gains), k0=trace.k_lo)


def compose_riccati(problem: LQProblem, t: int, d: int, P) -> SymMatrix:
    """``R_dt ∘ R_{dt+1} ∘ ... ∘ R_{d(t+1)-1} (P)``, innermost applied first."""
    if d < 1:
        raise DimensionError(f"lift depth must be positive, got {d}")
    out = SymMatrix(as_square(np.asarray(P, dtype=float), "P", problem.n))
    for k in range(d * (t + 1) - 1, d * t - 1, -1):
        try:
            out = riccati_apply(problem.stage(k), out)
        except RiccatiLiftError as e:
            raise e.at_stage(k) from e
    return out


def lifted_riccati_apply(stage: LiftedStage, P) -> SymMatrix:
    """The Riccati operator of the lifted stage ``(Q~, R~, A~, B~)``."""
    P = as_square(np.asarray(P, dtype=float), "P", stage.n)
    return SymMatrix(riccati_step(stage.A_tilde, stage.B_tilde, stage.Q_tilde, stage.R_tilde, P))


def _window_terminal(problem: LQProblem, terminal: TerminalSource, k: int,
                     T_pred: int) -> Tuple[int, np.ndarray]:
    end = k + T_pred
    if isinstance(terminal, ExactTerminal):
        end = min(end, terminal.trace.k_hi)
        if end <= k:
            raise PreconditionError(
                f"exact terminal trace ends at {terminal.trace.k_hi}, cannot plan from {k}"
            )
        if end < terminal.trace.k_lo:
            raise PreconditionError(
                f"exact terminal trace starts at {terminal.trace.k_lo}, window from {k} ends at {end}"
            )
        return end, np.asarray(terminal.trace[end])
    if isinstance(terminal, ConstantTerminal):
        return end, as_square(np.asarray(terminal.P, dtype=float), "terminal P", problem.n)
    if isinstance(terminal, ZeroTerminal):
        return end, np.zeros((problem.n, problem.n))
    raise TypeError(f"unsupported terminal source {type(terminal).__name__}")


def receding_horizon_run(problem: LQProblem, T_pred: int, terminal: TerminalSource, x0, N: int,
                         k0: int = 0, P_terminal=None) -> Trajectory:
    """Receding-horizon control: at each k solve the T_pred-step problem, apply its first input.

    Every step recomputes the backward recursion from the terminal penalty;
    the applied gains are returned in ``Trajectory.gains``.
    """
    if T_pred < 1:
        raise DimensionError(f"T_pred must be at least 1, got {T_pred}")
    if N < 0:
        raise DimensionError(f"N must be non-negative, got {N}")

    x = as_vector(x0, problem.n, "x0")
    states, inputs, gains, costs = [x], [], [], []
    for k in range(k0, k0 + N):
        end, P_end = _window_terminal(problem, terminal, k, T_pred)
        trace = backward_recursion(problem, end, k + 1, P_end)
        stage = problem.stage(k)
        K = optimal_gain(stage, trace[k + 1])
        u = -K @ x
        logger.debug("receding horizon k=%d window [%d, %d] gain %s", k, k, end, K.tolist())
        costs.append(_stage_cost(stage, x, u))
        x = stage.A @ x + stage.B @ u
        states.append(x)
        inputs.append(u)
        gains.append(K)
    costs.extend(_terminal_cost(problem, P_terminal, x))
    return Trajectory(states=np.array(states), inputs=np.array(inputs).reshape(N, problem.m),
                      cost=math.fsum(costs), k0=k0, gains=tuple(gains))
