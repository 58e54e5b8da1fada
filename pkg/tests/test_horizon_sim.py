"""Tests for simulation, finite-horizon values, composition and receding-horizon control."""
import math

import numpy as np
import pytest

from riccati_lift.errors import DimensionError, PreconditionError
from riccati_lift.horizon_sim import (
    ConstantTerminal,
    ExactTerminal,
    GainSchedule,
    OpenLoop,
    RecedingHorizon,
    Trajectory,
    ZeroTerminal,
    compose_riccati,
    finite_horizon_value,
    lifted_riccati_apply,
    optimal_gain_schedule,
    receding_horizon_run,
    simulate,
)
from riccati_lift.lifting import build_lifted_stage
from riccati_lift.problem import LQProblem, StageData
from riccati_lift.riccati_core import backward_recursion, riccati_apply

from .conftest import normalized_problem, random_psd, scalar_problem

GOLDEN = (1.0 + math.sqrt(5.0)) / 2.0


def rel_err(a, b):
    a, b = np.asarray(a), np.asarray(b)
    return np.linalg.norm(a - b) / max(1.0, np.linalg.norm(b))


class TestSimulate:
    """Test open- and closed-loop simulation."""

    def test_zero_steps(self, unit_scalar_problem):
        """Test that N = 0 keeps x0 and costs nothing."""
        traj = simulate(unit_scalar_problem, OpenLoop([]), [2.0], 0)
        assert traj.states.shape == (1, 1)
        assert traj.inputs.shape == (0, 1)
        assert traj.cost == 0.0

    def test_zero_input_identity_dynamics(self):
        """Test that zero input on A = I holds the state and sums x0'Qx0."""
        Q = np.array([[2.0, 1.0], [1.0, 3.0]])
        problem = LQProblem.stationary(np.eye(2), [[1.0], [0.0]], Q, [[1.0]])
        x0 = np.array([1.0, -2.0])
        traj = simulate(problem, OpenLoop(np.zeros((7, 1))), x0, 7)
        np.testing.assert_array_equal(traj.states, np.tile(x0, (8, 1)))
        assert traj.cost == pytest.approx(7 * x0 @ Q @ x0)

    def test_converged_gain_cost(self, unit_scalar_problem):
        """Test that the stationary optimal gain costs P_inf x0^2 over a long horizon."""
        K = GOLDEN / (1.0 + GOLDEN)
        traj = simulate(unit_scalar_problem, GainSchedule([[[K]]] * 60), [1.5], 60)
        assert traj.cost == pytest.approx(GOLDEN * 1.5 ** 2, rel=1e-12)

    def test_terminal_cost_added(self, unit_scalar_problem):
        """Test that the terminal penalty is added to the stage costs."""
        traj = simulate(unit_scalar_problem, OpenLoop([[0.0]]), [1.0], 1, P_terminal=[[4.0]])
        assert traj.cost == pytest.approx(1.0 + 4.0)

    def test_dynamics_recheck(self):
        """Test that check_dynamics flags the steps around an altered state."""
        rng = np.random.default_rng(31)
        problem = normalized_problem(rng, 3, 2, 6)
        traj = simulate(problem, OpenLoop(rng.standard_normal((6, 2))), rng.standard_normal(3), 6)
        assert traj.check_dynamics(problem) == []
        states = np.array(traj.states)
        states[4] += 1.0
        tampered = Trajectory(states=states, inputs=traj.inputs, cost=traj.cost)
        assert tampered.check_dynamics(problem) == [3, 4]

    def test_offset_start(self):
        """Test a gain schedule that starts at k0 = 4."""
        rng = np.random.default_rng(32)
        problem = normalized_problem(rng, 2, 1, 10)
        trace = backward_recursion(problem, 10, 4, np.eye(2))
        traj = simulate(problem, optimal_gain_schedule(problem, trace), [1.0, 1.0], 6, k0=4)
        assert traj.k0 == 4
        assert traj.check_dynamics(problem) == []
        assert len(traj.gains) == 6

    @pytest.mark.parametrize("policy", [
        GainSchedule([np.ones((2, 2))]),
        GainSchedule([np.ones((1, 2))], k0=3),
        OpenLoop([[1.0, 2.0]]),
        OpenLoop([]),
    ])
    def test_policy_dimension_mismatch(self, policy):
        """Test that policies of the wrong shape or length are rejected."""
        problem = LQProblem.stationary(np.eye(2), [[1.0], [0.0]], np.eye(2), [[1.0]])
        with pytest.raises(DimensionError):
            simulate(problem, policy, [1.0, 0.0], 1)

    def test_negative_length(self, unit_scalar_problem):
        """Test that a negative N raises DimensionError."""
        with pytest.raises(DimensionError):
            simulate(unit_scalar_problem, OpenLoop([]), [1.0], -1)


class TestFiniteHorizonValue:
    """Test the optimal cost-to-go."""

    def test_zero_state(self, example_problem):
        """Test that x0 = 0 has zero value."""
        assert finite_horizon_value(example_problem, 0, 5, np.eye(2), [0.0, 0.0]) == 0.0

    def test_zero_length(self, example_problem):
        """Test that an empty window gives x0'Px0."""
        P = np.array([[2.0, 1.0], [1.0, 2.0]])
        x0 = np.array([1.0, -3.0])
        assert finite_horizon_value(example_problem, 4, 4, P, x0) == pytest.approx(x0 @ P @ x0)

    def test_unit_scalar_one_step(self, unit_scalar_problem):
        """Test the unit scalar value over one step."""
        assert finite_horizon_value(unit_scalar_problem, 0, 1, [[1.0]], [1.0]) == pytest.approx(1.5)

    @pytest.mark.parametrize("block", range(5))
    def test_value_equals_simulated_optimal_cost(self, block):
        """Test the value against the cost of the optimal gain policy from the same recursion."""
        for seed in range(block * 20, block * 20 + 20):
            rng = np.random.default_rng(5000 + seed)
            n, m = int(rng.integers(1, 5)), int(rng.integers(1, 4))
            N = int(rng.integers(1, 16))
            problem = normalized_problem(rng, n, m, N)
            P_T = random_psd(rng, n)
            x0 = rng.standard_normal(n)
            value = finite_horizon_value(problem, 0, N, P_T, x0)
            trace = backward_recursion(problem, N, 0, P_T)
            traj = simulate(problem, optimal_gain_schedule(problem, trace), x0, N, P_terminal=P_T)
            assert traj.cost == pytest.approx(value, rel=1e-8)


class TestComposeRiccati:
    """Test the d-fold composition and the lifted operator."""

    def test_depth_one(self, example_problem):
        """Test that composing one stage is one Riccati step."""
        P = np.array([[2.0, 0.5], [0.5, 1.0]])
        out = compose_riccati(example_problem, 3, 1, P)
        np.testing.assert_allclose(out.entries, riccati_apply(example_problem.stage(3), P).entries,
                                   rtol=1e-14)

    def test_unit_scalar_two_steps(self, unit_scalar_problem):
        """Test that two unit scalar steps map 0 to 1.5."""
        assert compose_riccati(unit_scalar_problem, 0, 2, [[0.0]]).entries[0, 0] == pytest.approx(1.5)

    def test_application_order(self):
        """Test that the last stage of the window is applied first."""
        problem = LQProblem.from_stages([StageData(A=1.0, B=0.0, Q=1.0, R=1.0),
                                         StageData(A=2.0, B=0.0, Q=0.0, R=1.0)])
        # R_0(R_1(P)) = 1 + 4P, whereas R_1(R_0(P)) = 4 + 4P
        assert compose_riccati(problem, 0, 2, [[1.0]]).entries[0, 0] == pytest.approx(5.0)

    def test_example_matches_lifted(self, example_problem):
        """Test that the example's lifted operator equals two composed steps."""
        ls = build_lifted_stage(example_problem, 0, 2)
        composed = compose_riccati(example_problem, 0, 2, np.eye(2))
        assert rel_err(lifted_riccati_apply(ls, np.eye(2)), composed) <= 1e-8

    @pytest.mark.parametrize("d", [1, 2, 3])
    def test_composition_identity(self, d):
        """Test the lifted operator against the d-fold composition on random problems."""
        for seed in range(34):
            rng = np.random.default_rng(7000 + 100 * d + seed)
            n, m = int(rng.integers(1, 5)), int(rng.integers(1, 4))
            problem = normalized_problem(rng, n, m, 2 * d)
            P = random_psd(rng, n)
            ls = build_lifted_stage(problem, 1, d)
            assert rel_err(lifted_riccati_apply(ls, P), compose_riccati(problem, 1, d, P)) <= 1e-8

    def test_lifted_depth_one(self):
        """Test that the d=1 lifted operator is the stage operator."""
        rng = np.random.default_rng(41)
        problem = normalized_problem(rng, 3, 2, 1)
        P = random_psd(rng, 3)
        out = lifted_riccati_apply(build_lifted_stage(problem, 0, 1), P)
        assert rel_err(out, riccati_apply(problem.stage(0), P)) <= 1e-12

    def test_lifted_without_input(self):
        """Test that B = 0 reduces the lifted operator to a Lyapunov step."""
        problem = LQProblem.from_stages(
            [StageData(A=[[1.0, 1.0], [0.0, 1.0]], B=np.zeros((2, 1)), Q=np.eye(2), R=[[1.0]])] * 2
        )
        ls = build_lifted_stage(problem, 0, 2)
        P = np.array([[2.0, 1.0], [1.0, 2.0]])
        expected = ls.Q_tilde + ls.A_tilde.T @ P @ ls.A_tilde
        assert rel_err(lifted_riccati_apply(ls, P), expected) <= 1e-12


class TestRecedingHorizon:
    """Test receding-horizon control."""

    def test_exact_terminal_is_optimal(self):
        """Test that the exact cost-to-go as terminal penalty reproduces the optimal trajectory."""
        rng = np.random.default_rng(51)
        problem = normalized_problem(rng, 3, 1, 12)
        trace = backward_recursion(problem, 12, 0, np.eye(3))
        x0 = rng.standard_normal(3)
        optimal = simulate(problem, optimal_gain_schedule(problem, trace), x0, 12)
        rh = receding_horizon_run(problem, 3, ExactTerminal(trace), x0, 12)
        assert rel_err(rh.states, optimal.states) <= 1e-8
        assert rh.cost == pytest.approx(optimal.cost, rel=1e-8)
        assert len(rh.gains) == 12

    def test_full_window_matches_one_shot(self):
        """Test that T_pred = N with the final penalty is the one-shot finite-horizon solution."""
        rng = np.random.default_rng(52)
        problem = normalized_problem(rng, 2, 1, 8)
        P_N = random_psd(rng, 2)
        trace = backward_recursion(problem, 8, 0, P_N)
        x0 = rng.standard_normal(2)
        one_shot = simulate(problem, optimal_gain_schedule(problem, trace), x0, 8)
        rh = simulate(problem, RecedingHorizon(8, ExactTerminal(trace)), x0, 8)
        assert rel_err(rh.states, one_shot.states) <= 1e-8

        constant = receding_horizon_run(problem, 8, ConstantTerminal(P_N), x0, 1)
        np.testing.assert_allclose(constant.inputs[0], one_shot.inputs[0], rtol=1e-10, atol=1e-12)

    def test_zero_terminal_on_example(self, example_problem):
        """Test that a zero terminal penalty gives a finite consistent run."""
        rh = receding_horizon_run(example_problem, 10, ZeroTerminal(), [1.0, -1.0], 20)
        assert np.isfinite(rh.cost)
        assert np.all(np.isfinite(rh.states))
        assert rh.check_dynamics(example_problem) == []

    def test_prediction_length_positive(self, example_problem):
        """Test that T_pred = 0 raises DimensionError."""
        with pytest.raises(DimensionError):
            receding_horizon_run(example_problem, 0, ZeroTerminal(), [1.0, 0.0], 3)

    def test_exact_terminal_exhausted(self, unit_scalar_problem):
        """Test that planning past the end of the trace is rejected."""
        trace = backward_recursion(unit_scalar_problem, 2, 0, [[1.0]])
        with pytest.raises(PreconditionError):
            receding_horizon_run(unit_scalar_problem, 2, ExactTerminal(trace), [1.0], 3)

    def test_exact_terminal_starts_late(self, unit_scalar_problem):
        """Test that a trace starting after the first window end is rejected, not indexed."""
        trace = backward_recursion(unit_scalar_problem, 10, 6, [[1.0]])
        with pytest.raises(PreconditionError, match="starts at 6"):
            receding_horizon_run(unit_scalar_problem, 2, ExactTerminal(trace), [1.0], 3)

    def test_stationary_scalar_gain(self):
        """Test that a long prediction window recovers the stationary gain 1/phi."""
        problem = scalar_problem()
        rh = receding_horizon_run(problem, 40, ZeroTerminal(), [1.0], 2)
        assert rh.gains[0][0, 0] == pytest.approx(1.0 / GOLDEN, abs=1e-12)
