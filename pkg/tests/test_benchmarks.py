"""Performance benchmarks for riccati-lift.

These benchmarks measure key performance metrics including:
- Riccati operator and LFT evaluation
- Riemannian distance computation
- Lifted-stage construction and rank reports
- The full two-boundary experiment
"""
import numpy as np
import pytest

from riccati_lift.experiment import run_contraction_experiment
from riccati_lift.horizon_sim import ZeroTerminal, compose_riccati, receding_horizon_run
from riccati_lift.lifting import build_lifted_stage, minimal_lift_depth, rank_report
from riccati_lift.riccati_core import backward_recursion, contraction_bound, lft_apply, lft_form, riccati_apply
from riccati_lift.spd_geometry import random_spd, riemannian_distance

from .conftest import random_stage


@pytest.fixture
def stage_5():
    return random_stage(np.random.default_rng(0), 5, 5)


@pytest.fixture
def psd_5():
    return np.asarray(random_spd(5, 3, 100.0))


class TestOperatorPerformance:
    """Benchmark single-stage operator evaluations."""

    def test_benchmark_riccati_apply(self, benchmark, stage_5, psd_5):
        """Benchmark R(P) through the Cholesky-based form."""
        result = benchmark(riccati_apply, stage_5, psd_5)
        assert result.dim == 5

    def test_benchmark_lft_apply(self, benchmark, stage_5, psd_5):
        """Benchmark R(P) through the precomputed LFT blocks."""
        lft = lft_form(stage_5)
        result = benchmark(lft_apply, lft, psd_5)
        assert result.dim == 5

    def test_benchmark_contraction_bound(self, benchmark, stage_5):
        """Benchmark the contraction certificate for one stage."""
        result = benchmark(contraction_bound, stage_5)
        assert result.strict

    def test_benchmark_riemannian_distance(self, benchmark):
        """Benchmark the distance between two 6x6 SPD matrices."""
        U, V = random_spd(6, 1, 1e3), random_spd(6, 2, 1e3)
        result = benchmark(riemannian_distance, U, V)
        assert result > 0.0


class TestRecursionPerformance:
    """Benchmark multi-stage recursions on the modulated example."""

    def test_benchmark_backward_recursion(self, benchmark, example_problem):
        """Benchmark 20 backward steps of the modulated example."""
        trace = benchmark(backward_recursion, example_problem, 20, 0, 1e2 * np.eye(2))
        assert len(trace) == 21

    def test_benchmark_compose_riccati(self, benchmark, example_problem):
        """Benchmark a 4-fold composition."""
        result = benchmark(compose_riccati, example_problem, 0, 4, np.eye(2))
        assert result.dim == 2

    def test_benchmark_receding_horizon(self, benchmark, example_problem):
        """Benchmark 20 receding-horizon steps with a 10-step prediction window."""
        traj = benchmark(receding_horizon_run, example_problem, 10, ZeroTerminal(), [1.0, -1.0], 20)
        assert traj.N == 20


class TestLiftingPerformance:
    """Benchmark lifted-stage construction."""

    def test_benchmark_build_lifted_stage(self, benchmark, example_problem):
        """Benchmark one lifted stage at d=2."""
        stage = benchmark(build_lifted_stage, example_problem, 3, 2)
        assert stage.d == 2

    def test_benchmark_rank_report(self, benchmark, example_problem):
        """Benchmark the rank checks of ten lifted stages."""
        report = benchmark(rank_report, example_problem, 2, 0, 9)
        assert report.passes

    def test_benchmark_minimal_lift_depth(self, benchmark, example_problem):
        """Benchmark the lift depth search."""
        d = benchmark(minimal_lift_depth, example_problem, 0, 20, horizon=20)
        assert d == 2


class TestExperimentPerformance:
    """Benchmark the end-to-end experiment."""

    def test_benchmark_experiment(self, benchmark, example_config, tmp_path):
        """Benchmark both recursions, the lifted-stage bounds and CSV output."""
        result = benchmark(run_contraction_experiment, example_config, out_dir=tmp_path, svg=False)
        assert result.ok
