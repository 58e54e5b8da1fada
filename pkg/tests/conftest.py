"""Shared fixtures for riccati-lift tests."""
import json
from pathlib import Path

import numpy as np
import pytest

from riccati_lift.config import parse_config
from riccati_lift.problem import LQProblem, StageData

REPO_ROOT = Path(__file__).resolve().parent.parent
EXAMPLE_CONFIG = REPO_ROOT / "configs" / "modulated_example.json"


def well_conditioned(rng, n, cond_max=20.0):
    """Random n x n matrix with condition number below cond_max."""
    while True:
        A = rng.standard_normal((n, n))
        if np.linalg.cond(A) < cond_max:
            return A


def random_stage(rng, n, m, q_rank=None, zero_b=False):
    """Random valid stage; Q has rank ``q_rank`` (full by default)."""
    A = well_conditioned(rng, n)
    B = np.zeros((n, m)) if zero_b else rng.standard_normal((n, m))
    r = n if q_rank is None else q_rank
    G = rng.standard_normal((n, r))
    Q = G @ G.T + (0.1 * np.eye(n) if q_rank is None else 0.0)
    H = rng.standard_normal((m, m))
    R = H @ H.T + 0.5 * np.eye(m)
    return StageData(A=A, B=B, Q=Q, R=R)


def random_problem(rng, n, m, horizon, **kwargs):
    return LQProblem.from_stages([random_stage(rng, n, m, **kwargs) for _ in range(horizon)])


def random_psd(rng, n, rank=None):
    G = rng.standard_normal((n, n if rank is None else rank))
    return G @ G.T


def scalar_problem(a=1.0, b=1.0, q=1.0, r=1.0):
    return LQProblem.stationary([[a]], [[b]], [[q]], [[r]])


@pytest.fixture
def unit_scalar_problem():
    """Stationary scalar problem A = B = Q = R = 1."""
    return scalar_problem()


@pytest.fixture
def unit_scalar_stage(unit_scalar_problem):
    return unit_scalar_problem.stage(0)


@pytest.fixture
def example_config_text():
    """The shipped two-state, one-input modulated configuration."""
    return EXAMPLE_CONFIG.read_text(encoding="utf-8")


@pytest.fixture
def example_config(example_config_text):
    return parse_config(example_config_text)


@pytest.fixture
def example_problem():
    """Modulated problem M_k = M + 0.9**k sin(k) dM."""
    return LQProblem.modulated(
        A=[[5.0, 3.0], [2.0, 1.0]],
        B=[[2.0], [3.0]],
        Q=[[10.0, 4.0], [4.0, 7.0]],
        R=[[5.0]],
        dA=[[10.0, 20.0], [30.0, 10.0]],
        dB=[[10.0], [20.0]],
        dQ=[[2.0, 1.0], [1.0, 3.0]],
        dR=[[4.0]],
        alpha=0.9,
        omega=1.0,
    )


@pytest.fixture
def write_config(tmp_path, example_config_text):
    """Write a (possibly modified) copy of the example config and return its path."""
    def write(**overrides):
        data = json.loads(example_config_text)
        data["outputs"]["directory"] = str(tmp_path / "out")
        data.update(overrides)
        path = tmp_path / "config.json"
        path.write_text(json.dumps(data), encoding="utf-8")
        return path

    return write


def normalized_problem(rng, n, m, horizon):
    """Random problem whose A_k have unit spectral norm, so long products stay bounded."""
    stages = []
    for _ in range(horizon):
        st = random_stage(rng, n, m)
        stages.append(StageData(A=st.A / np.linalg.norm(st.A, 2), B=st.B, Q=st.Q, R=st.R))
    return LQProblem.from_stages(stages)
