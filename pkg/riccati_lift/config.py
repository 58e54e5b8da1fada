"""Experiment configuration: a JSON document validated by pydantic models."""
import json
import logging
from typing import Annotated, List, Literal, Optional, Tuple, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from .errors import ConfigError, RiccatiLiftError
from .linalg import as_matrix
from .problem import LQProblem, StageData
from .tolerances import Tolerances

logger = logging.getLogger(__name__)

SCHEMA_VERSION = 1

MatrixValue = Union[float, List[List[float]]]


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid")


class StageSpec(_Strict):
    """A, B, Q, R of one stage. A scalar stands for a 1x1 matrix."""
    A: MatrixValue
    B: MatrixValue
    Q: MatrixValue
    R: MatrixValue

    @field_validator("A", "B", "Q", "R")
    @classmethod
    def _rectangular(cls, value):
        if isinstance(value, list):
            if not value or any(len(row) != len(value[0]) for row in value) or not value[0]:
                raise ValueError("matrix rows must be non-empty and of equal length")
        return value


class ExplicitProblemSpec(_Strict):
    kind: Literal["explicit"] = "explicit"
    stages: List[StageSpec] = Field(min_length=1)


class ModulatedProblemSpec(_Strict):
    """Stages ``M_k = M + alpha**k * sin(omega * k) * dM``."""
    kind: Literal["modulated"] = "modulated"
    base: StageSpec
    perturbation: StageSpec
    alpha: float = Field(description="Decay of the perturbation amplitude")
    omega: float = Field(description="Angular frequency of the perturbation")


ProblemSpec = Annotated[Union[ExplicitProblemSpec, ModulatedProblemSpec],
                        Field(discriminator="kind")]


class OutputSpec(_Strict):
    directory: str = Field(default="out", description="Directory for emitted artifacts")
    csv: str = Field(default="distances.csv", description="CSV file name inside directory")
    svg: str = Field(default="distances.svg", description="SVG file name inside directory")
    log_scale: bool = Field(default=False, description="Plot distances on a log-scale y axis")


class ExperimentConfig(_Strict):
    """Everything needed to run the two-boundary contraction experiment."""
    schema_version: Literal[1] = SCHEMA_VERSION
    problem: ProblemSpec
    horizon: int = Field(default=20, ge=1, description="Horizon T; recursions run from k=T to 0")
    boundary_x: MatrixValue = Field(default=1e-2, description="X_T, or a scalar multiple of I")
    boundary_y: MatrixValue = Field(default=1e2, description="Y_T, or a scalar multiple of I")
    lift_depth: Union[Literal["auto"], Annotated[int, Field(ge=1)]] = Field(
        default="auto", description="Lift depth d, or 'auto' for the smallest passing d"
    )
    d_max: Optional[int] = Field(default=None, ge=1,
                                 description="Largest d tried by 'auto' (default 4n)")
    window: Optional[Tuple[int, int]] = Field(
        default=None, description="Lifted-stage window [t_lo, t_hi] (default all of [0, T/d))"
    )
    outputs: OutputSpec = Field(default_factory=OutputSpec)
    tolerances: Tolerances = Field(default_factory=Tolerances)

    @field_validator("window")
    @classmethod
    def _ordered_window(cls, value):
        if value is not None and not 0 <= value[0] <= value[1]:
            raise ValueError("window must satisfy 0 <= t_lo <= t_hi")
        return value

    @model_validator(mode="after")
    def _stages_valid(self):
        try:
            problem = build_problem(self)
            # every stage the experiment will touch
            for k in range(self.horizon):
                problem.stage(k)
        except RiccatiLiftError as e:
            raise ValueError(f"problem: {e}") from e
        for name in ("boundary_x", "boundary_y"):
            M = boundary_matrix(getattr(self, name), problem.n, name)
            if np.any(np.linalg.eigvalsh(0.5 * (M + M.T)) <= 0.0):
                raise ValueError(f"{name}: must be positive definite")
        return self


def _matrix(value: MatrixValue, name: str) -> np.ndarray:
    return as_matrix(value, name)


def _stage(spec: StageSpec, tol: Tolerances) -> StageData:
    return StageData(A=_matrix(spec.A, "A"), B=_matrix(spec.B, "B"), Q=_matrix(spec.Q, "Q"),
                     R=_matrix(spec.R, "R"), tol=tol)


def build_problem(config: ExperimentConfig) -> LQProblem:
    spec, tol = config.problem, config.tolerances
    if isinstance(spec, ExplicitProblemSpec):
        return LQProblem.from_stages([_stage(s, tol) for s in spec.stages], tol=tol)
    base, pert = spec.base, spec.perturbation
    return LQProblem.modulated(
        _matrix(base.A, "A"), _matrix(base.B, "B"), _matrix(base.Q, "Q"), _matrix(base.R, "R"),
        _matrix(pert.A, "dA"), _matrix(pert.B, "dB"), _matrix(pert.Q, "dQ"), _matrix(pert.R, "dR"),
        alpha=spec.alpha, omega=spec.omega, tol=tol,
    )


def boundary_matrix(value: MatrixValue, n: int, name: str = "boundary") -> np.ndarray:
    """A scalar means ``value * I_n``."""
    if isinstance(value, (int, float)):
        return float(value) * np.eye(n)
    M = as_matrix(value, name)
    if M.shape != (n, n):
        raise ValueError(f"{name}: must be {n}x{n}, got {M.shape[0]}x{M.shape[1]}")
    return M


def _key_path(loc) -> str:
    # drop union tags pydantic inserts into locations
    parts = [str(p) for p in loc if p not in ("explicit", "modulated", "function-after")]
    return ".".join(parts) if parts else "<root>"


def parse_config(text: str) -> ExperimentConfig:
    """Parse and fully validate a JSON configuration document."""
    try:
        data = json.loads(text)
    except json.JSONDecodeError as e:
        raise ConfigError("<root>", f"malformed JSON: {e.msg} (line {e.lineno})") from e
    try:
        return ExperimentConfig.model_validate(data)
    except ValidationError as e:
        first = e.errors()[0]
        reason = first["msg"]
        if reason.startswith("Value error, "):
            reason = reason[len("Value error, "):]
        key_path = _key_path(first["loc"])
        if not first["loc"] and ": " in reason:
            # model-level checks prefix their message with the offending key
            key_path, reason = reason.split(": ", 1)
        raise ConfigError(key_path, reason) from e
    except RiccatiLiftError as e:
        raise ConfigError("problem", str(e)) from e


def serialize_config(config: ExperimentConfig) -> str:
    return config.model_dump_json(indent=2)


def load_config(path) -> ExperimentConfig:
    try:
        with open(path, encoding="utf-8") as f:
            text = f.read()
    except OSError as e:
        raise ConfigError("<file>", f"cannot read {path}: {e.strerror}") from e
    return parse_config(text)
