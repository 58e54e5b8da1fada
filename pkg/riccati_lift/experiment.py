"""The two-boundary contraction experiment.

Two backward Riccati recursions are started from boundary matrices X_T and
Y_T. Their Riemannian distance must never grow from one step to the next, and
across every lifted stage t it must shrink by at least the certified rate of
that stage. The 2-norm distance is recorded alongside for comparison.
"""
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import List, Optional, Tuple, Union

import numpy as np

from .config import ExperimentConfig, boundary_matrix, build_problem
from .errors import DimensionError, InvariantViolation, LiftDepthError
from .lifting import RankReport, build_lifted_stage, lifted_contraction, minimal_lift_depth, rank_report
from .problem import LQProblem
from .report import DistanceRow, DistanceTable, StageRow, emit_csv, emit_svg
from .riccati_core import BoundResult, RiccatiTrace, backward_recursion
from .spd_geometry import riemannian_distance

logger = logging.getLogger(__name__)

Depth = Union[int, str, None]


@dataclass(frozen=True)
class StageBound:
    t: int
    bound: BoundResult

    @property
    def rho(self) -> float:
        return self.bound.rho if self.bound.strict else float("nan")


@dataclass(frozen=True, eq=False)
class ExperimentResult:
    table: DistanceTable
    d: int
    window: Tuple[int, int]
    rank: RankReport
    bounds: Tuple[StageBound, ...]
    violations: Tuple[str, ...]
    csv_path: Optional[Path] = None
    svg_path: Optional[Path] = None

    @property
    def ok(self) -> bool:
        return not self.violations


def resolve_depth(config: ExperimentConfig, problem: LQProblem, depth: Depth = None) -> int:
    """Explicit ``depth`` wins over the config; "auto" searches the smallest passing d."""
    choice = config.lift_depth if depth is None else depth
    if choice != "auto":
        d = int(choice)
        if d < 1:
            raise DimensionError(f"lift depth must be positive, got {d}")
        return d
    d_max = config.d_max or 4 * problem.n
    t_lo, t_hi = config.window if config.window is not None else (0, config.horizon)
    d = minimal_lift_depth(problem, t_lo, t_hi, d_max=d_max, horizon=config.horizon)
    if d is None:
        raise LiftDepthError(
            f"no lift depth d <= {d_max} passes the rank conditions over the horizon "
            f"{config.horizon}; pass an explicit d or raise d_max"
        )
    logger.debug("auto lift depth: %d", d)
    return d


def lifted_window(config: ExperimentConfig, d: int) -> Tuple[int, int]:
    """Lifted stages analysed at depth d, all of which fit inside ``[0, T]``."""
    last = config.horizon // d - 1
    if last < 0:
        raise DimensionError(f"horizon {config.horizon} is shorter than the lift depth {d}")
    if config.window is None:
        return 0, last
    t_lo, t_hi = config.window
    if t_hi > last:
        raise DimensionError(
            f"window [{t_lo}, {t_hi}] exceeds the last lifted stage {last} for T={config.horizon}, d={d}"
        )
    return t_lo, t_hi


def bound_table(problem: LQProblem, d: int, t_lo: int, t_hi: int) -> List[StageBound]:
    return [StageBound(t, lifted_contraction(build_lifted_stage(problem, t, d)))
            for t in range(t_lo, t_hi + 1)]


def _distances(trace_x: RiccatiTrace, trace_y: RiccatiTrace, config: ExperimentConfig):
    rows = []
    for k in range(config.horizon, -1, -1):
        X, Y = np.asarray(trace_x[k]), np.asarray(trace_y[k])
        delta = riemannian_distance(X, Y, config.tolerances)
        rows.append(DistanceRow(k=k, riemannian=delta, two_norm=float(np.linalg.norm(X - Y, 2))))
    return rows


def run_contraction_experiment(config: ExperimentConfig, out_dir=None, svg: bool = True,
                               depth: Depth = None,
                               log_scale: Optional[bool] = None) -> ExperimentResult:
    """Run both recursions, tabulate distances and lifted-stage rates, write the artifacts.

    Artifacts are written before any invariant failure is raised as
    InvariantViolation.
    """
    problem = build_problem(config)
    tol = config.tolerances
    T = config.horizon
    d = resolve_depth(config, problem, depth)
    t_lo, t_hi = lifted_window(config, d)
    logger.debug("experiment: T=%d d=%d lifted stages [%d, %d]", T, d, t_lo, t_hi)

    trace_x = backward_recursion(problem, T, 0, boundary_matrix(config.boundary_x, problem.n))
    trace_y = backward_recursion(problem, T, 0, boundary_matrix(config.boundary_y, problem.n))
    rows = _distances(trace_x, trace_y, config)
    delta = {r.k: r.riemannian for r in rows}

    violations = []
    for k in range(T - 1, -1, -1):
        if delta[k] > delta[k + 1] + tol.bound_slack:
            violations.append(f"distance grows at k={k}: {delta[k]:.17g} > {delta[k + 1]:.17g}")

    report = rank_report(problem, d, t_lo, t_hi)
    if not report.passes:
        violations.append(f"rank conditions fail at d={d} for lifted stages {list(report.failing)}")

    bounds = bound_table(problem, d, t_lo, t_hi)
    stage_rows = []
    for sb in bounds:
        num, den = delta[d * sb.t], delta[d * (sb.t + 1)]
        ratio = num / den if den > tol.pd_tolerance else float("nan")
        stage_rows.append(StageRow(t=sb.t, rho_bound=sb.rho, observed_ratio=ratio))
        if not sb.bound.strict:
            violations.append(f"lifted stage {sb.t} is not strictly contractive: {sb.bound.reason}")
        elif num > sb.rho * den + tol.bound_slack:
            violations.append(
                f"lifted stage {sb.t}: distance {num:.17g} exceeds rho {sb.rho:.17g} x {den:.17g}"
            )

    table = DistanceTable(rows=tuple(rows), stage_rows=tuple(stage_rows))
    out = Path(out_dir if out_dir is not None else config.outputs.directory)
    out.mkdir(parents=True, exist_ok=True)
    csv_path = out / config.outputs.csv
    emit_csv(table, csv_path)
    svg_path = None
    if svg:
        svg_path = out / config.outputs.svg
        emit_svg(table, svg_path,
                 log_scale=config.outputs.log_scale if log_scale is None else log_scale)

    result = ExperimentResult(table=table, d=d, window=(t_lo, t_hi), rank=report,
                              bounds=tuple(bounds), violations=tuple(violations),
                              csv_path=csv_path, svg_path=svg_path)
    if violations:
        for v in violations:
            logger.warning("invariant violation: %s", v)
        raise InvariantViolation(violations)
    return result
