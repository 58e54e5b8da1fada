"""Riccati difference equations for time-varying LQ problems: contraction in the
Riemannian metric, d-step lifting and receding-horizon simulation."""
__version__ = "0.1.0"

from .errors import (  # noqa: E402
    ConfigError,
    ConsistencyError,
    DimensionError,
    InvariantViolation,
    LiftDepthError,
    NumericalError,
    PreconditionError,
    RiccatiLiftError,
    StageRangeError,
)
from .horizon_sim import (  # noqa: E402
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
from .lifting import (  # noqa: E402
    LiftedStage,
    RankReport,
    build_lifted_stage,
    lift_input,
    lifted_contraction,
    minimal_lift_depth,
    rank_report,
    unlift_input,
)
from .problem import LQProblem, StageData  # noqa: E402
from .riccati_core import (  # noqa: E402
    ContractionBound,
    NotStrict,
    RiccatiTrace,
    backward_recursion,
    contraction_bound,
    lft_apply,
    lft_form,
    optimal_gain,
    riccati_apply,
)
from .spd_geometry import SPDMatrix, SymMatrix, is_spd, random_spd, riemannian_distance  # noqa: E402
from .tolerances import DEFAULT_TOLERANCES, Tolerances  # noqa: E402
