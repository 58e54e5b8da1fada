"""Numerical tolerances threaded through every constructor and operation."""
from pydantic import BaseModel, ConfigDict, Field


class Tolerances(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    pd_tolerance: float = Field(
        default=1e-10,
        description="Relative gate for positive definiteness of SPD arguments",
        gt=0,
        lt=1,
    )
    rank_tolerance: float = Field(
        default=1e-9,
        description="Relative singular-value cutoff for full-rank and PD hypothesis tests",
        gt=0,
        lt=1,
    )
    psd_tolerance: float = Field(
        default=1e-9,
        description="Relative slack when accepting a matrix as positive semi-definite",
        gt=0,
        lt=1,
    )
    bound_slack: float = Field(
        default=1e-9,
        description="Absolute slack allowed in contraction inequalities",
        ge=0,
    )


DEFAULT_TOLERANCES = Tolerances()
