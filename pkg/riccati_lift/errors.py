"""Exception hierarchy shared by every riccati_lift module."""
from typing import Iterable, List, Optional


class RiccatiLiftError(Exception):
    """Base class for all library errors.

    ``stage`` is the original time index (or lifted stage index) at which the
    failure happened, when one is known.
    """

    def __init__(self, message: str, *, stage: Optional[int] = None):
        self.reason = message
        self.stage = stage
        if stage is not None:
            message = f"stage {stage}: {message}"
        super().__init__(message)

    def at_stage(self, stage: int) -> "RiccatiLiftError":
        """Return a copy of this error annotated with ``stage``."""
        return type(self)(self.reason, stage=stage)


class DimensionError(RiccatiLiftError, ValueError):
    """Matrix or vector shapes are inconsistent."""


class PreconditionError(RiccatiLiftError, ValueError):
    """Problem data violates a standing assumption (A singular, Q not PSD, R not PD)."""


class NumericalError(RiccatiLiftError, ArithmeticError):
    """A factorization or solve failed on data that passed validation."""


class StageRangeError(RiccatiLiftError, IndexError):
    """Stage data was requested outside the range the problem defines."""


class ConsistencyError(RiccatiLiftError):
    """A computed quantity contradicts a structural guarantee."""


class LiftDepthError(RiccatiLiftError):
    """No lift depth up to the search limit satisfies the rank conditions."""


class ConfigError(RiccatiLiftError):
    """Configuration document is malformed or describes an invalid problem."""

    def __init__(self, key_path: str, reason: str):
        self.key_path = key_path
        super().__init__(f"{key_path or '<root>'}: {reason}")
        self.reason = reason

    def at_stage(self, stage: int) -> "ConfigError":
        return self


class InvariantViolation(RiccatiLiftError):
    """One or more experiment invariants failed."""

    def __init__(self, violations: Iterable[str]):
        self.violations: List[str] = list(violations)
        summary = "; ".join(self.violations[:5])
        more = len(self.violations) - 5
        if more > 0:
            summary += f" (+{more} more)"
        super().__init__(f"{len(self.violations)} invariant violation(s): {summary}")

    def at_stage(self, stage: int) -> "InvariantViolation":
        return self
