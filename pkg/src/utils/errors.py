"""LongJump - Exception Hierarchy"""

from typing import List, Optional, Tuple


class LongJumpError(Exception):
    """Base class for every error raised by the engines."""


# ============================================================================
# Group core
# ============================================================================

class MalformedElementError(LongJumpError, ValueError):
    """Coordinate tuple of wrong arity or out of range for its group."""


class CoordinateOverflowError(LongJumpError, OverflowError):
    """Batched int64 arithmetic would leave the checked range."""


class UnknownGeneratorError(LongJumpError, ValueError):
    """A word refers to a generator id the group does not define."""


class MembershipError(LongJumpError, ValueError):
    """Element is not a member of the subgroup it was measured in."""


class UnknownSubgroupError(LongJumpError, ValueError):
    """Subgroup name not in the built-in catalog for this group."""


# ============================================================================
# Geometry and measures
# ============================================================================

class WeightFunctionError(LongJumpError, ValueError):
    """Weight or jump profile is not increasing / not of positive index."""


class GeometryError(LongJumpError, ValueError):
    """Adapted geometry cannot be built from the given data."""


class BallCapError(LongJumpError, ValueError):
    """Ball enumeration would exceed the configured element cap."""

    def __init__(self, message: str, count: int):
        super().__init__(message)
        self.count = count


class OrderingError(LongJumpError, ValueError):
    """Jump components are not totally ordered by their Φ classes."""


class GenerationError(LongJumpError, ValueError):
    """High-mass atoms of the measure do not generate the group."""


class WeightSumError(LongJumpError, ValueError):
    """Component probabilities do not sum to one."""


class MeasureError(LongJumpError, ValueError):
    """Measure data is malformed (asymmetric atoms, bad component)."""


# ============================================================================
# Kernels, walks, analysis
# ============================================================================

class SupportCapError(LongJumpError, ValueError):
    """Threshold truncation left more entries than the support cap allows."""

    def __init__(self, message: str, suggested_eps: float):
        super().__init__(message)
        self.suggested_eps = suggested_eps


class KernelReliabilityError(LongJumpError, ValueError):
    """Dropped mass is too large for the requested pointwise statistic."""


class FitError(LongJumpError, ValueError):
    """Regression input is degenerate."""


class HolderGridError(FitError):
    """Hölder grid contains invalid or too few points."""


# ============================================================================
# Configuration and orchestration
# ============================================================================

class ConfigValidationError(LongJumpError, ValueError):
    """Experiment config failed validation.

    Attributes:
        errors: list of (json_pointer, message) pairs
    """

    def __init__(self, errors: List[Tuple[str, str]]):
        self.errors = errors
        lines = [f"{pointer or '/'}: {message}" for pointer, message in errors]
        super().__init__("Invalid experiment config:\n" + "\n".join(lines))


class ExperimentError(LongJumpError, RuntimeError):
    """An experiment failed with context attached."""

    def __init__(self, message: str, cause: Optional[BaseException] = None):
        super().__init__(message)
        self.cause = cause
