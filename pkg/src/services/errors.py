"""
Cograd Errors
Exception hierarchy shared by the services, the CLI and the HTTP API.
"""

from typing import Optional


class CogradError(Exception):
    """Base class for every domain failure."""


class InvalidSample(CogradError):
    """Input data cannot form a sample (length, ordering, parse errors)."""


class DuplicateAbscissa(InvalidSample):
    """Two rows share the same x value."""


class TiedValues(CogradError):
    """Two entries of a vector to be ranked are equal."""


class BreakpointHit(CogradError):
    """The requested slope lies in the breakpoint set, where G is undefined."""


class DegenerateLevel(CogradError):
    """Critical value G* is not positive."""


class LevelUnattainable(CogradError):
    """No critical value reaches the requested confidence level."""

    def __init__(self, message: str, max_level: Optional[float] = None):
        super().__init__(message)
        self.max_level = max_level


class NullTooLarge(CogradError):
    """Exact enumeration requested beyond the configured ceiling."""


class ProblemTooLarge(CogradError):
    """Sample exceeds the step-function size guard."""


class DomainError(CogradError):
    """Argument outside the domain of a numeric routine."""


class QuadratureFailure(CogradError):
    """Numerical integration did not reach the required accuracy."""


class DegenerateDesign(CogradError):
    """C vanishes for this design, so the asymptotic variance is undefined."""


class ModelNotSampleable(CogradError):
    """Error law has no quantile function."""


class InvalidModel(CogradError):
    """User supplied error law failed validation."""


class UnknownModel(CogradError):
    """Name does not match a built-in error law or design."""


class InvalidConfig(CogradError):
    """Simulation config is malformed."""
