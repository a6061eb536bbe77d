"""Exception types raised across the package."""


class LZCError(Exception):
    """Base class for all package errors."""


class ConfigError(LZCError, ValueError):
    """Invalid model parameters or run configuration."""


class RootIsolationFailure(LZCError):
    pass


class PoleError(LZCError, ValueError):
    """Gamma function evaluated at a nonpositive integer."""


class DegeneracyError(LZCError, ValueError):
    """A formula requires distinct Coulomb strengths but got duplicates (or vice versa)."""


class DegenerateRootError(LZCError, ValueError):
    pass


class SingularMatrixError(LZCError):
    pass


class InvalidStart(LZCError, ValueError):
    """Series start time too large for the requested accuracy."""


class StepLimitExceeded(LZCError):
    pass


class NormDriftError(LZCError):
    pass


class NotConverged(LZCError):
    """A long-time limit failed to settle; ``diagnostics`` holds the evidence."""

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}


class ProbabilityRangeError(LZCError, ArithmeticError):
    """A closed form produced a value outside [0, 1] beyond rounding slack."""
