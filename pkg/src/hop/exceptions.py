"""Exception types shared across the package."""


class HopError(Exception):
    """Base class for all package errors."""


class DomainError(HopError):
    """Parameter outside the mathematical domain of an operation
    (e.g. degrees of freedom too small for the requested moment)."""


class SizeError(HopError):
    """Problem dimension exceeds a configured cap."""


class DataError(HopError):
    """Malformed input data (non-finite entries, bad shapes, bad CSV)."""


class NumericalError(HopError):
    """A numerical routine failed (factorization, under/overflow)."""


class DegenerateStep(HopError):
    """Acceleration step length is undefined because the
    second-difference vector is numerically zero."""


class LineSearchExhausted(HopError):
    """Backtracking line search shrank the step below the floor."""


class IllPosedError(HopError):
    """Estimation problem has too few observations."""


class ShiftViolation(HopError):
    """The smoothing shift t is too small: some entry of t + varphi(w)
    became non-positive."""


class NonMonotoneError(HopError):
    """EM log-likelihood decreased beyond the allowed slack."""
