"""Exception types shared across the package."""


class MdynError(Exception):
    """Base class for all package errors."""


class InvalidParameterError(MdynError, ValueError):
    """A parameter violates a model constraint (e.g. alpha outside (0, 1))."""


class DegenerateDistributionError(MdynError, ValueError):
    pass


class AssumptionViolatedError(MdynError, ValueError):
    """A hypothesis required by the requested computation does not hold."""


class InsufficientDataError(MdynError, ValueError):
    pass


class NumericError(MdynError, ArithmeticError):
    """An iterative numerical procedure failed to converge or produced non-finite values."""
