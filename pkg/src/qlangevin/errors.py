"""Exception hierarchy shared by all modules."""


class QLangevinError(Exception):
    """Base class for library errors."""


class InvalidArgumentError(QLangevinError, ValueError):
    """An argument violates a documented precondition."""


class DomainError(QLangevinError, ValueError):
    """A function was evaluated outside its domain of analyticity."""


class UnsupportedContinuationError(QLangevinError):
    """Tabulated data cannot be continued off the sampled real grid."""


class DivergenceError(QLangevinError, ArithmeticError):
    """An integral that must be finite was found to diverge."""


class ContourError(QLangevinError, ArithmeticError):
    """The argument-principle contour passes too close to a zero."""


class StabilityError(QLangevinError):
    """Time evolution was requested for a non-passive (runaway) system."""

    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report
