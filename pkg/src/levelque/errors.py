"""Exception hierarchy shared by every module."""


class LevelQueError(Exception):
    """Base class for all package errors."""


class DomainError(LevelQueError, ValueError):
    """An argument lies outside the mathematical domain of an operation."""


class CapabilityError(LevelQueError):
    """A request lies outside the supported numerical range."""


class PoleError(LevelQueError, ZeroDivisionError):
    """Evaluation at (or numerically at) a pole."""


class ConditioningError(LevelQueError):
    """The requested point is too close to a zero of a denominator."""


class MapsToCuspError(LevelQueError):
    """A Moebius transformation sends the point to the boundary."""


class QuadratureBudgetError(LevelQueError):
    """Adaptive quadrature ran out of panels before reaching the tolerance.

    The best available estimate and its error are attached.
    """

    def __init__(self, message, estimate, error):
        super().__init__(message)
        self.estimate = estimate
        self.error = error


NUMERICAL_ERRORS = (CapabilityError, PoleError, ConditioningError, QuadratureBudgetError)
