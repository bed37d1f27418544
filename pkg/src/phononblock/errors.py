"""Exception hierarchy shared by every module."""


class PhononBlockError(Exception):
    """Base class for library errors."""


class InvalidDimensionError(PhononBlockError, ValueError):
    pass


class InvalidParameterError(PhononBlockError, ValueError):
    pass


class InvalidInputError(PhononBlockError, ValueError):
    pass


class DomainError(PhononBlockError, ValueError):
    pass


class InvalidMaterialError(PhononBlockError, ValueError):
    pass


class DegenerateSteadyStateError(PhononBlockError):
    """The Liouvillian has more than one (numerically) zero eigenvalue."""


class SolverFailureError(PhononBlockError):
    """An iterative or direct solve did not reach its residual target."""

    def __init__(self, message, residual=None, iterations=None):
        super().__init__(message)
        self.residual = residual
        self.iterations = iterations


class StepSizeError(PhononBlockError):
    """Explicit integration drifted or went unstable; use a smaller dt."""


class UndefinedStatisticsError(PhononBlockError, ArithmeticError):
    """g2 requested for a mode whose occupation is below the guard."""


class EvaluationError(PhononBlockError, ArithmeticError):
    pass


class PrecisionError(PhononBlockError, ArithmeticError):
    pass


class InsufficientDataError(PhononBlockError, ValueError):
    pass


class SweepError(PhononBlockError):
    """Raised when every point of a sweep failed."""


class ConfigError(PhononBlockError, ValueError):
    """Configuration problem; ``key`` is the dotted path of the offending entry."""

    def __init__(self, message, key=None):
        super().__init__(message if key is None else f"{key}: {message}")
        self.key = key
