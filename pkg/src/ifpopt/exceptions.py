"""Exception types raised by ifpopt."""


class IfpoptError(Exception):
    """Base class for all package errors."""


class DomainError(IfpoptError, ValueError):
    """An argument lies outside the domain of the operation."""


class AccuracyError(IfpoptError):
    """A numerical approximation missed its stated tolerance."""


class ConvergenceError(IfpoptError):
    """An iterative solver hit its iteration cap."""


class AssumptionViolation(IfpoptError):
    """A standing assumption (balance, connectivity, convexity) fails."""


class StepsizeTooLarge(IfpoptError, ValueError):
    """The stepsize exceeds the bound that keeps the DT index finite."""


class GainConditionError(IfpoptError, ValueError):
    """The coupling gain violates the per-agent in-degree condition."""


class DivergenceError(IfpoptError):
    """A simulation produced a non-finite state.

    Attributes
    ----------
    step : int
        First step whose state is non-finite.
    """

    def __init__(self, message, step):
        super().__init__(message)
        self.step = step


class ConfigError(IfpoptError, ValueError):
    """A scenario document failed schema validation.

    Attributes
    ----------
    path : str
        Dotted path of the offending field.
    """

    def __init__(self, path, message):
        super().__init__(f"{path}: {message}")
        self.path = path
