"""Exception hierarchy shared by every module."""


class SpiralSheetError(Exception):
    """Base class for all package errors."""


class DomainError(SpiralSheetError, ValueError):
    """Input lies outside the admissible domain (bad angle, bad parameter)."""


class ConfigError(DomainError):
    """A configuration value is missing, malformed or out of range."""

    def __init__(self, key, message):
        super().__init__(f"{key}: {message}")
        self.key = key


class FieldConstructionError(SpiralSheetError):
    """A sampled field could not be built (non-finite sample, wrong shape)."""


class ContractError(SpiralSheetError):
    """An operator received a field outside its admissible class."""


class IntegrabilityError(ContractError):
    """An improper integral diverges at one of its ends."""


class OutOfBallError(ContractError):
    """Input left the ball on which the nonlinear map is controlled."""


class GeometryDegenerateError(ContractError):
    """The radial profile touched zero, so the curve degenerates."""


class SingularConfigurationError(ContractError):
    """The weighted circulation derivative hit a zero denominator."""


class DivergentTermError(ContractError):
    """A series term of the self-interaction integral diverges."""


class AccuracyError(SpiralSheetError):
    """A quadrature could not reach the requested tolerance."""


class ContractionFailure(SpiralSheetError):
    """A fixed-point iteration diverged; ``history`` holds its step norms."""

    def __init__(self, message, history=()):
        super().__init__(message)
        self.history = list(history)


class NonConvergenceError(ContractionFailure):
    """A fixed-point iteration ran out of iterations before converging."""
