"""Exception hierarchy shared by the simulator, the inference pipeline and the CLI."""


class KDTLError(Exception):
    """Base class for all package errors."""


class DomainError(KDTLError, ValueError):
    """An argument lies outside the domain of a physical relation."""


class ConfigurationError(KDTLError, ValueError):
    """Invalid configuration or insufficient numerical sampling."""


class NumericalError(KDTLError, ArithmeticError):
    """A numerical procedure failed to reach its accuracy target."""


class QuadratureError(NumericalError):
    pass


class FitError(NumericalError):
    pass


class ExtractionError(NumericalError):
    pass


class CalibrationError(NumericalError):
    pass


class AggregationError(NumericalError):
    pass
