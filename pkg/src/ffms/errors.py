"""Exception and warning classes shared across the package."""


class FFMSError(Exception):
    """Base class for all package errors."""


class DomainError(FFMSError, ValueError):
    """An input lies outside the mathematical domain of an operation."""


class PreconditionError(FFMSError, ValueError):
    """Input data does not satisfy an operation's preconditions."""


class FitError(FFMSError):
    """A parameter fit could not be performed (too few points, degenerate data)."""


class EstimationError(FFMSError):
    """A signal-derived quantity (latency, period) could not be estimated."""


class IntegrationError(FFMSError):
    """The transient integrator diverged."""

    def __init__(self, message, dt=None):
        super().__init__(message)
        self.dt = dt


class ComputationError(FFMSError, ArithmeticError):
    """A derived quantity is undefined for the given inputs."""


class ConfigError(FFMSError):
    """A run configuration failed schema validation.

    ``pointer`` is a JSON pointer to the offending key.
    """

    def __init__(self, message, pointer=""):
        super().__init__(message)
        self.pointer = pointer


class ValidityWarning(UserWarning):
    """An operation succeeded outside the range where the model was validated."""
