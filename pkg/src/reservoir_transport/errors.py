"""Exception hierarchy shared by all modules."""


class TransportError(Exception):
    """Base class for every error raised by this package."""


class DomainError(TransportError, ValueError):
    """An argument lies outside the physical domain of an operation."""


class NumericError(TransportError, ArithmeticError):
    """A numerical procedure failed to converge or became ill-conditioned."""


class SingularityError(NumericError):
    """The reservoir compressibility vanished (reservoir exhausted)."""


class IntegrationError(NumericError):
    """Adaptive integration failed; ``state`` carries the last good state."""

    def __init__(self, message, state=None):
        super().__init__(message)
        self.state = state


class FitError(TransportError):
    """A fit window is unusable (too few points, sign changes, ...)."""


class ConfigError(TransportError):
    """Invalid configuration document."""
