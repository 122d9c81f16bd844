"""Exception types raised by the package."""


class CdprError(Exception):
    """Base class for all package errors."""


class DegenerateCable(CdprError):
    """A cable has (numerically) zero length at the requested pose."""


class SingularMass(CdprError):
    """The generalized mass matrix cannot be inverted."""


class SingularWrenchMatrix(CdprError):
    """Square wrench matrix with vanishing determinant."""


class InvalidDuration(CdprError, ValueError):
    """Non-positive trajectory duration."""


class NumericalDivergence(CdprError):
    """Plant state blew up during integration."""


class NoOscillationDetected(CdprError):
    """Velocity error never crosses its mean after the end of motion."""


class EmptyGrid(CdprError, ValueError):
    """Grid definition contains no points."""


class ConfigError(CdprError, ValueError):
    """Malformed robot or scenario description."""


class SlackAllCables(UserWarning):
    """Every cable went slack at the same instant."""
