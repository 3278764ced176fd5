"""Exception types shared across the toolkit."""


class LocspoofError(Exception):
    """Base class for all toolkit errors."""


class InvalidIntervalError(LocspoofError, ValueError):
    """Wrap interval with t1 >= t2."""


class DegenerateGeometryError(LocspoofError, ValueError):
    """Coincident points or a vanishing range/denominator in the geometry maps."""


class InvalidNoiseError(LocspoofError, ValueError):
    """Noise standard deviation must be strictly positive."""


class DegenerateSignalError(LocspoofError, ValueError):
    """All-zero noiseless signal; SNR referencing is undefined."""


class SingularInformationError(LocspoofError, ValueError):
    """A Fisher information matrix is singular past the eigenvalue floor.

    Carries the condition number observed before the failure so callers can
    report how close to singular the matrix was.
    """

    def __init__(self, message, condition_number=float("inf")):
        super().__init__(message)
        self.condition_number = condition_number


class SingularNuisanceError(SingularInformationError):
    """The nuisance block eliminated by the Schur complement is singular."""


class InvalidGridError(LocspoofError, ValueError):
    """Empty or malformed search grid."""


class NoIntersectionError(LocspoofError, ValueError):
    """Two lines of bearing are parallel and define no position."""


class NoDataError(LocspoofError, ValueError):
    """A plot or report was requested for an empty row set."""


class ConfigError(LocspoofError, ValueError):
    """Configuration file problem; carries the offending key path."""

    def __init__(self, message, key=None):
        super().__init__(message if key is None else f"{key}: {message}")
        self.key = key
