"""Exception types raised across the package."""


class DimensionError(ValueError):
    """Shape or rank argument out of range."""


class ParameterError(ValueError):
    """Invalid scalar parameter (threshold, probability, decay rate, ...)."""


class NumericalError(ArithmeticError):
    """A factorization failed to converge or met non-finite input."""


class GridError(ValueError):
    """Experiment results do not form the grid the caller asked for."""


class ConfigError(ValueError):
    """Malformed or invalid experiment configuration file."""

    def __init__(self, message, lineno=None):
        self.lineno = lineno
        if lineno is not None:
            message = f"line {lineno}: {message}"
        super().__init__(message)
