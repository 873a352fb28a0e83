"""Exception types shared across the package."""


class DriftscanError(Exception):
    """Base class for all driftscan errors."""


class ConfigError(DriftscanError):
    """Invalid or non-finite configuration values."""


class DataError(DriftscanError):
    """Invalid input data (non-finite values, empty series, bad volatility)."""


class ParseError(DataError):
    """Malformed input file row."""

    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class WindowRangeError(DriftscanError):
    """A scan window anchor is no longer retained in the state buffer."""
