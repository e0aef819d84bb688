"""Shared exception types."""


class BotgateError(Exception):
    """Base class for all toolkit errors."""


class ConfigError(BotgateError):
    """Invalid configuration value (bad CIDR, non-positive duration, ...)."""


class TraceParseError(BotgateError):
    """Malformed trace file; message names the offending line."""


class DataError(BotgateError):
    """Invalid data passed to an operation (empty matrix, single-class fit, ...)."""


class DegenerateSignalError(BotgateError):
    """Constant encoded sequence; autocorrelation denominator is zero."""


class ModelFormatError(BotgateError):
    """Model file is corrupt, truncated or has an unknown version."""


class PolicyError(BotgateError):
    """Policy command parse error or store violation."""
