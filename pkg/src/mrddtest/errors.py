"""Exception hierarchy shared by every module."""


class MrddError(Exception):
    """Base class for all errors raised by this package."""


class DomainError(MrddError, ValueError):
    """Argument outside the mathematical domain of a function."""


class ConfigError(MrddError, ValueError):
    """Invalid user configuration (dimensions, flags, alpha, ...)."""


class DataError(MrddError):
    """Problem with the data itself rather than with the configuration."""


class EmptyData(DataError):
    """No usable observations remain."""


class InsufficientLocalData(DataError):
    """Too few observations inside the kernel window (or conditioning set)."""


class SingularDesign(DataError):
    """Local polynomial normal equations are numerically singular."""


class DegenerateSample(DataError):
    """Sample has zero spread, so scale-dependent quantities are undefined."""


class DegenerateVariance(DataError):
    """Estimated variance of a discontinuity statistic is not strictly positive."""
