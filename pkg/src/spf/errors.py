"""Exception types raised across the toolkit."""


class SpfError(Exception):
    """Base class for all toolkit errors."""


class InvalidInput(SpfError, ValueError):
    pass


class ConfigError(SpfError, ValueError):
    pass


class AlignmentError(SpfError, ValueError):
    """Frame counts of two feature streams disagree by more than the allowed slack."""


class InsufficientData(SpfError, ValueError):
    pass


class StatsNotFound(SpfError, KeyError):
    pass
