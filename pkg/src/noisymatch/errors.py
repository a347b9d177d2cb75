"""Exception types shared across the package."""


class ConfigError(ValueError):
    """A configuration value is invalid; the message names the offending field."""


class OverdemandError(ConfigError):
    """Total college capacity is not strictly below the number of students."""


class DegenerateVarianceError(ValueError):
    """A maximum order statistic has zero sample variance (point-mass noise)."""


class InsufficientTailMassError(ValueError):
    """An empirical tail ratio has a zero-count denominator."""


class ReplicationError(RuntimeError):
    """A module error raised inside a Monte Carlo replication, with its index."""
