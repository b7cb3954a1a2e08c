"""Exception and warning types raised by plpoi."""


class DimensionError(ValueError):
    """Array length or shape does not match what the operation expects."""


class DomainError(ValueError):
    """Input lies outside the mathematical domain of the operation."""


class ConfigError(ValueError):
    """A parameter or configuration value is invalid."""


class DegenerateWarning(UserWarning):
    """A measure-zero input forced a documented fallback path."""
