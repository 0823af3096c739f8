"""Exception types shared across the package."""


class ConfigError(ValueError):
    """Invalid configuration. ``field`` names the offending key path when known."""

    def __init__(self, message, field=None):
        self.field = field
        self.message = message
        if field is not None:
            message = f"{field}: {message}"
        super().__init__(message)


class UndefinedRateError(ValueError):
    """Raised when a rate is requested from an empty spike history."""


class UndefinedStatisticError(ValueError):
    """Raised when a statistic has no finite value (zero variance, empty sample)."""
