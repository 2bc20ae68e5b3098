class DomainError(ValueError):
    """An argument lies outside the domain of a kernel function."""


class ConfigError(ValueError):
    """Invalid configuration. ``key`` names the offending entry when known."""

    def __init__(self, message, key=None):
        self.key = key
        self.detail = message
        if key is not None:
            message = f"{key}: {message}"
        super().__init__(message)


class FitError(ValueError):
    """Not enough usable data for a regression."""
