"""Exception types shared across the package."""


class ValidationError(ValueError):
    """An input violates a declared invariant. Values are never clamped silently."""


class ConfigError(ValidationError):
    """A configuration file is malformed. Carries the location of the offending entry."""

    def __init__(self, location: str, message: str):
        self.location = location
        super().__init__(f"{location}: {message}")


class SearchCapExceeded(RuntimeError):
    """The joint action space is larger than the configured enumeration cap."""
