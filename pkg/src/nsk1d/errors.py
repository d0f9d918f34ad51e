"""Exception hierarchy shared by every module."""


class NSKError(Exception):
    """Base class for all package errors."""


class DomainError(NSKError, ValueError):
    """An argument lies outside the admissible domain."""

    def __init__(self, field, message):
        self.field = field
        super().__init__(f"{field}: {message}")


class ConfigError(DomainError):
    """Configuration document failed validation.

    ``field`` holds a JSON pointer to the offending entry.
    """


class NumericalFailure(NSKError):
    """A run could not be continued. ``state`` is the last valid state."""

    def __init__(self, message, state=None):
        self.state = state
        super().__init__(message)


class VacuumError(NumericalFailure):
    """Specific volume reached a non-positive (or non-finite) value."""


class StabilityError(NumericalFailure):
    """Energy guard rejected the step after all allowed dt halvings."""
