"""Exception types shared across the package."""


class ConfigurationError(ValueError):
    """Invalid parameters, unknown names, or a malformed config file."""


class WindowError(ValueError):
    """The truncation window is too wide, too narrow, or leaks mass."""


class StepSizeError(ValueError):
    """A fixed step is too large for the current rates."""


class DomainError(ValueError):
    """A closed-form expression was evaluated outside its domain."""
