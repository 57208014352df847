"""Exception types shared across the package."""


class ConfigError(ValueError):
    """Invalid configuration: bad parameter values, unknown names or keys."""


class DomainError(ValueError):
    """Input outside the domain an operation is defined on."""
