"""Exception types shared across the package."""


class ConvergenceError(RuntimeError):
    """An iterative numerical routine failed to meet its tolerance."""


class ConfigError(ValueError):
    """An experiment configuration failed validation."""
