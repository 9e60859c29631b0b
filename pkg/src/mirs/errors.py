class ConfigurationError(ValueError):
    """Raised when a run or scenario configuration cannot be satisfied."""
