class ServiceError(Exception):
    """Base class for this package's errors."""


class ConfigError(ServiceError):
    """Bad configuration or unusable training data."""


class DataError(ServiceError):
    """A dataset or corpus file could not be parsed."""
