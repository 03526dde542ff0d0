"""Exception types shared across the toolkit."""


class CoherevalError(Exception):
    """Base class for all toolkit errors."""


class InvalidInput(CoherevalError):
    """Input violates a documented precondition."""


class TooShort(InvalidInput):
    """A document or discourse has fewer sentences than required."""


class NoInterior(InvalidInput):
    """A discourse has no interior (non-opening, non-closing) sentence."""


class ParseError(CoherevalError):
    """A dataset line failed to parse. Carries the 1-based line number."""

    def __init__(self, message: str, line: int):
        super().__init__(f"line {line}: {message}")
        self.line = line


class IntegrityError(CoherevalError):
    """A dataset-level invariant does not hold (e.g. dangling pair id)."""


class BackendError(CoherevalError):
    """A scorer or generator backend failed or broke its contract."""


class EmptyGeneration(CoherevalError):
    """A generator backend returned an empty substitute."""


class InsufficientData(CoherevalError):
    """Sources cannot cover the configured augmentation counts."""


class Undefined(CoherevalError):
    """A correlation coefficient is undefined for the given vectors.

    Raised when a vector is constant (no rank or linear variation to
    correlate against). Reports record the reason instead of a value.
    """


class ConfigError(CoherevalError):
    """A run configuration is unusable."""
