"""Exception types shared across the package."""


class HoiEvalError(Exception):
    """Base class for all package errors."""


class ValidationError(HoiEvalError):
    """A value violates a structural invariant."""


class SchemaError(ValidationError):
    """An input file does not conform to the expected schema."""


class ConfigurationError(HoiEvalError):
    """Inconsistent or incomplete configuration."""


class TransportError(HoiEvalError):
    """A remote provider could not be reached or kept failing."""


class PhraseLookupError(HoiEvalError):
    """A phrase is missing from a file-backed embedding source."""

    def __init__(self, phrase: str):
        super().__init__(f"no embedding vector for phrase: {phrase!r}")
        self.phrase = phrase


class UndefinedMetricError(HoiEvalError):
    """A metric average is undefined (e.g. no ground-truth instances)."""


class ImageError(HoiEvalError):
    """An image could not be decoded or is unusable."""
