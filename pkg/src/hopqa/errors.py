"""Exception hierarchy shared across the package."""

from __future__ import annotations


class HopQAError(Exception):
    """Base class for every error raised by hopqa."""


class MalformedRecord(HopQAError):
    """A trace record is not valid JSON."""


class SchemaViolation(HopQAError):
    """A trace record parsed but breaks the schema or an invariant."""

    def __init__(self, field: str, message: str):
        self.field = field
        super().__init__(f"{field}: {message}")


class InsufficientData(HopQAError):
    pass


class DimensionMismatch(HopQAError):
    pass


class MissingPlaceholder(HopQAError):
    def __init__(self, template: str, names):
        self.names = sorted(names)
        super().__init__(f"template {template!r} is missing values for {', '.join(self.names)}")


class MalformedPlan(HopQAError):
    pass


class MalformedAnswer(HopQAError):
    pass


class PromptBudgetExceeded(HopQAError, AssertionError):
    """A rendered prompt is longer than the configured character budget."""


class UnverifiableAnswer(HopQAError):
    pass


class BackendFailure(HopQAError):
    """An external service failed after the retry allowance."""


class QuotaExceeded(BackendFailure):
    """The provider signalled rate limiting (HTTP 429)."""


class TranscriptMiss(HopQAError):
    def __init__(self, key: str, endpoint: str = ""):
        self.key = key
        super().__init__(f"no transcript entry for {endpoint or 'request'} digest {key}")


class IoFailure(HopQAError):
    pass


class MalformedTable(HopQAError):
    pass


class MalformedInput(HopQAError):
    pass


class HopError(HopQAError):
    """Failure inside one reasoning hop; carries the 1-based hop index."""

    def __init__(self, index: int, cause: BaseException):
        self.index = index
        self.cause = cause
        super().__init__(f"hop {index} failed: {type(cause).__name__}: {cause}")
