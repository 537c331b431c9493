"""Exception hierarchy shared across the package."""

from __future__ import annotations


class DialplanError(Exception):
    """Base class for all package-level errors."""


class ParseError(DialplanError):
    """A serialized record or token sequence could not be parsed."""

    def __init__(self, message: str, line: int | None = None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class ValidationError(DialplanError):
    """A domain-type invariant was violated."""

    def __init__(self, message: str, sample_id: str | None = None):
        if sample_id is not None:
            message = f"sample {sample_id}: {message}"
        super().__init__(message)
        self.sample_id = sample_id


class NotRecommendable(DialplanError):
    """Raised when a dialogue contains no user-accepted recommendation topic.

    Callers filter such dialogues out of the corpus.
    """


class EnrichmentError(DialplanError):
    """Knowledge enrichment could not be performed (e.g. topic missing from graph)."""


class SplitError(DialplanError):
    """A train/dev/test split satisfying the OOD constraint does not exist."""


class ConfigError(DialplanError):
    """A configuration value is out of bounds or inconsistent."""
