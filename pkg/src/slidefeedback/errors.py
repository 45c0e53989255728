"""Exception types shared across the service."""

from __future__ import annotations


class SlideFeedbackError(Exception):
    """Base class for all errors raised by this package."""


class ContractViolation(SlideFeedbackError):
    """A caller violated an operation precondition (programming error)."""


class ValidationError(SlideFeedbackError):
    """Input data failed domain validation."""


class ConflictError(SlideFeedbackError):
    """An identifier is already taken."""


class NotFoundError(SlideFeedbackError):
    """A referenced entity does not exist."""


class ConfigurationError(SlideFeedbackError):
    """The service configuration is incomplete or inconsistent."""


class EmptyIndexError(SlideFeedbackError):
    """A similarity query was issued against an index with no entries."""


class ProviderError(SlideFeedbackError):
    """A model-provider call failed; safe to retry."""

    def __init__(self, message: str, retryable: bool = True):
        super().__init__(message)
        self.retryable = retryable


class DegenerateInputError(SlideFeedbackError):
    """Provider input was degenerate (e.g. empty text for embedding)."""


class IngestError(SlideFeedbackError):
    """A deck or question could not be (fully) ingested."""


class PageIngestError(IngestError):
    """One page of a deck failed to ingest."""

    def __init__(self, page_index: int, reason: str):
        super().__init__(f"page {page_index}: {reason}")
        self.page_index = page_index
        self.reason = reason


class PartialIngestError(IngestError):
    """Some pages of a deck failed; the rest were persisted."""

    def __init__(self, deck_id: str, failures: list[PageIngestError]):
        indices = ", ".join(str(f.page_index) for f in failures)
        super().__init__(f"deck {deck_id!r}: pages [{indices}] failed to ingest")
        self.deck_id = deck_id
        self.failures = failures


class FeedbackError(SlideFeedbackError):
    """Base for structured-feedback parsing failures (each signals a retry)."""


class ParseError(FeedbackError):
    """Provider response body was not well-formed JSON of the expected shape."""


class SchemaError(FeedbackError):
    """The structured fragment violated the tag schema."""


class DomainError(FeedbackError):
    """A parsed value was outside its domain (e.g. score 2 for an MCQ)."""


class GenerationFailed(SlideFeedbackError):
    """All generation attempts produced invalid responses."""

    def __init__(self, message: str, attempts: int):
        super().__init__(message)
        self.attempts = attempts


class NoSlideError(SlideFeedbackError):
    """Narration was requested for a submission without a slide reference."""


class NarrationStreamError(SlideFeedbackError):
    """The narration provider stream failed mid-session."""


class DegenerateDataError(SlideFeedbackError):
    """A statistic is undefined for the given data."""


class DesignError(DegenerateDataError):
    """A model design matrix is singular (e.g. only one condition present)."""
