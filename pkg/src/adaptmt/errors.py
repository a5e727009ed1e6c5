"""Typed errors shared across the package.

Every error carries a stable ``code`` string so the HTTP layer and the CLI
can map failures to machine-readable diagnostics without string matching.
"""

from __future__ import annotations


class AdaptMtError(Exception):
    """Base class for all domain errors."""

    code = "error"

    def __init__(self, message: str = ""):
        super().__init__(message or self.__class__.__name__)
        self.message = message or self.__class__.__name__


class EmptySide(AdaptMtError):
    code = "empty_side"


class SameLanguage(AdaptMtError):
    code = "same_language"


class LanguageMismatch(AdaptMtError):
    code = "language_mismatch"


class NoValidRecords(AdaptMtError):
    code = "no_valid_records"


class DimensionMismatch(AdaptMtError):
    code = "dimension_mismatch"


class ZeroVector(AdaptMtError):
    code = "zero_vector"


class ProviderUnavailable(AdaptMtError):
    code = "provider_unavailable"


class TooFewVectors(AdaptMtError):
    code = "too_few_vectors"


class NotTrained(AdaptMtError):
    code = "not_trained"


class DuplicateId(AdaptMtError):
    code = "duplicate_id"


class SnapshotFormatError(AdaptMtError):
    code = "snapshot_format"


class IndexStale(AdaptMtError):
    code = "index_stale"


class EmptyTm(AdaptMtError):
    code = "empty_tm"


class BadEdges(AdaptMtError):
    code = "bad_edges"


class MissingSlot(AdaptMtError):
    code = "missing_slot"


class EmptyMatches(AdaptMtError):
    code = "empty_matches"


class EmptyTerms(AdaptMtError):
    code = "empty_terms"


class NoTermsParsed(AdaptMtError):
    code = "no_terms_parsed"


class InconsistentCounts(AdaptMtError):
    code = "inconsistent_counts"


class SamplerFailure(AdaptMtError):
    code = "sampler_failure"

    def __init__(self, message: str = "", run: int | None = None):
        super().__init__(message)
        self.run = run


class EmptyInput(AdaptMtError):
    code = "empty_input"


class EmptyBatch(AdaptMtError):
    code = "empty_batch"


class EmptyDataset(AdaptMtError):
    code = "empty_dataset"


class NegativeInput(AdaptMtError):
    code = "negative_input"


class BackendError(AdaptMtError):
    code = "backend_error"


class CompletionError(AdaptMtError):
    """Raised when some prompts in a batch still failed after retries.

    ``completed`` maps prompt index to completion text, ``failed`` maps
    prompt index to the error message of its sub-batch.
    """

    code = "completion_error"

    def __init__(self, completed: dict[int, str], failed: dict[int, str]):
        super().__init__(f"{len(failed)} of {len(completed) + len(failed)} prompts failed")
        self.completed = completed
        self.failed = failed


class PartialBatch(AdaptMtError):
    """Some generation prompts failed; successes are preserved on the error."""

    code = "partial_batch"

    def __init__(self, successes, failures):
        super().__init__(f"{len(failures)} prompts failed, {len(successes)} succeeded")
        self.successes = successes
        self.failures = failures


class ConfigError(AdaptMtError):
    code = "config_error"
