"""Error types shared across the package.

Every error carries a stable machine-readable ``code`` so the HTTP layer
can map exceptions onto API error payloads one-to-one.
"""


class CalsumError(Exception):
    """Base class for all package errors."""

    code = "internal_error"

    def __init__(self, message: str = ""):
        super().__init__(message or self.__class__.__name__)
        self.message = message or self.__class__.__name__


# ingestion
class UnsupportedFormat(CalsumError):
    code = "unsupported_format"


class ExtractionFailed(CalsumError):
    code = "extraction_failed"


class EmptyDocument(CalsumError):
    code = "empty_document"


# embeddings
class EmptyCorpus(CalsumError):
    code = "empty_corpus"


class ProviderUnavailable(CalsumError):
    code = "provider_unavailable"


class DimensionMismatch(CalsumError):
    code = "dimension_mismatch"


# active learning
class SingleClass(CalsumError):
    code = "single_class"


class Exhausted(CalsumError):
    code = "exhausted"


class UnknownSentence(CalsumError):
    code = "unknown_sentence"


class DuplicateInBatch(CalsumError):
    code = "duplicate_in_batch"


# metrics
class NothingShown(CalsumError):
    code = "nothing_shown"


class SupportMismatch(CalsumError):
    code = "support_mismatch"


class WrongItemCount(CalsumError):
    code = "wrong_item_count"


class ResponseOutOfRange(CalsumError):
    code = "response_out_of_range"


class NoRelevantGold(CalsumError):
    code = "no_relevant_gold"


# persistence
class MalformedInput(CalsumError):
    code = "malformed_input"


class UnsupportedVersion(CalsumError):
    code = "unsupported_version"


class InvariantViolation(CalsumError):
    code = "invariant_violation"


# service
class SessionNotFound(CalsumError):
    code = "session_not_found"


class TooManyDocuments(CalsumError):
    code = "too_many_documents"


class NotProcessed(CalsumError):
    code = "not_processed"
