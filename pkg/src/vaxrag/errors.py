"""Exception types shared across the package."""


class VaxragError(Exception):
    """Base class for all package errors."""


# --- corpus ---------------------------------------------------------------

class MalformedJsonError(VaxragError):
    """Input line is not a single JSON object."""


class MissingFieldError(VaxragError):
    def __init__(self, field: str):
        super().__init__(f"missing required field: {field}")
        self.field = field


class BadTimestampError(VaxragError):
    """Timestamp is not parseable ISO-8601."""


# --- vector store ---------------------------------------------------------

class DimensionMismatchError(VaxragError):
    """Vector length differs from the configured dimension."""


class ZeroVectorError(VaxragError):
    """Cosine similarity is undefined for zero vectors."""


class UnknownCollectionError(VaxragError):
    """Collection name is not one of the configured collections."""


class UnknownDocIdError(VaxragError):
    """Document id not present where required."""


class CorruptSnapshotError(VaxragError):
    """Snapshot file failed checksum or structural validation."""


# --- embedder / LLM providers ----------------------------------------------

class EmptyTextError(VaxragError):
    """Embedding input must be nonempty."""


class RemoteUnavailableError(VaxragError):
    """Remote embedding service could not be reached."""


class RemoteBadDimensionError(VaxragError):
    """Remote embedding service returned vectors of the wrong dimension."""


class ProviderUnavailableError(VaxragError):
    """Chat-completion provider could not be reached or script exhausted."""


class SchemaError(VaxragError):
    """Structured LLM output failed validation after all repair retries."""

    def __init__(self, message: str, raw: str = ""):
        super().__init__(message)
        self.raw = raw


# --- analytics --------------------------------------------------------------

class EmptyCorpusError(VaxragError):
    """Operation requires at least one document."""


class EmptyDocError(VaxragError):
    """A document became empty after vocabulary filtering."""


class KTooLargeError(VaxragError):
    """Requested more topics than vocabulary terms."""
