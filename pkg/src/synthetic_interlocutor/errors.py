"""Exception types shared across the engine."""


class SiError(Exception):
    """Base class for all engine errors."""


# --- ingestion ---

class IoError(SiError):
    """Source file could not be read."""


class EncodingError(SiError):
    """Source file is not valid UTF-8."""


class EmptyDocument(SiError):
    """Source file contains nothing but whitespace."""


class InvalidConfig(SiError):
    """Chunking or service configuration violates its invariants."""


class IngestFailed(SiError):
    """Corpus ingestion failed; carries the per-file error list."""

    def __init__(self, message: str, file_errors: list[tuple[str, str]] | None = None):
        super().__init__(message)
        self.file_errors = file_errors or []


# --- embedding ---

class EmbedderUnavailable(SiError):
    """Embedding provider unreachable after retries."""


class DimMismatch(SiError):
    """Vector dimensionality inconsistent with the index or batch."""


class ProviderError(SiError):
    """Provider returned a non-retryable error response."""

    def __init__(self, message: str, status_code: int | None = None, body: str | None = None):
        super().__init__(message)
        self.status_code = status_code
        self.body = body


# --- vector index ---

class DuplicateId(SiError):
    """Two index entries share a chunk id."""


class NormViolation(SiError):
    """Vector norm outside the accepted tolerance around 1."""


class CorruptFile(SiError):
    """Persisted index file has bad magic, version, or length."""


class ChecksumMismatch(SiError):
    """Persisted index file fails its CRC32 check."""


# --- prompt ---

class MissingSlot(SiError):
    """Prompt template lacks a required slot or marker."""


class EmptyQuestion(SiError):
    """A prompt or turn was requested for an empty question."""


# --- generation / sessions ---

class LlmUnavailable(SiError):
    """Generation provider produced no tokens."""


class SessionClosed(SiError):
    """Message posted to a closed session."""


class SessionNotFound(SiError):
    """Unknown session id."""


class CorpusNotFound(SiError):
    """Unknown corpus id."""


class CorruptCorpus(SiError):
    """Corpus directory failed to load."""
