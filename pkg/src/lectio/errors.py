"""Exception hierarchy shared across the engine."""


class LectioError(Exception):
    """Base class for all engine errors."""


class SrtParseError(LectioError):
    """Raised for malformed SRT input (timestamps, cue structure)."""


class EmptyDocumentError(SrtParseError):
    """Raised when an SRT document yields zero parsable cues."""


class EmbeddingError(LectioError):
    """Raised when an embedder adapter fails or violates its contract."""


class IndexBuildError(LectioError):
    """Raised when index construction aborts; carries the failing segment id."""

    def __init__(self, message: str, segment_id: str | None = None):
        super().__init__(message)
        self.segment_id = segment_id


class DimensionMismatchError(LectioError):
    """Raised when a query vector does not match the index dimension."""


class StoreError(LectioError):
    """Raised when a persisted store is missing, corrupt, or inconsistent."""


class ConfigurationError(LectioError):
    """Raised for invalid engine configuration or adapter mismatches."""


class AudioFormatError(LectioError):
    """Raised when voice audio cannot be decoded as WAV."""


class SynthesisError(LectioError):
    """Raised when media synthesis for a response segment fails."""


class AdapterFailure(LectioError):
    """Raised when an external adapter fails mid-pipeline.

    ``stage`` names the pipeline stage ("asr", "retrieval", "llm", "tts",
    "avatar") so callers can surface where the turn broke down.
    """

    def __init__(self, stage: str, message: str):
        super().__init__(message)
        self.stage = stage
