"""lectio: a fully local interactive-lecture engine.

Subtitle files become a timestamped, embedded lecture index; pause-time
questions are answered by temporally biased semantic retrieval plus a
pluggable language-model backend; answers play back as sequentially scheduled,
progressively preloaded media segments.
"""

from .embedding import StubEmbedder, stub_embed
from .errors import LectioError
from .ingest import (
    LectureSegment,
    SegmentationConfig,
    SubtitleEntry,
    ingest_lecture,
    merge_entries,
    parse_srt,
    parse_timestamp,
)
from .retrieval import QueryContext, RetrievalConfig, ScoredSegment, retrieve
from .store import RagStore, build_store, load_store, save_store

__version__ = "0.1.0"

__all__ = [
    "LectioError",
    "LectureSegment",
    "QueryContext",
    "RagStore",
    "RetrievalConfig",
    "ScoredSegment",
    "SegmentationConfig",
    "StubEmbedder",
    "SubtitleEntry",
    "__version__",
    "build_store",
    "ingest_lecture",
    "load_store",
    "merge_entries",
    "parse_srt",
    "parse_timestamp",
    "retrieve",
    "save_store",
    "stub_embed",
]
