"""Persisted retrieval store: vectors, segment records, and configuration metadata.

Directory layout (format_version 1):
  vectors.f32   row-major little-endian float32, N*d values
  segments.jsonl  one JSON record per line, in index row order
  meta.json     StoreMetadata fields
"""

from __future__ import annotations

import json
import logging
from dataclasses import asdict, dataclass
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from .embedding import EmbedderContract
from .errors import StoreError
from .index import VectorIndex, build_index
from .ingest import LectureSegment

logger = logging.getLogger(__name__)

FORMAT_VERSION = 1
VECTORS_FILE = "vectors.f32"
SEGMENTS_FILE = "segments.jsonl"
META_FILE = "meta.json"


@dataclass(frozen=True)
class StoreMetadata:
    embedder_name: str
    dimension: int
    max_span: float
    created_at: str  # UTC ISO 8601
    lecture_ids: list[str]
    format_version: int = FORMAT_VERSION


@dataclass
class RagStore:
    """Immutable-after-load bundle of index, segment records, and metadata."""

    index: VectorIndex
    segments: dict[str, LectureSegment]
    metadata: StoreMetadata

    def __post_init__(self):
        if len(self.segments) != len(self.index.row_ids):
            raise StoreError(
                f"segment count {len(self.segments)} != index row count "
                f"{len(self.index.row_ids)}"
            )
        for segment_id in self.index.row_ids:
            if segment_id not in self.segments:
                raise StoreError(f"index row {segment_id!r} has no segment record")
        if self.metadata.dimension != self.index.dimension and self.index.size > 0:
            raise StoreError(
                f"metadata dimension {self.metadata.dimension} != index dimension "
                f"{self.index.dimension}"
            )

    @property
    def size(self) -> int:
        return self.index.size

    def segment(self, segment_id: str) -> LectureSegment:
        return self.segments[segment_id]

    def lecture_segments(self, lecture_id: str) -> list[LectureSegment]:
        return [s for s in self.segments.values() if s.lecture_id == lecture_id]


def utc_now_iso() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


def build_store(
    segments: list[LectureSegment],
    embedder: EmbedderContract,
    max_span: float,
    created_at: str | None = None,
) -> RagStore:
    """Embed segments and assemble a store ready for persistence."""
    index = build_index(segments, embedder)
    by_id: dict[str, LectureSegment] = {}
    for seg in segments:
        if seg.segment_id in by_id:
            raise StoreError(f"duplicate segment id {seg.segment_id!r}")
        by_id[seg.segment_id] = seg
    metadata = StoreMetadata(
        embedder_name=embedder.name,
        dimension=embedder.dimension,
        max_span=max_span,
        created_at=created_at or utc_now_iso(),
        lecture_ids=sorted({s.lecture_id for s in segments}),
    )
    return RagStore(index=index, segments=by_id, metadata=metadata)


def save_store(store: RagStore, directory: str | Path) -> Path:
    """Write the store to a directory; returns the directory path."""
    out = Path(directory)
    out.mkdir(parents=True, exist_ok=True)
    (out / VECTORS_FILE).write_bytes(
        np.ascontiguousarray(store.index.matrix, dtype="<f4").tobytes()
    )
    with (out / SEGMENTS_FILE).open("w", encoding="utf-8") as fh:
        for segment_id in store.index.row_ids:
            seg = store.segments[segment_id]
            fh.write(
                json.dumps(
                    {
                        "segment_id": seg.segment_id,
                        "lecture_id": seg.lecture_id,
                        "start": seg.start,
                        "end": seg.end,
                        "text": seg.text,
                    },
                    ensure_ascii=False,
                )
                + "\n"
            )
    (out / META_FILE).write_text(
        json.dumps(asdict(store.metadata), indent=2, ensure_ascii=False) + "\n",
        encoding="utf-8",
    )
    logger.info("saved store with %d segments to %s", store.size, out)
    return out


def load_store(directory: str | Path) -> RagStore:
    """Load a store, validating every structural invariant along the way."""
    root = Path(directory)
    for name in (VECTORS_FILE, SEGMENTS_FILE, META_FILE):
        if not (root / name).is_file():
            raise StoreError(f"store at {root} is missing {name}")

    try:
        raw_meta = json.loads((root / META_FILE).read_text(encoding="utf-8"))
        metadata = StoreMetadata(**raw_meta)
    except (json.JSONDecodeError, TypeError) as exc:
        raise StoreError(f"store at {root}: unreadable metadata: {exc}") from exc
    if metadata.format_version != FORMAT_VERSION:
        raise StoreError(
            f"store at {root}: format_version {metadata.format_version} "
            f"not supported (expected {FORMAT_VERSION})"
        )

    row_ids: list[str] = []
    segments: dict[str, LectureSegment] = {}
    with (root / SEGMENTS_FILE).open("r", encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                rec = json.loads(line)
                seg = LectureSegment(
                    segment_id=rec["segment_id"],
                    lecture_id=rec["lecture_id"],
                    start=float(rec["start"]),
                    end=float(rec["end"]),
                    text=rec["text"],
                )
            except (json.JSONDecodeError, KeyError, ValueError) as exc:
                raise StoreError(
                    f"store at {root}: bad segment record on line {line_no}: {exc}"
                ) from exc
            if seg.segment_id in segments:
                raise StoreError(
                    f"store at {root}: duplicate segment id {seg.segment_id!r}"
                )
            segments[seg.segment_id] = seg
            row_ids.append(seg.segment_id)

    data = (root / VECTORS_FILE).read_bytes()
    if len(data) % 4 != 0:
        raise StoreError(f"store at {root}: vectors file length {len(data)} not float32-aligned")
    values = np.frombuffer(data, dtype="<f4")
    n, d = len(row_ids), metadata.dimension
    if values.size != n * d:
        raise StoreError(
            f"store at {root}: vectors file holds {values.size} values, "
            f"expected {n} rows x {d} dims = {n * d}"
        )
    matrix = values.reshape(n, d).astype(np.float32)
    return RagStore(
        index=VectorIndex(matrix=matrix, row_ids=row_ids),
        segments=segments,
        metadata=metadata,
    )
