"""Exact inner-product vector index over normalized segment embeddings."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .embedding import EmbedderContract, NORM_TOLERANCE
from .errors import DimensionMismatchError, IndexBuildError
from .ingest import LectureSegment

logger = logging.getLogger(__name__)

BATCH_SIZE = 64


@dataclass
class VectorIndex:
    """N x d matrix of float32 row vectors plus the aligned segment ids.

    The float32 matrix is canonical (it is what gets persisted); scoring uses
    a float64 working copy so rankings are stable at double precision.
    """

    matrix: np.ndarray
    row_ids: list[str]
    _matrix64: np.ndarray | None = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        if self.matrix.ndim != 2:
            raise ValueError(f"index matrix must be 2-D, got shape {self.matrix.shape}")
        if self.matrix.dtype != np.float32:
            raise ValueError(f"index matrix must be float32, got {self.matrix.dtype}")
        if self.matrix.shape[0] != len(self.row_ids):
            raise ValueError(
                f"row count {self.matrix.shape[0]} != id count {len(self.row_ids)}"
            )

    @property
    def size(self) -> int:
        return self.matrix.shape[0]

    @property
    def dimension(self) -> int:
        return self.matrix.shape[1]

    def matrix64(self) -> np.ndarray:
        if self._matrix64 is None:
            self._matrix64 = self.matrix.astype(np.float64)
        return self._matrix64


def build_index(
    segments: list[LectureSegment],
    embedder: EmbedderContract,
    batch_size: int = BATCH_SIZE,
) -> VectorIndex:
    """Embed segments in batches and assemble the index.

    Rows are checked to be unit-norm; an embedder failure aborts the build
    naming the first segment it failed on.
    """
    if not segments:
        raise IndexBuildError("cannot build an index from zero segments")
    rows: list[np.ndarray] = []
    for at in range(0, len(segments), batch_size):
        batch = segments[at : at + batch_size]
        try:
            vectors = embedder.embed_batch([s.text for s in batch])
        except Exception as exc:
            failing = _find_failing_segment(batch, embedder) or batch[0].segment_id
            raise IndexBuildError(
                f"embedder {embedder.name!r} failed on segment {failing}: {exc}",
                segment_id=failing,
            ) from exc
        if vectors.shape != (len(batch), embedder.dimension):
            raise IndexBuildError(
                f"embedder {embedder.name!r} returned shape {vectors.shape}, "
                f"expected {(len(batch), embedder.dimension)}",
                segment_id=batch[0].segment_id,
            )
        rows.append(np.asarray(vectors, dtype=np.float32))
    matrix = np.concatenate(rows, axis=0)
    norms = np.linalg.norm(matrix.astype(np.float64), axis=1)
    off = np.where(np.abs(norms - 1.0) > NORM_TOLERANCE)[0]
    if off.size:
        raise IndexBuildError(
            f"embedder {embedder.name!r} produced a non-normalized vector for "
            f"segment {segments[int(off[0])].segment_id} (norm {norms[int(off[0])]:.6f})",
            segment_id=segments[int(off[0])].segment_id,
        )
    return VectorIndex(matrix=matrix, row_ids=[s.segment_id for s in segments])


def _find_failing_segment(
    batch: list[LectureSegment], embedder: EmbedderContract
) -> str | None:
    for seg in batch:
        try:
            embedder.embed(seg.text)
        except Exception:
            return seg.segment_id
    return None


def search_top_k(index: VectorIndex, query: np.ndarray, k: int) -> list[tuple[str, float]]:
    """Exact top-k by inner product, descending; ties broken by ascending id.

    Returns min(k, N) (segment_id, score) pairs. Scores are full-scan inner
    products computed at double precision.
    """
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    q = np.asarray(query, dtype=np.float64).reshape(-1)
    if q.shape[0] != index.dimension:
        raise DimensionMismatchError(
            f"query dimension {q.shape[0]} != index dimension {index.dimension}"
        )
    if index.size == 0:
        return []
    scores = index.matrix64() @ q
    ids = np.asarray(index.row_ids)
    # lexsort uses the last key as primary: score descending, then id ascending.
    order = np.lexsort((ids, -scores))[: min(k, index.size)]
    return [(index.row_ids[i], float(scores[i])) for i in order]
