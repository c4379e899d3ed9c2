"""Pause-aware retrieval: semantic top-K search followed by temporal rescoring.

Semantic candidates are fetched by exact inner-product search, then each
candidate's score is reduced by a penalty proportional to how far (in minutes)
its midpoint lies from the pause time:

    adjusted = semantic - lambda * |midpoint - pause_time| / 60

The top-k candidates ranked by adjusted score become the answer evidence.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, replace

from .embedding import EmbedderContract
from .errors import ConfigurationError
from .index import search_top_k
from .ingest import LectureSegment
from .store import RagStore

logger = logging.getLogger(__name__)

DEFAULT_LAMBDA = 0.1
DEFAULT_TOP_K_CANDIDATES = 20
DEFAULT_TOP_K_FINAL = 4


@dataclass(frozen=True)
class RetrievalConfig:
    """Knobs of the rescoring pipeline.

    lambda_ is the score penalty per minute of distance from the pause time;
    top_K is the semantic candidate count, top_k the final evidence count.
    """

    lambda_: float = DEFAULT_LAMBDA
    top_K: int = DEFAULT_TOP_K_CANDIDATES
    top_k: int = DEFAULT_TOP_K_FINAL

    def __post_init__(self):
        if self.lambda_ < 0:
            raise ValueError(f"lambda must be non-negative, got {self.lambda_}")
        if self.top_K < 1 or self.top_k < 1:
            raise ValueError("top_K and top_k must be >= 1")
        if self.top_k > self.top_K:
            raise ValueError(f"top_k ({self.top_k}) must not exceed top_K ({self.top_K})")

    def override(self, **changes) -> "RetrievalConfig":
        return replace(self, **{k: v for k, v in changes.items() if v is not None})


@dataclass(frozen=True)
class QueryContext:
    """A student question anchored at the lecture-timeline pause position."""

    question: str
    pause_time: float
    lecture_id: str | None = None

    def __post_init__(self):
        if not self.question.strip():
            raise ValueError("question must be non-empty")
        if self.pause_time < 0:
            raise ValueError(f"pause_time must be non-negative, got {self.pause_time}")


@dataclass(frozen=True)
class ScoredSegment:
    segment: LectureSegment
    semantic_score: float
    adjusted_score: float
    midpoint: float


def midpoint(segment: LectureSegment) -> float:
    return (segment.start + segment.end) / 2.0


def temporal_penalty(mid: float, pause_time: float, lambda_: float) -> float:
    """Penalty subtracted from the semantic score; distance measured in minutes."""
    return lambda_ * abs(mid - pause_time) / 60.0


def temporal_rescore(
    candidates: list[tuple[LectureSegment, float]],
    pause_time: float,
    lambda_: float,
) -> list[ScoredSegment]:
    """Apply the temporal adjustment and sort by adjusted score descending.

    Ties fall back to higher semantic score, then ascending segment id.
    """
    if pause_time < 0:
        raise ValueError(f"pause_time must be non-negative, got {pause_time}")
    if lambda_ < 0:
        raise ValueError(f"lambda must be non-negative, got {lambda_}")
    scored = []
    for segment, semantic in candidates:
        mid = midpoint(segment)
        scored.append(
            ScoredSegment(
                segment=segment,
                semantic_score=semantic,
                adjusted_score=semantic - temporal_penalty(mid, pause_time, lambda_),
                midpoint=mid,
            )
        )
    scored.sort(key=lambda s: (-s.adjusted_score, -s.semantic_score, s.segment.segment_id))
    return scored


def retrieve(
    store: RagStore,
    embedder: EmbedderContract,
    ctx: QueryContext,
    cfg: RetrievalConfig = RetrievalConfig(),
) -> list[ScoredSegment]:
    """Embed the question, search top-K, rescore temporally, return top-k.

    The embedder must match the one recorded in the store metadata; rescoring
    is applied only to the semantic candidate set, and the optional lecture
    filter runs after search, before rescoring.
    """
    if embedder.name != store.metadata.embedder_name:
        raise ConfigurationError(
            f"embedder {embedder.name!r} does not match store embedder "
            f"{store.metadata.embedder_name!r}"
        )
    if store.size == 0:
        logger.warning("retrieve called on an empty store; returning no results")
        return []
    query = embedder.embed(ctx.question)
    hits = search_top_k(store.index, query, cfg.top_K)
    if ctx.lecture_id is not None:
        hits = [(sid, score) for sid, score in hits
                if store.segment(sid).lecture_id == ctx.lecture_id]
    candidates = [(store.segment(sid), score) for sid, score in hits]
    rescored = temporal_rescore(candidates, ctx.pause_time, cfg.lambda_)
    return rescored[: cfg.top_k]
