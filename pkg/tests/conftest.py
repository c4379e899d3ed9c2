"""Shared fixtures: sample documents, store builders, WAV fixtures, service apps."""

from __future__ import annotations

import hashlib
import io
import wave
from pathlib import Path

import pytest

from lectio.config import EngineConfig
from lectio.embedding import StubEmbedder
from lectio.ingest import LectureSegment
from lectio.store import RagStore, build_store

SAMPLE_SRT = """1
00:00:00,000 --> 00:00:05,000
Hello and welcome to the lecture.

2
00:00:05,000 --> 00:00:12,000
X-ray imaging measures attenuation
along straight-line paths.

3
00:00:12,000 --> 00:00:25,000
Filtered backprojection applies a ramp filter before smearing projections back.
"""


@pytest.fixture
def sample_srt_path(tmp_path) -> Path:
    path = tmp_path / "lec01.srt"
    path.write_text(SAMPLE_SRT, encoding="utf-8")
    return path


def make_segments(spans: list[tuple[float, float, str]], lecture_id: str = "lec01",
                  start_ordinal: int = 0) -> list[LectureSegment]:
    return [
        LectureSegment(
            segment_id=f"{lecture_id}-{start_ordinal + i:04d}",
            lecture_id=lecture_id,
            start=start,
            end=end,
            text=text,
        )
        for i, (start, end, text) in enumerate(spans)
    ]


def make_store(spans: list[tuple[float, float, str]], lecture_id: str = "lec01",
               dimension: int = 64, max_span: float = 20.0) -> tuple[RagStore, StubEmbedder]:
    embedder = StubEmbedder(dimension)
    store = build_store(make_segments(spans, lecture_id), embedder, max_span=max_span)
    return store, embedder


def wav_bytes(samples: bytes, rate: int = 16000) -> bytes:
    buf = io.BytesIO()
    with wave.open(buf, "wb") as wav:
        wav.setnchannels(1)
        wav.setsampwidth(2)
        wav.setframerate(rate)
        wav.writeframes(samples)
    return buf.getvalue()


@pytest.fixture
def silence_wav() -> bytes:
    return wav_bytes(b"\x00\x00" * 16000)


@pytest.fixture
def spoken_wav() -> bytes:
    # Deterministic non-silent payload standing in for recorded speech.
    samples = bytes((i * 37) % 251 for i in range(32000))
    return wav_bytes(samples)


def dir_hash(root: Path) -> str:
    digest = hashlib.sha256()
    for path in sorted(p for p in root.rglob("*") if p.is_file()):
        digest.update(str(path.relative_to(root)).encode())
        digest.update(path.read_bytes())
    return digest.hexdigest()


@pytest.fixture
def engine_config(tmp_path) -> EngineConfig:
    return EngineConfig(media_root=str(tmp_path / "media"))
