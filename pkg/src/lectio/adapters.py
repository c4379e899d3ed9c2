"""HTTP adapters for locally hosted model servers (embedder, LLM, ASR, synth).

All adapters speak JSON over loopback HTTP to whatever local inference server
the operator runs; each also supports a cheap reachability probe for the
health endpoint. Stub counterparts live next to the contracts they implement
(embedding.StubEmbedder, qa.EchoLlm, qa.StubAsr, avatar.StubSynth).
"""

from __future__ import annotations

import logging
import threading

import numpy as np
import requests

from .avatar import SynthResult
from .embedding import MIN_DIMENSION, normalize
from .errors import AdapterFailure, SynthesisError
from .qa import TranscriptionResult

logger = logging.getLogger(__name__)

DEFAULT_TIMEOUT_S = 30.0
PROBE_TIMEOUT_S = 2.0


def probe_url(url: str) -> bool:
    """True if the adapter endpoint is reachable (any HTTP response counts)."""
    try:
        requests.head(url, timeout=PROBE_TIMEOUT_S)
        return True
    except requests.RequestException:
        return False


class SerializedAdapter:
    """Queues all calls to an adapter that cannot tolerate concurrency.

    Adapters declare `serialize_access = True` (or are forced by config) and
    the engine funnels every invocation through one lock; attribute reads
    pass straight through.
    """

    _WRAPPED = frozenset(
        {"embed", "embed_batch", "complete", "transcribe", "synthesize",
         "latency_estimate", "probe"}
    )

    def __init__(self, adapter):
        self._adapter = adapter
        self._lock = threading.Lock()

    def __getattr__(self, name):
        value = getattr(self._adapter, name)
        if name in self._WRAPPED and callable(value):
            def locked(*args, **kwargs):
                with self._lock:
                    return value(*args, **kwargs)

            return locked
        return value


def maybe_serialize(adapter, force: bool = False):
    if force or getattr(adapter, "serialize_access", False):
        return SerializedAdapter(adapter)
    return adapter


class HttpEmbedder:
    """POST {"texts": [...]} -> {"vectors": [[...], ...]}.

    Vectors are re-normalized defensively; the configured name must match the
    name recorded in the store this embedder queries against.
    """

    def __init__(self, url: str, name: str, dimension: int,
                 timeout_s: float = DEFAULT_TIMEOUT_S):
        if dimension < MIN_DIMENSION:
            raise ValueError(f"dimension must be >= {MIN_DIMENSION}, got {dimension}")
        self.url = url
        self.name = name
        self.dimension = dimension
        self.timeout_s = timeout_s

    def embed(self, text: str) -> np.ndarray:
        return self.embed_batch([text])[0]

    def embed_batch(self, texts: list[str]) -> np.ndarray:
        if not texts:
            return np.zeros((0, self.dimension), dtype=np.float32)
        try:
            resp = requests.post(self.url, json={"texts": texts}, timeout=self.timeout_s)
            resp.raise_for_status()
            vectors = resp.json()["vectors"]
        except (requests.RequestException, KeyError, ValueError) as exc:
            raise AdapterFailure("retrieval", f"embedder endpoint failed: {exc}") from exc
        matrix = np.asarray(vectors, dtype=np.float32)
        if matrix.shape != (len(texts), self.dimension):
            raise AdapterFailure(
                "retrieval",
                f"embedder returned shape {matrix.shape}, expected "
                f"{(len(texts), self.dimension)}",
            )
        return np.stack([normalize(row) for row in matrix])

    def probe(self) -> bool:
        return probe_url(self.url)


class HttpLlm:
    """POST {"prompt": "..."} -> {"text": "..."}."""

    def __init__(self, url: str, max_answer_chars: int = 2000,
                 timeout_s: float = DEFAULT_TIMEOUT_S):
        self.url = url
        self.max_answer_chars = max_answer_chars
        self.timeout_s = timeout_s

    def complete(self, prompt: str) -> str:
        try:
            resp = requests.post(self.url, json={"prompt": prompt}, timeout=self.timeout_s)
            resp.raise_for_status()
            text = resp.json()["text"]
        except (requests.RequestException, KeyError, ValueError) as exc:
            raise AdapterFailure("llm", f"language model endpoint failed: {exc}") from exc
        return text[: self.max_answer_chars]

    def probe(self) -> bool:
        return probe_url(self.url)


class HttpAsr:
    """POST multipart WAV -> {"text": "...", "confident": true}."""

    def __init__(self, url: str, timeout_s: float = DEFAULT_TIMEOUT_S):
        self.url = url
        self.timeout_s = timeout_s

    def transcribe(self, audio: bytes) -> TranscriptionResult:
        try:
            resp = requests.post(
                self.url,
                files={"audio": ("query.wav", audio, "audio/wav")},
                timeout=self.timeout_s,
            )
            resp.raise_for_status()
            body = resp.json()
            return TranscriptionResult(
                text=str(body.get("text", "")),
                confident=bool(body.get("confident", False)),
            )
        except (requests.RequestException, ValueError) as exc:
            raise AdapterFailure("asr", f"transcription endpoint failed: {exc}") from exc

    def probe(self) -> bool:
        return probe_url(self.url)


class HttpSynth:
    """POST {"text": "..."} -> {"media_url": "...", "duration": s}; fetches the media."""

    def __init__(self, url: str, latency_hint: float | None = None,
                 timeout_s: float = DEFAULT_TIMEOUT_S):
        self.url = url
        self.declared_latency_hint = latency_hint
        self.timeout_s = timeout_s

    def latency_estimate(self, text: str) -> float:
        return self.declared_latency_hint or 0.0

    def synthesize(self, text: str) -> SynthResult:
        try:
            resp = requests.post(self.url, json={"text": text}, timeout=self.timeout_s)
            resp.raise_for_status()
            body = resp.json()
            media = requests.get(body["media_url"], timeout=self.timeout_s)
            media.raise_for_status()
            return SynthResult(payload=media.content, duration_s=float(body["duration"]))
        except (requests.RequestException, KeyError, ValueError) as exc:
            raise SynthesisError(f"synthesis endpoint failed: {exc}") from exc

    def probe(self) -> bool:
        return probe_url(self.url)
