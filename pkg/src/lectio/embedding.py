"""Embedder contract and the deterministic built-in stub embedder."""

from __future__ import annotations

import hashlib
from typing import Protocol, runtime_checkable

import numpy as np

DEFAULT_DIMENSION = 384
MIN_DIMENSION = 8
NORM_TOLERANCE = 1e-5


@runtime_checkable
class EmbedderContract(Protocol):
    """Text-to-vector adapter: deterministic, fixed dimension, batch capable."""

    name: str
    dimension: int

    def embed(self, text: str) -> np.ndarray: ...

    def embed_batch(self, texts: list[str]) -> np.ndarray: ...


def normalize(vec: np.ndarray) -> np.ndarray:
    """Return vec scaled to unit Euclidean norm as float32.

    The all-zero vector is returned unchanged (degenerate case; callers that
    need strict normalization should reject it).
    """
    arr = np.asarray(vec, dtype=np.float64)
    norm = float(np.linalg.norm(arr))
    if norm == 0.0:
        return arr.astype(np.float32)
    return (arr / norm).astype(np.float32)


def _text_key(text: str) -> str:
    return " ".join(text.lower().split())


def stub_embed(text: str, dimension: int = DEFAULT_DIMENSION) -> np.ndarray:
    """Deterministic pseudo-embedding for tests and benchmarks.

    The lowercased, whitespace-normalized text is hashed with BLAKE2b to a
    64-bit seed for a PCG64 generator; the vector is a normalized draw of
    standard Gaussians. Identical text yields bitwise-identical vectors on
    every platform.
    """
    if dimension < MIN_DIMENSION:
        raise ValueError(f"dimension must be >= {MIN_DIMENSION}, got {dimension}")
    key = _text_key(text).encode("utf-8")
    seed = int.from_bytes(hashlib.blake2b(key, digest_size=8).digest(), "big")
    rng = np.random.Generator(np.random.PCG64(seed))
    return normalize(rng.standard_normal(dimension))


class StubEmbedder:
    """Built-in embedder backed by stub_embed; no model, no I/O."""

    def __init__(self, dimension: int = DEFAULT_DIMENSION):
        if dimension < MIN_DIMENSION:
            raise ValueError(f"dimension must be >= {MIN_DIMENSION}, got {dimension}")
        self.dimension = dimension
        self.name = f"stub-{dimension}"

    def embed(self, text: str) -> np.ndarray:
        return stub_embed(text, self.dimension)

    def embed_batch(self, texts: list[str]) -> np.ndarray:
        if not texts:
            return np.zeros((0, self.dimension), dtype=np.float32)
        return np.stack([self.embed(t) for t in texts])
