"""Engine configuration: adapter selection and tunable defaults, TOML-backed.

Example config file:

    [retrieval]
    lambda = 0.1
    top_K = 20
    top_k = 4

    [avatar]
    lookahead = 2
    preload_count = 2
    workers = 2

    [session]
    ttl_seconds = 900

    [server]
    bind = "127.0.0.1"

    [adapters.embedder]
    kind = "stub"            # or "http"
    dimension = 384
    # url = "http://127.0.0.1:9090/embed"
    # name = "minilm-384"    # required for kind = "http"

    [adapters.llm]
    kind = "stub"
    # url = "http://127.0.0.1:9091/complete"

    [adapters.asr]
    kind = "stub"
    # url = "http://127.0.0.1:9092/transcribe"

    [adapters.synth]
    kind = "stub"
    # url = "http://127.0.0.1:9093/synthesize"
    # latency_hint = 4.0
"""

from __future__ import annotations

import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import NamedTuple

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from . import adapters as http_adapters
from .avatar import DEFAULT_LOOKAHEAD, DEFAULT_PRELOAD, DEFAULT_WORKERS, StubSynth
from .embedding import DEFAULT_DIMENSION, StubEmbedder
from .errors import ConfigurationError
from .qa import DEFAULT_MAX_ANSWER_CHARS, EchoLlm, StubAsr
from .retrieval import RetrievalConfig
from .sessions import DEFAULT_TTL_S

ADAPTER_ROLES = ("embedder", "llm", "asr", "synth")


@dataclass(frozen=True)
class AdapterSpec:
    kind: str = "stub"  # "stub" | "http"
    url: str | None = None
    name: str | None = None  # embedder only
    dimension: int = DEFAULT_DIMENSION  # embedder only
    latency_hint: float | None = None  # synth only
    serialize: bool = False  # queue calls instead of allowing concurrency

    def __post_init__(self):
        if self.kind not in ("stub", "http"):
            raise ConfigurationError(f"adapter kind must be 'stub' or 'http', got {self.kind!r}")
        if self.kind == "http" and not self.url:
            raise ConfigurationError("http adapters require a url")


@dataclass(frozen=True)
class EngineConfig:
    retrieval: RetrievalConfig = RetrievalConfig()
    lookahead: int = DEFAULT_LOOKAHEAD
    preload_count: int = DEFAULT_PRELOAD
    synth_workers: int = DEFAULT_WORKERS
    session_ttl_s: float = DEFAULT_TTL_S
    bind: str = "127.0.0.1"
    max_answer_chars: int = DEFAULT_MAX_ANSWER_CHARS
    media_root: str | None = None
    adapters: dict[str, AdapterSpec] = field(
        default_factory=lambda: {role: AdapterSpec() for role in ADAPTER_ROLES}
    )


class Adapters(NamedTuple):
    embedder: object
    llm: object
    asr: object
    synth: object


def load_config(path: str | Path | None) -> EngineConfig:
    """Load an EngineConfig from TOML; None yields pure defaults (all stubs)."""
    if path is None:
        return EngineConfig()
    raw = Path(path).read_bytes()
    try:
        doc = tomllib.loads(raw.decode("utf-8"))
    except tomllib.TOMLDecodeError as exc:
        raise ConfigurationError(f"{path}: invalid TOML: {exc}") from exc

    retrieval_doc = doc.get("retrieval", {})
    retrieval = RetrievalConfig(
        lambda_=float(retrieval_doc.get("lambda", RetrievalConfig().lambda_)),
        top_K=int(retrieval_doc.get("top_K", RetrievalConfig().top_K)),
        top_k=int(retrieval_doc.get("top_k", RetrievalConfig().top_k)),
    )
    avatar_doc = doc.get("avatar", {})
    session_doc = doc.get("session", {})
    server_doc = doc.get("server", {})

    specs: dict[str, AdapterSpec] = {}
    for role in ADAPTER_ROLES:
        spec_doc = doc.get("adapters", {}).get(role, {})
        specs[role] = AdapterSpec(
            kind=spec_doc.get("kind", "stub"),
            url=spec_doc.get("url"),
            name=spec_doc.get("name"),
            dimension=int(spec_doc.get("dimension", DEFAULT_DIMENSION)),
            latency_hint=spec_doc.get("latency_hint"),
            serialize=bool(spec_doc.get("serialize", False)),
        )

    return EngineConfig(
        retrieval=retrieval,
        lookahead=int(avatar_doc.get("lookahead", DEFAULT_LOOKAHEAD)),
        preload_count=int(avatar_doc.get("preload_count", DEFAULT_PRELOAD)),
        synth_workers=int(avatar_doc.get("workers", DEFAULT_WORKERS)),
        session_ttl_s=float(session_doc.get("ttl_seconds", DEFAULT_TTL_S)),
        bind=server_doc.get("bind", "127.0.0.1"),
        max_answer_chars=int(doc.get("llm", {}).get("max_answer_chars", DEFAULT_MAX_ANSWER_CHARS)),
        media_root=doc.get("media", {}).get("root"),
        adapters=specs,
    )


def build_adapters(cfg: EngineConfig, store_dimension: int | None = None) -> Adapters:
    """Instantiate the four adapters from their specs.

    For a stub embedder the dimension follows the store it will query (when
    known) so the adapter name matches the store metadata. Adapters that
    declare serialized access (or are configured for it) get their calls
    queued behind a single lock.
    """
    spec = cfg.adapters["embedder"]
    if spec.kind == "stub":
        embedder = StubEmbedder(store_dimension or spec.dimension)
    else:
        if not spec.name:
            raise ConfigurationError("http embedder requires a name matching the store metadata")
        embedder = http_adapters.HttpEmbedder(spec.url, spec.name, spec.dimension)
    embedder = http_adapters.maybe_serialize(embedder, force=spec.serialize)

    spec = cfg.adapters["llm"]
    llm = (EchoLlm(cfg.max_answer_chars) if spec.kind == "stub"
           else http_adapters.HttpLlm(spec.url, cfg.max_answer_chars))
    llm = http_adapters.maybe_serialize(llm, force=spec.serialize)

    spec = cfg.adapters["asr"]
    asr = StubAsr() if spec.kind == "stub" else http_adapters.HttpAsr(spec.url)
    asr = http_adapters.maybe_serialize(asr, force=spec.serialize)

    spec = cfg.adapters["synth"]
    synth = (StubSynth() if spec.kind == "stub"
             else http_adapters.HttpSynth(spec.url, latency_hint=spec.latency_hint))
    synth = http_adapters.maybe_serialize(synth, force=spec.serialize)

    return Adapters(embedder=embedder, llm=llm, asr=asr, synth=synth)
