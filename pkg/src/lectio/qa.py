"""Question-answer turn orchestration: prompts, adapter contracts, stubs.

Voice and text queries converge to the same path: retrieve evidence, render
the grounded prompt, call the language-model adapter. Nothing in this module
writes durable state; a turn leaves the engine byte-identical to before.
"""

from __future__ import annotations

import hashlib
import io
import logging
import time
import wave
from dataclasses import dataclass
from typing import NamedTuple, Protocol, runtime_checkable

from .embedding import EmbedderContract
from .errors import AdapterFailure, AudioFormatError
from .retrieval import QueryContext, RetrievalConfig, ScoredSegment, retrieve
from .store import RagStore

logger = logging.getLogger(__name__)

# Versioned prompt template; golden tests pin this wording.
PROMPT_VERSION = 1
SYSTEM_INSTRUCTION = (
    "You are a teaching assistant for this lecture. Answer only from the "
    "lecture excerpts below; if the excerpts are insufficient, say so."
)
NO_EXCERPTS_MARKER = "(no lecture excerpts available)"

DEFAULT_MAX_ANSWER_CHARS = 2000


class TranscriptionResult(NamedTuple):
    text: str
    confident: bool


@runtime_checkable
class AsrContract(Protocol):
    """Speech-to-text adapter over WAV bytes (16 kHz mono PCM)."""

    def transcribe(self, audio: bytes) -> TranscriptionResult: ...


@runtime_checkable
class LlmContract(Protocol):
    """Prompt-to-answer adapter; must return a non-empty answer or refusal."""

    max_answer_chars: int

    def complete(self, prompt: str) -> str: ...


@dataclass(frozen=True)
class PromptBundle:
    system_instruction: str
    evidence: list[tuple[str, float, float, str]]  # (segment_id, start, end, text)
    question: str
    rendered: str


@dataclass(frozen=True)
class Answer:
    text: str
    evidence_ids: list[str]
    timings: dict[str, float]


def format_mmss(seconds: float) -> str:
    total = int(seconds)
    return f"{total // 60:02d}:{total % 60:02d}"


def build_prompt(retrieved: list[ScoredSegment], question: str) -> PromptBundle:
    """Render the fixed grounded-answer template.

    Each excerpt is prefixed with its lecture-timeline span as [mm:ss–mm:ss],
    in retrieval order; with no excerpts the template carries an explicit
    marker so the model can refuse gracefully.
    """
    if not question.strip():
        raise ValueError("question must be non-empty")
    evidence = [
        (s.segment.segment_id, s.segment.start, s.segment.end, s.segment.text)
        for s in retrieved
    ]
    lines = [SYSTEM_INSTRUCTION, "", "Lecture excerpts:"]
    if evidence:
        for _, start, end, text in evidence:
            lines.append(f"[{format_mmss(start)}–{format_mmss(end)}] {text}")
    else:
        lines.append(NO_EXCERPTS_MARKER)
    lines.append("")
    lines.append(f"Question: {question}")
    return PromptBundle(
        system_instruction=SYSTEM_INSTRUCTION,
        evidence=evidence,
        question=question,
        rendered="\n".join(lines),
    )


def answer_question_detailed(
    store: RagStore,
    embedder: EmbedderContract,
    llm: LlmContract,
    ctx: QueryContext,
    cfg: RetrievalConfig = RetrievalConfig(),
) -> tuple[Answer, list[ScoredSegment]]:
    """One full turn, also returning the scored evidence for transparency.

    Per-stage durations are recorded; an adapter failure is surfaced as
    AdapterFailure tagged with the stage that broke.
    """
    t0 = time.perf_counter()
    retrieved = retrieve(store, embedder, ctx, cfg)
    retrieval_s = time.perf_counter() - t0

    bundle = build_prompt(retrieved, ctx.question)
    t1 = time.perf_counter()
    try:
        text = llm.complete(bundle.rendered)
    except AdapterFailure:
        raise
    except Exception as exc:
        raise AdapterFailure("llm", f"language model call failed: {exc}") from exc
    llm_s = time.perf_counter() - t1
    if not text or not text.strip():
        raise AdapterFailure("llm", "language model returned an empty answer")

    answer = Answer(
        text=text,
        evidence_ids=[sid for sid, _, _, _ in bundle.evidence],
        timings={"retrieval": retrieval_s, "llm": llm_s},
    )
    return answer, retrieved


def answer_question(
    store: RagStore,
    embedder: EmbedderContract,
    llm: LlmContract,
    ctx: QueryContext,
    cfg: RetrievalConfig = RetrievalConfig(),
) -> Answer:
    """One full turn: retrieve, build the prompt, invoke the language model."""
    answer, _ = answer_question_detailed(store, embedder, llm, ctx, cfg)
    return answer


def transcribe_voice_query(asr: AsrContract, audio: bytes) -> str | None:
    """Transcribe a voice query; None signals "no speech detected" (retryable).

    Undecodable audio raises AudioFormatError; an empty or low-confidence
    transcript is the no-speech outcome rather than an error.
    """
    result = asr.transcribe(audio)
    if not result.text.strip() or not result.confident:
        return None
    return result.text


# --- built-in stub adapters -------------------------------------------------

_EXCERPT_PREFIX = "] "


class EchoLlm:
    """Deterministic test model: echoes the first sentence of the first excerpt."""

    REFUSAL = "The lecture excerpts do not cover this question."

    def __init__(self, max_answer_chars: int = DEFAULT_MAX_ANSWER_CHARS):
        self.max_answer_chars = max_answer_chars

    def complete(self, prompt: str) -> str:
        for line in prompt.split("\n"):
            if line.startswith("[") and _EXCERPT_PREFIX in line:
                text = line.split(_EXCERPT_PREFIX, 1)[1]
                return _first_sentence(text)[: self.max_answer_chars]
        return self.REFUSAL


def _first_sentence(text: str) -> str:
    for i, ch in enumerate(text):
        if ch in ".!?":
            return text[: i + 1]
    return text


def decode_wav(audio: bytes) -> tuple[wave._wave_params, bytes]:
    """Decode WAV bytes to (params, frames); raises AudioFormatError if broken."""
    try:
        with wave.open(io.BytesIO(audio), "rb") as wav:
            params = wav.getparams()
            frames = wav.readframes(wav.getnframes())
    except (wave.Error, EOFError, ValueError) as exc:
        raise AudioFormatError(f"cannot decode WAV audio: {exc}") from exc
    return params, frames


class StubAsr:
    """Table-driven transcriber: exact audio bytes map to fixed transcripts.

    Unmapped audio (including silence) yields a low-confidence empty result,
    which the pipeline treats as the no-speech outcome. Pure with respect to
    the input bytes.
    """

    def __init__(self, table: dict[bytes, str] | None = None):
        self._by_digest = {
            hashlib.sha256(audio).hexdigest(): text for audio, text in (table or {}).items()
        }

    def transcribe(self, audio: bytes) -> TranscriptionResult:
        decode_wav(audio)  # enforce the WAV contract before lookup
        text = self._by_digest.get(hashlib.sha256(audio).hexdigest())
        if text:
            return TranscriptionResult(text=text, confident=True)
        return TranscriptionResult(text="", confident=False)
