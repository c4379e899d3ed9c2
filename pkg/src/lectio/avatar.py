"""Answer segmentation and the progressive-preloading playback schedule.

An answer is split at sentence boundaries, each piece is synthesized into a
short media segment, and playback runs strictly in sequence while synthesis of
upcoming segments proceeds in the background: while segment i plays, segments
up to i + lookahead may be in flight. The first segments are preloaded eagerly
so playback can begin as soon as segment 0 is ready.

run_schedule() drives a plan deterministically against a millisecond-resolution
simulated clock, taking latencies from the synth adapter's estimates. Live
sessions use sessions.LiveScheduler, which applies the same request policy to
real synthesis on a worker pool, with playback progress reported by the client.
"""

from __future__ import annotations

import heapq
import logging
import re
import time
import wave
from dataclasses import dataclass
from enum import Enum
from io import BytesIO
from typing import NamedTuple, Protocol, runtime_checkable

from .errors import SynthesisError

logger = logging.getLogger(__name__)

DEFAULT_LOOKAHEAD = 2
DEFAULT_PRELOAD = 2
DEFAULT_WORKERS = 2
MIN_SEGMENT_CHARS = 40
STUB_SECONDS_PER_CHAR = 0.06

ABBREVIATIONS = frozenset(
    {
        "e.g.", "i.e.", "etc.", "cf.", "vs.", "al.", "approx.",
        "dr.", "mr.", "mrs.", "ms.", "prof.", "st.",
        "fig.", "eq.", "sec.", "no.", "ch.", "pp.",
    }
)


class SegmentStatus(str, Enum):
    PENDING = "pending"
    SYNTHESIZING = "synthesizing"
    READY = "ready"
    PLAYING = "playing"
    DONE = "done"
    FAILED = "failed"


_TRANSITIONS = {
    SegmentStatus.PENDING: {SegmentStatus.SYNTHESIZING, SegmentStatus.FAILED},
    SegmentStatus.SYNTHESIZING: {SegmentStatus.READY, SegmentStatus.FAILED},
    SegmentStatus.READY: {SegmentStatus.PLAYING, SegmentStatus.FAILED},
    SegmentStatus.PLAYING: {SegmentStatus.DONE, SegmentStatus.FAILED},
    SegmentStatus.DONE: {SegmentStatus.FAILED},
    SegmentStatus.FAILED: set(),
}


@dataclass
class ResponseSegment:
    """One playable unit of an answer, tracked through its synthesis lifecycle."""

    seq: int
    text: str
    status: SegmentStatus = SegmentStatus.PENDING
    media_ref: str | None = None
    duration: float | None = None

    def transition(self, new: SegmentStatus) -> None:
        if new not in _TRANSITIONS[self.status]:
            raise ValueError(f"segment {self.seq}: illegal transition {self.status} -> {new}")
        self.status = new

    def set_ready(self, media_ref: str, duration: float) -> None:
        self.media_ref = media_ref
        self.duration = duration
        self.transition(SegmentStatus.READY)


@dataclass
class PlaybackPlan:
    """Ordered response segments plus the scheduling window parameters."""

    segments: list[ResponseSegment]
    playing_index: int | None = None
    lookahead: int = DEFAULT_LOOKAHEAD
    preload_count: int = DEFAULT_PRELOAD

    @property
    def effective_preload(self) -> int:
        # Preloading more than lookahead + 1 segments would break the
        # in-flight bound before playback starts.
        return min(self.preload_count, self.lookahead + 1, len(self.segments))

    def validate(self) -> None:
        active = [s.seq for s in self.segments
                  if s.status in (SegmentStatus.PLAYING, SegmentStatus.DONE)]
        for seq in active:
            for earlier in self.segments[:seq]:
                if earlier.status not in (
                    SegmentStatus.PLAYING, SegmentStatus.DONE, SegmentStatus.FAILED
                ):
                    raise ValueError(
                        f"segment {seq} is {self.segments[seq].status} but segment "
                        f"{earlier.seq} is still {earlier.status}"
                    )
        for seg in self.segments:
            has_media = seg.media_ref is not None
            expects = seg.status in (SegmentStatus.READY, SegmentStatus.PLAYING, SegmentStatus.DONE)
            if has_media != expects:
                raise ValueError(
                    f"segment {seg.seq}: media_ref {'set' if has_media else 'missing'} "
                    f"in status {seg.status}"
                )


def _strip_leading_punct(token: str) -> str:
    return token.lstrip("([{\"'")


def _ends_with_abbreviation(sentence: str) -> bool:
    tokens = sentence.rsplit(" ", 1)
    last = _strip_leading_punct(tokens[-1]).lower()
    return last in ABBREVIATIONS


def split_sentences(answer: str, min_chars: int = MIN_SEGMENT_CHARS) -> list[str]:
    """Split an answer at sentence boundaries, then merge short neighbors.

    Terminators (., !, ?) followed by whitespace end a sentence unless the
    final token is a guarded abbreviation. Adjacent sentences are merged until
    a segment reaches min_chars where possible. Joining the result with single
    spaces reproduces the whitespace-normalized input.
    """
    normalized = " ".join(answer.split())
    if not normalized:
        raise ValueError("answer must be non-empty")
    pieces = re.split(r"(?<=[.!?])\s+", normalized)
    sentences: list[str] = []
    for piece in pieces:
        if sentences and _ends_with_abbreviation(sentences[-1]):
            sentences[-1] = f"{sentences[-1]} {piece}"
        else:
            sentences.append(piece)
    segments: list[str] = []
    current = ""
    for sentence in sentences:
        current = sentence if not current else f"{current} {sentence}"
        if len(current) >= min_chars:
            segments.append(current)
            current = ""
    if current:
        segments.append(current)
    return segments


def plan_playback(
    texts: list[str],
    lookahead: int = DEFAULT_LOOKAHEAD,
    preload_count: int = DEFAULT_PRELOAD,
) -> PlaybackPlan:
    """Build a pending plan for the given segment texts."""
    if not texts:
        raise ValueError("cannot plan playback of zero segments")
    if lookahead < 0:
        raise ValueError(f"lookahead must be non-negative, got {lookahead}")
    if preload_count < 1:
        raise ValueError(f"preload_count must be >= 1, got {preload_count}")
    if preload_count > lookahead + 1:
        logger.warning(
            "preload_count %d exceeds lookahead+1 (%d); clamping to keep the "
            "in-flight bound",
            preload_count,
            lookahead + 1,
        )
    return PlaybackPlan(
        segments=[ResponseSegment(seq=i, text=t) for i, t in enumerate(texts)],
        lookahead=lookahead,
        preload_count=preload_count,
    )


# --- synthesis adapters -------------------------------------------------------


class SynthResult(NamedTuple):
    payload: bytes
    duration_s: float
    tts_s: float | None = None
    render_s: float | None = None


@runtime_checkable
class SynthContract(Protocol):
    """Text-to-media adapter; latency_estimate feeds simulated scheduling."""

    declared_latency_hint: float | None

    def synthesize(self, text: str) -> SynthResult: ...

    def latency_estimate(self, text: str) -> float: ...


def _silent_wav(duration_s: float, rate: int = 16000) -> bytes:
    # Payload length is capped; the real duration travels as metadata.
    frames = b"\x00\x00" * int(rate * min(duration_s, 10.0))
    buf = BytesIO()
    with wave.open(buf, "wb") as wav:
        wav.setnchannels(1)
        wav.setsampwidth(2)
        wav.setframerate(rate)
        wav.writeframes(frames)
    return buf.getvalue()


def _mp4_container(payload: bytes) -> bytes:
    ftyp = b"\x00\x00\x00\x18ftypisom\x00\x00\x02\x00isomiso2"
    mdat = (len(payload) + 8).to_bytes(4, "big") + b"mdat" + payload
    return ftyp + mdat


class StubSynth:
    """Placeholder synthesizer: silent WAV in an MP4 container.

    Duration models speech at STUB_SECONDS_PER_CHAR per character
    (about 165 characters per minute).
    """

    def __init__(self, latency_hint: float = 0.0):
        self.declared_latency_hint = latency_hint

    def latency_estimate(self, text: str) -> float:
        return self.declared_latency_hint or 0.0

    def synthesize(self, text: str) -> SynthResult:
        t0 = time.perf_counter()
        audio = _silent_wav(STUB_SECONDS_PER_CHAR * len(text))
        t1 = time.perf_counter()
        payload = _mp4_container(audio)
        t2 = time.perf_counter()
        return SynthResult(
            payload=payload,
            duration_s=STUB_SECONDS_PER_CHAR * len(text),
            tts_s=t1 - t0,
            render_s=t2 - t1,
        )


class ScriptedSegment(NamedTuple):
    latency_s: float
    duration_s: float
    fail: bool = False


class ScriptedSynth:
    """Maps exact segment text to scripted latency/duration/failure (simulation)."""

    def __init__(self, script: dict[str, ScriptedSegment]):
        self.declared_latency_hint = None
        self._script = dict(script)

    def latency_estimate(self, text: str) -> float:
        return self._script[text].latency_s

    def synthesize(self, text: str) -> SynthResult:
        entry = self._script[text]
        if entry.fail:
            raise SynthesisError(f"scripted synthesis failure for {text!r}")
        return SynthResult(payload=b"scripted-media", duration_s=entry.duration_s)


# --- deterministic schedule driver ---------------------------------------------


@dataclass(frozen=True)
class ScheduleEvent:
    time: float
    kind: str  # request_synth | ready | play_start | play_end | failed_skip
    seq: int


class SimClock:
    """Millisecond-resolution virtual clock advanced by the scheduler."""

    def __init__(self):
        self.now_ms = 0

    @property
    def now(self) -> float:
        return self.now_ms / 1000.0

    def advance_to(self, ms: int) -> None:
        if ms < self.now_ms:
            raise ValueError(f"clock cannot move backwards ({ms} < {self.now_ms})")
        self.now_ms = ms


def _ms(seconds: float) -> int:
    return round(seconds * 1000)


def run_schedule(
    plan: PlaybackPlan,
    synth: SynthContract,
    clock: SimClock | None = None,
    workers: int = DEFAULT_WORKERS,
    media=None,
) -> list[ScheduleEvent]:
    """Drive the plan to completion in virtual time; returns the event log.

    Request policy: the first effective_preload segments are requested at t=0;
    when a segment starts playing or is skipped, every segment up to
    seq + lookahead is requested; when the playback head advances to a segment
    that was never requested (possible only with lookahead 0), it is requested
    on arrival. Synthesis occupies one of `workers` slots for the adapter's
    estimated latency. Playback is strictly sequential; a failed segment is
    skipped once its turn arrives. If `media` (a media.MediaStore) is given,
    ready payloads are materialized through it.
    """
    clock = clock or SimClock()
    events: list[ScheduleEvent] = []
    n = len(plan.segments)
    if n == 0:
        return events
    if workers < 1:
        raise ValueError(f"workers must be >= 1, got {workers}")

    requested: set[int] = set()
    wait_queue: list[tuple[int, int]] = []  # (request_ms, seq)
    timeline: list[tuple[int, int, int]] = []  # (ms, 0=synth-done | 1=play-end, seq)
    ready_ms: dict[int, int] = {}
    fail_ms: dict[int, int] = {}
    dur_ms: dict[int, int] = {}
    free_workers = workers
    turn = 0
    playing: int | None = None
    gate_ms = 0

    def emit(ms: int, kind: str, seq: int) -> None:
        events.append(ScheduleEvent(time=ms / 1000.0, kind=kind, seq=seq))

    def dispatch(ms: int) -> None:
        nonlocal free_workers
        while free_workers > 0 and wait_queue:
            _, seq = heapq.heappop(wait_queue)
            free_workers -= 1
            latency = _ms(synth.latency_estimate(plan.segments[seq].text))
            heapq.heappush(timeline, (ms + latency, 0, seq))

    def request(seq: int, ms: int) -> None:
        requested.add(seq)
        plan.segments[seq].transition(SegmentStatus.SYNTHESIZING)
        emit(ms, "request_synth", seq)
        heapq.heappush(wait_queue, (ms, seq))
        dispatch(ms)

    def ensure_window(seq: int, ms: int) -> None:
        for j in range(seq + 1, min(seq + plan.lookahead, n - 1) + 1):
            if j not in requested:
                request(j, ms)

    def advance_turn(to: int, ms: int) -> None:
        nonlocal turn
        turn = to
        if turn < n and turn not in requested:
            request(turn, ms)

    def check_inflight_bound() -> None:
        in_flight = [s for s in requested if s > turn and s not in ready_ms and s not in fail_ms]
        if len(in_flight) > plan.lookahead:
            raise RuntimeError(
                f"scheduling bug: {len(in_flight)} segments in flight beyond the "
                f"playback head (bound {plan.lookahead})"
            )

    def try_advance() -> None:
        nonlocal playing, gate_ms
        while playing is None and turn < n:
            seq = turn
            if seq in fail_ms:
                at = max(gate_ms, fail_ms[seq])
                emit(at, "failed_skip", seq)
                ensure_window(seq, at)
                gate_ms = at
                advance_turn(seq + 1, at)
                continue
            if seq in ready_ms:
                at = max(gate_ms, ready_ms[seq])
                plan.segments[seq].transition(SegmentStatus.PLAYING)
                plan.playing_index = seq
                emit(at, "play_start", seq)
                playing = seq
                ensure_window(seq, at)
                heapq.heappush(timeline, (at + dur_ms[seq], 1, seq))
            break

    for j in range(plan.effective_preload):
        request(j, 0)
    check_inflight_bound()
    try_advance()

    while timeline:
        ms, kind, seq = heapq.heappop(timeline)
        clock.advance_to(ms)
        if kind == 0:
            free_workers += 1
            segment = plan.segments[seq]
            try:
                result = synth.synthesize(segment.text)
            except SynthesisError as exc:
                logger.warning("synthesis of segment %d failed: %s", seq, exc)
                fail_ms[seq] = ms
                segment.transition(SegmentStatus.FAILED)
            else:
                ready_ms[seq] = ms
                dur_ms[seq] = _ms(result.duration_s)
                ref = str(media.place(seq, result.payload)) if media is not None else f"synth:{seq}"
                segment.set_ready(ref, result.duration_s)
                emit(ms, "ready", seq)
            dispatch(ms)
            try_advance()
        else:
            emit(ms, "play_end", seq)
            plan.segments[seq].transition(SegmentStatus.DONE)
            playing = None
            gate_ms = ms
            advance_turn(seq + 1, ms)
            try_advance()
        check_inflight_bound()

    plan.playing_index = None
    return events


def stall_intervals(events: list[ScheduleEvent]) -> list[tuple[float, float]]:
    """Gaps after the first play_start during which nothing was playing."""
    starts = sorted((e.time, e.seq) for e in events if e.kind == "play_start")
    ends = {e.seq: e.time for e in events if e.kind == "play_end"}
    intervals: list[tuple[float, float]] = []
    previous_end: float | None = None
    for at, seq in starts:
        if previous_end is not None and at > previous_end:
            intervals.append((previous_end, at))
        previous_end = ends.get(seq, at)
    return intervals
