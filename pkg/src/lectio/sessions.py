"""Ephemeral interaction sessions: live synthesis scheduling and TTL expiry.

Sessions are never persisted; each holds a temp-media registry and, once an
avatar answer is requested, a live playback schedule. Idle sessions past the
TTL are cleaned exactly as if the client had called cleanup.
"""

from __future__ import annotations

import logging
import secrets
import threading
import time
from concurrent.futures import Future, ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

from .avatar import (
    DEFAULT_WORKERS,
    PlaybackPlan,
    ScheduleEvent,
    SegmentStatus,
    SynthContract,
)
from .errors import SynthesisError
from .media import CleanupReport, MediaStore, cleanup_session

logger = logging.getLogger(__name__)

DEFAULT_TTL_S = 900.0


class LiveScheduler:
    """Client-driven schedule: synthesis on a worker pool, playback reported in.

    Applies the same request policy as avatar.run_schedule — eager preload,
    then everything up to seq + lookahead whenever the client reports that
    segment seq began playing. State mutations are serialized per session.
    """

    def __init__(
        self,
        plan: PlaybackPlan,
        synth: SynthContract,
        media: MediaStore,
        workers: int = DEFAULT_WORKERS,
    ):
        self.plan = plan
        self.events: list[ScheduleEvent] = []
        self._synth = synth
        self._media = media
        self._executor = ThreadPoolExecutor(max_workers=max(1, workers))
        self._lock = threading.RLock()
        self._t0 = time.perf_counter()
        self._requested: set[int] = set()
        self._skip_logged: set[int] = set()
        self._futures: list[Future] = []

    def _now(self) -> float:
        return time.perf_counter() - self._t0

    def _emit(self, kind: str, seq: int) -> None:
        self.events.append(ScheduleEvent(time=self._now(), kind=kind, seq=seq))

    def _request(self, seq: int) -> bool:
        if seq in self._requested or not 0 <= seq < len(self.plan.segments):
            return False
        self._requested.add(seq)
        self.plan.segments[seq].transition(SegmentStatus.SYNTHESIZING)
        self._emit("request_synth", seq)
        self._futures.append(self._executor.submit(self._synthesize, seq))
        return True

    def _synthesize(self, seq: int) -> None:
        segment = self.plan.segments[seq]
        try:
            result = self._synth.synthesize(segment.text)
            path = self._media.place(seq, result.payload)
        except (SynthesisError, OSError) as exc:
            logger.warning("synthesis of segment %d failed: %s", seq, exc)
            with self._lock:
                if segment.status is not SegmentStatus.FAILED:
                    segment.transition(SegmentStatus.FAILED)
            return
        with self._lock:
            segment.set_ready(str(path), result.duration_s)
            self._emit("ready", seq)

    def start(self) -> list[int]:
        """Kick off the eager preload; returns the requested seqs."""
        with self._lock:
            return [j for j in range(self.plan.effective_preload) if self._request(j)]

    def notify_played(self, seq: int) -> list[int]:
        """Record that the client began playing seq; returns newly requested seqs.

        Earlier ready/playing segments are marked done and earlier failures are
        logged as skipped; the synthesis window slides to seq + lookahead.
        """
        with self._lock:
            if not 0 <= seq < len(self.plan.segments):
                raise KeyError(f"no segment {seq}")
            segment = self.plan.segments[seq]
            for earlier in self.plan.segments[:seq]:
                if earlier.status in (SegmentStatus.READY, SegmentStatus.PLAYING):
                    # READY -> PLAYING -> DONE: the client implicitly consumed it.
                    if earlier.status is SegmentStatus.READY:
                        earlier.transition(SegmentStatus.PLAYING)
                    earlier.transition(SegmentStatus.DONE)
                elif earlier.status is SegmentStatus.FAILED and earlier.seq not in self._skip_logged:
                    self._skip_logged.add(earlier.seq)
                    self._emit("failed_skip", earlier.seq)
            if segment.status is SegmentStatus.FAILED:
                if seq not in self._skip_logged:
                    self._skip_logged.add(seq)
                    self._emit("failed_skip", seq)
            elif segment.status is SegmentStatus.READY:
                segment.transition(SegmentStatus.PLAYING)
                self.plan.playing_index = seq
                self._emit("play_start", seq)
            elif segment.status not in (SegmentStatus.PLAYING, SegmentStatus.DONE):
                raise RuntimeError(f"segment {seq} is {segment.status.value}, not playable yet")
            newly = [j for j in range(seq + 1, min(seq + self.plan.lookahead,
                                                   len(self.plan.segments) - 1) + 1)
                     if self._request(j)]
            return newly

    def segment(self, seq: int):
        with self._lock:
            if not 0 <= seq < len(self.plan.segments):
                raise KeyError(f"no segment {seq}")
            return self.plan.segments[seq]

    def wait_idle(self, timeout: float = 10.0) -> bool:
        """Block until all submitted synthesis work has finished (tests, shutdown)."""
        deadline = time.monotonic() + timeout
        for future in list(self._futures):
            remaining = deadline - time.monotonic()
            if remaining <= 0:
                return False
            try:
                future.result(timeout=remaining)
            except Exception:
                pass
        return True

    def shutdown(self) -> None:
        self._executor.shutdown(wait=True, cancel_futures=True)


@dataclass
class SessionState:
    """In-memory interaction state; never serialized to durable storage."""

    session_id: str
    lecture_id: str | None
    created_at: float
    last_active: float
    media: MediaStore
    plan: PlaybackPlan | None = None
    scheduler: LiveScheduler | None = None


@dataclass
class SessionManager:
    """Registry of live sessions with idle-TTL expiry.

    The clock is injectable so expiry is testable; sweep() runs lazily on
    session-touching requests and may be called directly.
    """

    media_root: Path
    ttl_s: float = DEFAULT_TTL_S
    clock: Callable[[], float] = time.monotonic
    _sessions: dict[str, SessionState] = field(default_factory=dict)
    _lock: threading.RLock = field(default_factory=threading.RLock)

    def create(self, lecture_id: str | None = None) -> SessionState:
        session_id = secrets.token_hex(16)
        now = self.clock()
        state = SessionState(
            session_id=session_id,
            lecture_id=lecture_id,
            created_at=now,
            last_active=now,
            media=MediaStore(session_id, root=self.media_root),
        )
        with self._lock:
            self._sessions[session_id] = state
        return state

    def get(self, session_id: str) -> SessionState | None:
        with self._lock:
            state = self._sessions.get(session_id)
            if state is not None:
                state.last_active = self.clock()
            return state

    def cleanup(self, session_id: str) -> CleanupReport:
        """Remove the session and all its temp media; unknown ids are a no-op."""
        with self._lock:
            state = self._sessions.pop(session_id, None)
        if state is None:
            return CleanupReport()
        if state.scheduler is not None:
            state.scheduler.shutdown()
        return cleanup_session(state.media.registry)

    def sweep(self, now: float | None = None) -> list[str]:
        """Clean sessions idle longer than the TTL; returns the expired ids."""
        at = self.clock() if now is None else now
        with self._lock:
            expired = [sid for sid, s in self._sessions.items()
                       if at - s.last_active > self.ttl_s]
        for session_id in expired:
            logger.info("session %s expired after %.0fs idle TTL", session_id, self.ttl_s)
            self.cleanup(session_id)
        return expired

    def shutdown(self) -> None:
        with self._lock:
            all_ids = list(self._sessions)
        for session_id in all_ids:
            self.cleanup(session_id)
