"""Loopback HTTP service exposing the engine: ask, voice, avatar, cleanup.

All endpoints are JSON over HTTP/1.1 (multipart for audio); media is served
with range-request support so browser video elements can stream it. Sessions
live in memory only: restarting the service loses sessions but never lecture
data, and no API call mutates the store directory.
"""

from __future__ import annotations

import logging
import re
import time
from contextlib import asynccontextmanager
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

from fastapi import FastAPI, File, Form, HTTPException, Request, UploadFile
from fastapi.responses import JSONResponse, Response
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel, ConfigDict, Field

from .avatar import SegmentStatus, plan_playback, split_sentences
from .config import Adapters, EngineConfig, build_adapters
from .errors import AdapterFailure, AudioFormatError, ConfigurationError
from .media import default_temp_root
from .qa import answer_question_detailed, transcribe_voice_query
from .retrieval import QueryContext
from .sessions import LiveScheduler, SessionManager, SessionState
from .store import RagStore, load_store

logger = logging.getLogger(__name__)

RETRY_AFTER_S = 1


@dataclass
class EngineRuntime:
    """Everything the service needs: store, adapters, config, sessions."""

    store: RagStore
    adapters: Adapters
    config: EngineConfig
    sessions: SessionManager

    @classmethod
    def create(cls, store_dir: str | Path, config: EngineConfig | None = None) -> "EngineRuntime":
        config = config or EngineConfig()
        store = load_store(store_dir)
        adapters = build_adapters(config, store_dimension=store.metadata.dimension)
        if adapters.embedder.name != store.metadata.embedder_name:
            raise ConfigurationError(
                f"configured embedder {adapters.embedder.name!r} does not match the "
                f"store's embedder {store.metadata.embedder_name!r}; fix the adapter "
                f"config or rebuild the store"
            )
        media_root = Path(config.media_root) if config.media_root else default_temp_root()
        sessions = SessionManager(media_root=media_root, ttl_s=config.session_ttl_s)
        return cls(store=store, adapters=adapters, config=config, sessions=sessions)

    def lecture_known(self, lecture_id: str) -> bool:
        return lecture_id in self.store.metadata.lecture_ids

    def adapter_health(self) -> dict[str, str]:
        health = {}
        for role in ("embedder", "llm", "asr", "synth"):
            adapter = getattr(self.adapters, role)
            probe = getattr(adapter, "probe", None)
            health[role] = "ok" if probe is None or probe() else "degraded"
        return health


class ConfigOverrides(BaseModel):
    model_config = ConfigDict(populate_by_name=True)

    lambda_: Optional[float] = Field(default=None, alias="lambda", ge=0)
    top_K: Optional[int] = Field(default=None, ge=1)
    top_k: Optional[int] = Field(default=None, ge=1)


class AskRequest(BaseModel):
    lecture_id: str
    question: str
    pause_time: float = Field(ge=0)
    config: Optional[ConfigOverrides] = None


class AvatarRequest(BaseModel):
    answer_text: str
    session_id: Optional[str] = None


class PlayedRequest(BaseModel):
    seq: int = Field(ge=0)


class CleanupRequest(BaseModel):
    session_id: str


def _merged_config(runtime: EngineRuntime, overrides: Optional[ConfigOverrides]):
    if overrides is None:
        return runtime.config.retrieval
    try:
        return runtime.config.retrieval.override(
            lambda_=overrides.lambda_, top_K=overrides.top_K, top_k=overrides.top_k
        )
    except ValueError as exc:
        raise HTTPException(status_code=422, detail=str(exc)) from exc


def _answer_payload(runtime: EngineRuntime, lecture_id: str, question: str,
                    pause_time: float, overrides: Optional[ConfigOverrides]) -> dict:
    if not question.strip():
        raise HTTPException(status_code=422, detail="question must be non-empty")
    if not runtime.lecture_known(lecture_id):
        raise HTTPException(status_code=404, detail=f"unknown lecture {lecture_id!r}")
    cfg = _merged_config(runtime, overrides)
    ctx = QueryContext(question=question, pause_time=pause_time, lecture_id=lecture_id)
    try:
        answer, retrieved = answer_question_detailed(
            runtime.store, runtime.adapters.embedder, runtime.adapters.llm, ctx, cfg
        )
    except AdapterFailure as exc:
        raise HTTPException(status_code=502,
                            detail={"stage": exc.stage, "error": str(exc)}) from exc
    return {
        "answer": answer.text,
        "evidence": [
            {
                "segment_id": s.segment.segment_id,
                "start": s.segment.start,
                "end": s.segment.end,
                "text": s.segment.text,
                "semantic_score": s.semantic_score,
                "adjusted_score": s.adjusted_score,
            }
            for s in retrieved
        ],
        "timings": answer.timings,
    }


def _media_response(path: Path, range_header: str | None) -> Response:
    data = path.read_bytes()
    size = len(data)
    headers = {"Accept-Ranges": "bytes"}
    if range_header:
        match = re.fullmatch(r"bytes=(\d*)-(\d*)", range_header.strip())
        if match and (match.group(1) or match.group(2)):
            if match.group(1):
                start = int(match.group(1))
                end = int(match.group(2)) if match.group(2) else size - 1
                end = min(end, size - 1)
            else:
                # suffix form: the final N bytes
                length = min(int(match.group(2)), size)
                start, end = size - length, size - 1
            if start >= size or start > end:
                return Response(status_code=416, headers={"Content-Range": f"bytes */{size}"})
            headers["Content-Range"] = f"bytes {start}-{end}/{size}"
            return Response(data[start : end + 1], status_code=206,
                            media_type="video/mp4", headers=headers)
    return Response(data, media_type="video/mp4", headers=headers)


def _require_session(runtime: EngineRuntime, session_id: str) -> SessionState:
    session = runtime.sessions.get(session_id)
    if session is None:
        raise HTTPException(status_code=404, detail=f"unknown session {session_id!r}")
    return session


def create_app(runtime: EngineRuntime, static_dir: str | Path | None = None) -> FastAPI:
    @asynccontextmanager
    async def lifespan(_app: FastAPI):
        yield
        runtime.sessions.shutdown()

    app = FastAPI(title="lectio", lifespan=lifespan)

    @app.post("/api/ask")
    def ask(req: AskRequest) -> JSONResponse:
        """One grounded question-answer turn over the loaded store."""
        payload = _answer_payload(runtime, req.lecture_id, req.question,
                                  req.pause_time, req.config)
        return JSONResponse(payload)

    @app.post("/api/voice")
    def voice(
        audio: UploadFile = File(...),
        lecture_id: str = Form(...),
        pause_time: float = Form(...),
    ) -> JSONResponse:
        """Voice turn: transcribe, then the identical ask pipeline."""
        if pause_time < 0:
            raise HTTPException(status_code=422, detail="pause_time must be non-negative")
        blob = audio.file.read()
        t0 = time.perf_counter()
        try:
            transcript = transcribe_voice_query(runtime.adapters.asr, blob)
        except AudioFormatError as exc:
            raise HTTPException(status_code=415, detail=str(exc)) from exc
        except AdapterFailure as exc:
            raise HTTPException(status_code=502,
                                detail={"stage": exc.stage, "error": str(exc)}) from exc
        asr_s = time.perf_counter() - t0
        if transcript is None:
            return JSONResponse({"no_speech": True, "timings": {"asr": asr_s}})
        payload = _answer_payload(runtime, lecture_id, transcript, pause_time, None)
        payload["transcript"] = transcript
        payload["timings"]["asr"] = asr_s
        return JSONResponse(payload)

    @app.post("/api/avatar")
    def avatar_start(req: AvatarRequest) -> JSONResponse:
        """Split an answer into segments and begin preloading synthesis."""
        runtime.sessions.sweep()
        if not req.answer_text.strip():
            raise HTTPException(status_code=422, detail="answer_text must be non-empty")
        if req.session_id is not None:
            session = _require_session(runtime, req.session_id)
            if session.scheduler is not None:
                session.scheduler.shutdown()
        else:
            session = runtime.sessions.create()
        texts = split_sentences(req.answer_text)
        plan = plan_playback(texts, lookahead=runtime.config.lookahead,
                             preload_count=runtime.config.preload_count)
        scheduler = LiveScheduler(plan, runtime.adapters.synth, session.media,
                                  workers=runtime.config.synth_workers)
        session.plan = plan
        session.scheduler = scheduler
        scheduler.start()
        return JSONResponse({
            "session_id": session.session_id,
            "segments": [{"seq": s.seq, "text": s.text} for s in plan.segments],
        })

    @app.get("/api/avatar/{session_id}/{seq}")
    def avatar_media(session_id: str, seq: int, request: Request) -> Response:
        """Segment media once ready; 202 with Retry-After while synthesizing."""
        session = _require_session(runtime, session_id)
        if session.scheduler is None:
            raise HTTPException(status_code=404, detail="session has no avatar plan")
        try:
            segment = session.scheduler.segment(seq)
        except KeyError as exc:
            raise HTTPException(status_code=404, detail=str(exc)) from exc
        if segment.status is SegmentStatus.FAILED:
            raise HTTPException(status_code=410, detail=f"segment {seq} failed synthesis")
        if segment.status in (SegmentStatus.PENDING, SegmentStatus.SYNTHESIZING):
            return Response(status_code=202, headers={"Retry-After": str(RETRY_AFTER_S)})
        return _media_response(Path(segment.media_ref), request.headers.get("range"))

    @app.post("/api/avatar/{session_id}/played")
    def avatar_played(session_id: str, req: PlayedRequest) -> JSONResponse:
        """Advance the schedule: the client began playing segment seq."""
        runtime.sessions.sweep()
        session = _require_session(runtime, session_id)
        if session.scheduler is None:
            raise HTTPException(status_code=404, detail="session has no avatar plan")
        try:
            requested = session.scheduler.notify_played(req.seq)
        except KeyError as exc:
            raise HTTPException(status_code=404, detail=str(exc)) from exc
        except RuntimeError as exc:
            raise HTTPException(status_code=409, detail=str(exc)) from exc
        return JSONResponse({"requested": requested})

    @app.post("/api/cleanup")
    def cleanup(req: CleanupRequest) -> JSONResponse:
        """Delete the session's temp media; idempotent, unknown ids included."""
        runtime.sessions.sweep()
        report = runtime.sessions.cleanup(req.session_id)
        return JSONResponse({
            "deleted": len(report.deleted),
            "already_absent": len(report.already_absent),
        })

    @app.get("/api/lecture/{lecture_id}")
    def lecture_info(lecture_id: str) -> JSONResponse:
        if not runtime.lecture_known(lecture_id):
            raise HTTPException(status_code=404, detail=f"unknown lecture {lecture_id!r}")
        segments = runtime.store.lecture_segments(lecture_id)
        return JSONResponse({
            "segments": len(segments),
            "duration": max(s.end for s in segments) if segments else 0.0,
            "metadata": {
                "embedder_name": runtime.store.metadata.embedder_name,
                "dimension": runtime.store.metadata.dimension,
                "max_span": runtime.store.metadata.max_span,
                "created_at": runtime.store.metadata.created_at,
                "lecture_ids": runtime.store.metadata.lecture_ids,
                "format_version": runtime.store.metadata.format_version,
            },
        })

    @app.get("/api/health")
    def health() -> JSONResponse:
        adapters = runtime.adapter_health()
        status = "ok" if all(v == "ok" for v in adapters.values()) else "degraded"
        return JSONResponse({
            "status": status,
            "adapters": adapters,
            "lectures": runtime.store.metadata.lecture_ids,
            "segments": runtime.store.size,
        })

    if static_dir is not None and Path(static_dir).is_dir():
        app.mount("/", StaticFiles(directory=str(static_dir), html=True), name="ui")

    return app
