"""Prompt construction, answer orchestration, and voice transcription."""

from __future__ import annotations

import pytest

from conftest import dir_hash, make_store, wav_bytes
from lectio.errors import AdapterFailure, AudioFormatError
from lectio.qa import (
    EchoLlm,
    NO_EXCERPTS_MARKER,
    StubAsr,
    answer_question,
    build_prompt,
    format_mmss,
    transcribe_voice_query,
)
from lectio.retrieval import QueryContext, RetrievalConfig, ScoredSegment, midpoint
from lectio.ingest import LectureSegment
from lectio.store import save_store


def scored(sid, start, end, text, semantic=0.9):
    segment = LectureSegment(segment_id=sid, lecture_id="lec01", start=start, end=end, text=text)
    return ScoredSegment(segment=segment, semantic_score=semantic,
                         adjusted_score=semantic, midpoint=midpoint(segment))


class TestBuildPrompt:
    def test_two_segments_in_order_question_once(self):
        bundle = build_prompt(
            [scored("a", 0, 10, "first excerpt"), scored("b", 10, 20, "second excerpt")],
            "why is the sky blue?",
        )
        rendered = bundle.rendered
        assert rendered.index("first excerpt") < rendered.index("second excerpt")
        assert rendered.count("why is the sky blue?") == 1
        for _, _, _, text in bundle.evidence:
            assert text in rendered

    def test_zero_segments_carries_marker(self):
        bundle = build_prompt([], "anything?")
        assert NO_EXCERPTS_MARKER in bundle.rendered

    def test_timestamp_prefix_format(self):
        bundle = build_prompt([scored("a", 75, 95, "ramp filters")], "q?")
        assert "[01:15–01:35] ramp filters" in bundle.rendered

    def test_format_mmss(self):
        assert format_mmss(0) == "00:00"
        assert format_mmss(62.5) == "01:02"
        assert format_mmss(75) == "01:15"

    def test_empty_question_rejected(self):
        with pytest.raises(ValueError):
            build_prompt([], "   ")


class TestAnswerQuestion:
    def test_echo_stub_returns_planted_sentence(self):
        planted = "Filtered backprojection applies a ramp filter."
        store, embedder = make_store([(0, 10, planted), (50, 60, "Unrelated content here.")])
        answer = answer_question(
            store, embedder, EchoLlm(), QueryContext(planted, pause_time=5.0)
        )
        assert answer.text == planted

    def test_empty_question_fails_before_adapters(self):
        with pytest.raises(ValueError):
            QueryContext("", 0.0)

    def test_deterministic_repeat(self):
        store, embedder = make_store([(0, 10, "Constant text."), (10, 20, "More text here.")])
        ctx = QueryContext("constant text", 3.0)
        first = answer_question(store, embedder, EchoLlm(), ctx)
        second = answer_question(store, embedder, EchoLlm(), ctx)
        assert first.text == second.text
        assert first.evidence_ids == second.evidence_ids

    def test_llm_failure_tagged_with_stage(self):
        class FailingLlm:
            max_answer_chars = 100

            def complete(self, prompt):
                raise RuntimeError("connection refused")

        store, embedder = make_store([(0, 10, "text")])
        with pytest.raises(AdapterFailure) as err:
            answer_question(store, embedder, FailingLlm(), QueryContext("q", 0.0))
        assert err.value.stage == "llm"

    def test_empty_llm_answer_rejected(self):
        class EmptyLlm:
            max_answer_chars = 100

            def complete(self, prompt):
                return "   "

        store, embedder = make_store([(0, 10, "text")])
        with pytest.raises(AdapterFailure, match="empty answer"):
            answer_question(store, embedder, EmptyLlm(), QueryContext("q", 0.0))

    def test_timings_all_stages_nonnegative(self):
        store, embedder = make_store([(0, 10, "text")])
        answer = answer_question(store, embedder, EchoLlm(), QueryContext("q", 0.0))
        assert set(answer.timings) == {"retrieval", "llm"}
        assert all(v >= 0 for v in answer.timings.values())

    def test_grounding_no_foreign_lecture_text_in_prompt(self):
        sentinels = [f"sentinel number {i} phrase" for i in range(12)]
        spans = [(i * 30.0, i * 30.0 + 10, sentinels[i]) for i in range(12)]
        store, embedder = make_store(spans)
        ctx = QueryContext(sentinels[3], pause_time=95.0)
        from lectio.retrieval import retrieve

        cfg = RetrievalConfig(top_K=5, top_k=2)
        retrieved = retrieve(store, embedder, ctx, cfg)
        bundle = build_prompt(retrieved, ctx.question)
        included = {s.segment.text for s in retrieved}
        for sentinel in sentinels:
            if sentinel in included or sentinel == ctx.question:
                assert sentinel in bundle.rendered
            else:
                assert sentinel not in bundle.rendered

    def test_statelessness_store_dir_untouched(self, tmp_path):
        store, embedder = make_store([(0, 10, "alpha"), (10, 20, "beta")])
        out = save_store(store, tmp_path / "store")
        before = dir_hash(out)
        for i in range(5):
            answer_question(store, embedder, EchoLlm(), QueryContext(f"question {i}", float(i)))
        assert dir_hash(out) == before


class TestVoice:
    def test_mapped_fixture_transcribed(self, spoken_wav):
        asr = StubAsr({spoken_wav: "what is CT"})
        assert transcribe_voice_query(asr, spoken_wav) == "what is CT"

    def test_silence_is_no_speech_outcome(self, silence_wav):
        asr = StubAsr({})
        assert transcribe_voice_query(asr, silence_wav) is None

    def test_truncated_wav_is_format_error(self, spoken_wav):
        asr = StubAsr({})
        with pytest.raises(AudioFormatError):
            transcribe_voice_query(asr, spoken_wav[:20])

    def test_garbage_bytes_is_format_error(self):
        with pytest.raises(AudioFormatError):
            transcribe_voice_query(StubAsr({}), b"not audio at all")

    def test_stub_is_pure(self, spoken_wav):
        asr = StubAsr({spoken_wav: "repeatable"})
        assert asr.transcribe(spoken_wav) == asr.transcribe(spoken_wav)

    def test_low_confidence_maps_to_none(self):
        class Unsure:
            def transcribe(self, audio):
                from lectio.qa import TranscriptionResult

                return TranscriptionResult(text="maybe words", confident=False)

        assert transcribe_voice_query(Unsure(), wav_bytes(b"\x01\x00" * 100)) is None
