"""Sentence splitting, playback planning, the schedule driver, and cleanup."""

from __future__ import annotations

import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lectio.avatar import (
    ResponseSegment,
    ScriptedSegment,
    ScriptedSynth,
    SegmentStatus,
    SimClock,
    StubSynth,
    plan_playback,
    run_schedule,
    split_sentences,
    stall_intervals,
)
from lectio.media import MediaStore, TempResourceRegistry, cleanup_session
from oracles import canonical, replay_and_check, schedule_oracle


class TestSplitSentences:
    def test_short_sentences_merge_into_one(self):
        assert split_sentences("A. B! C?") == ["A. B! C?"]

    def test_single_long_sentence_identity(self):
        text = "one very long sentence that easily exceeds the merge threshold on its own"
        assert split_sentences(text) == [text]

    def test_two_long_sentences_split_at_period(self):
        text = ("Filtered backprojection applies a ramp filter. "
                "Then projections are smeared back across the image grid.")
        assert split_sentences(text) == [
            "Filtered backprojection applies a ramp filter.",
            "Then projections are smeared back across the image grid.",
        ]

    def test_abbreviations_do_not_split(self):
        text = "Consider Dr. Smith's view, e.g. the Fig. 3 case, which runs long enough. Second sentence also runs long enough here."
        parts = split_sentences(text)
        assert len(parts) == 2
        assert parts[0].endswith("runs long enough.")

    def test_reconstruction_by_joining(self):
        text = "First thing.  Second   thing! Third thing? And a fourth statement to finish."
        parts = split_sentences(text)
        assert " ".join(parts) == " ".join(text.split())

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            split_sentences("   ")


@given(st.lists(
    st.text(alphabet="abcdefg ", min_size=1, max_size=30).map(lambda s: s.strip() or "a"),
    min_size=1, max_size=10,
))
@settings(max_examples=60, deadline=None)
def test_split_reconstruction_property(words):
    text = ". ".join(words) + "."
    parts = split_sentences(text)
    assert " ".join(parts) == " ".join(text.split())


class TestPlanPlayback:
    def test_single_text(self):
        plan = plan_playback(["only one"], lookahead=2, preload_count=2)
        assert len(plan.segments) == 1
        assert plan.effective_preload == 1

    def test_preload_clamped_to_lookahead_window(self):
        plan = plan_playback(["a", "b", "c", "d"], lookahead=1, preload_count=4)
        assert plan.effective_preload == 2

    def test_validation(self):
        with pytest.raises(ValueError):
            plan_playback([])
        with pytest.raises(ValueError):
            plan_playback(["a"], lookahead=-1)
        with pytest.raises(ValueError):
            plan_playback(["a"], preload_count=0)

    def test_status_transitions_enforced(self):
        segment = ResponseSegment(seq=0, text="x")
        with pytest.raises(ValueError):
            segment.transition(SegmentStatus.READY)  # must synthesize first
        segment.transition(SegmentStatus.SYNTHESIZING)
        segment.transition(SegmentStatus.FAILED)
        with pytest.raises(ValueError):
            segment.transition(SegmentStatus.READY)


def scripted(latencies, durations, fails=None):
    texts = [f"scripted segment {i}" for i in range(len(latencies))]
    fails = fails or [False] * len(latencies)
    synth = ScriptedSynth({
        t: ScriptedSegment(latency_s=l, duration_s=d, fail=f)
        for t, l, d, f in zip(texts, latencies, durations, fails)
    })
    return texts, synth


class TestRunSchedule:
    def test_preload_and_window_trace(self):
        texts, synth = scripted([1.0] * 5, [3.0] * 5)
        plan = plan_playback(texts, lookahead=2, preload_count=2)
        events = run_schedule(plan, synth)
        requests = [(e.time, e.seq) for e in events if e.kind == "request_synth"]
        starts = {e.seq: e.time for e in events if e.kind == "play_start"}
        assert requests[:2] == [(0.0, 0), (0.0, 1)]
        assert (starts[0], 2) in requests
        assert (starts[1], 3) in requests
        assert (starts[2], 4) in requests

    def test_no_stall_constructed_trace(self):
        texts, synth = scripted([1.0] * 5, [3.0] * 5)
        plan = plan_playback(texts, lookahead=2, preload_count=2)
        events = run_schedule(plan, synth)
        assert stall_intervals(events) == []
        first_start = min(e.time for e in events if e.kind == "play_start")
        first_ready = min(e.time for e in events if e.kind == "ready" and e.seq == 0)
        assert first_start == first_ready == 1.0

    def test_slow_synth_stalls_match_oracle(self):
        latencies, durations = [4.0] * 5, [3.0] * 5
        texts, synth = scripted(latencies, durations)
        plan = plan_playback(texts, lookahead=2, preload_count=2)
        events = run_schedule(plan, synth)
        oracle_events = schedule_oracle(latencies, durations, [False] * 5)
        assert canonical(events) == canonical(oracle_events)
        assert stall_intervals(events) == stall_intervals(oracle_events)

    def test_failed_segment_skipped(self):
        texts, synth = scripted([1.0] * 4, [3.0] * 4, fails=[False, False, True, False])
        plan = plan_playback(texts, lookahead=2, preload_count=2)
        events = run_schedule(plan, synth)
        assert [e.seq for e in events if e.kind == "failed_skip"] == [2]
        assert [e.seq for e in events if e.kind == "play_start"] == [0, 1, 3]
        assert plan.segments[2].status is SegmentStatus.FAILED

    def test_all_failed_still_completes(self):
        texts, synth = scripted([1.0] * 3, [2.0] * 3, fails=[True] * 3)
        plan = plan_playback(texts, lookahead=2, preload_count=2)
        events = run_schedule(plan, synth)
        assert [e.kind for e in events if e.kind.startswith("play")] == []
        assert len([e for e in events if e.kind == "failed_skip"]) == 3

    def test_serial_lookahead_zero(self):
        texts, synth = scripted([1.0] * 4, [2.0] * 4)
        plan = plan_playback(texts, lookahead=0, preload_count=2)
        events = run_schedule(plan, synth)
        request_times = {e.seq: e.time for e in events if e.kind == "request_synth"}
        play_ends = {e.seq: e.time for e in events if e.kind == "play_end"}
        assert request_times[0] == 0.0
        for seq in (1, 2, 3):
            assert request_times[seq] == play_ends[seq - 1]

    def test_clock_ends_at_last_event(self):
        clock = SimClock()
        texts, synth = scripted([0.5, 2.0, 1.0], [1.0, 1.0, 1.0])
        events = run_schedule(plan_playback(texts), synth, clock=clock)
        assert clock.now == max(e.time for e in events)

    def test_media_store_materializes_files(self, tmp_path):
        plan = plan_playback(["hello there this is a segment"], lookahead=2, preload_count=2)
        media = MediaStore("sess01", root=tmp_path)
        events = run_schedule(plan, StubSynth(), media=media)
        assert (tmp_path / "sess01" / "seg_0.mp4").is_file()
        assert plan.segments[0].media_ref == str(tmp_path / "sess01" / "seg_0.mp4")
        assert any(e.kind == "play_end" for e in events)

    def test_random_traces_match_oracle(self):
        rng = random.Random(42)
        for _ in range(60):
            n = rng.randint(1, 12)
            latencies = [round(rng.uniform(0.5, 8.0), 3) for _ in range(n)]
            durations = [round(rng.uniform(1.0, 6.0), 3) for _ in range(n)]
            fails = [rng.random() < 0.15 for _ in range(n)]
            texts, synth = scripted(latencies, durations, fails)
            plan = plan_playback(texts, lookahead=2, preload_count=2)
            events = run_schedule(plan, synth)
            oracle_events = schedule_oracle(latencies, durations, fails)
            assert canonical(events) == canonical(oracle_events)
            replay_and_check(events, n, lookahead=2)
            plan.validate()

    def test_no_stall_sufficiency_property(self):
        # latency(i) <= playback time of the previous `lookahead` segments
        # guarantees a stall-free log (after the first start)
        rng = random.Random(9)
        lookahead = 2
        for _ in range(40):
            n = rng.randint(2, 12)
            durations = [round(rng.uniform(1.0, 6.0), 3) for _ in range(n)]
            latencies = []
            for i in range(n):
                window = sum(durations[max(0, i - lookahead): i]) if i else rng.uniform(0.5, 8.0)
                cap = window if i else 8.0
                latencies.append(round(rng.uniform(0.1, max(0.1, cap)), 3))
            texts, synth = scripted(latencies, durations)
            plan = plan_playback(texts, lookahead=lookahead, preload_count=2)
            events = run_schedule(plan, synth)
            assert stall_intervals(events) == [], (latencies, durations)


class TestCleanup:
    def test_all_registered_deleted(self, tmp_path):
        registry = TempResourceRegistry(session_id="s", session_dir=tmp_path / "s")
        (tmp_path / "s").mkdir()
        for i in range(3):
            path = tmp_path / "s" / f"seg_{i}.mp4"
            path.write_bytes(b"media")
            registry.register(path)
        report = cleanup_session(registry)
        assert len(report.deleted) == 3
        assert registry.paths == set()
        assert not (tmp_path / "s").exists()

    def test_double_cleanup_deletes_zero(self, tmp_path):
        registry = TempResourceRegistry(session_id="s", session_dir=tmp_path / "s")
        (tmp_path / "s").mkdir()
        path = tmp_path / "s" / "seg_0.mp4"
        path.write_bytes(b"media")
        registry.register(path)
        cleanup_session(registry)
        second = cleanup_session(registry)
        assert second.deleted == []
        assert second.already_absent == []

    def test_externally_removed_reported_absent(self, tmp_path):
        registry = TempResourceRegistry(session_id="s", session_dir=tmp_path / "s")
        (tmp_path / "s").mkdir()
        paths = []
        for i in range(3):
            path = tmp_path / "s" / f"seg_{i}.mp4"
            path.write_bytes(b"media")
            registry.register(path)
            paths.append(path)
        paths[1].unlink()
        report = cleanup_session(registry)
        assert len(report.deleted) == 2
        assert len(report.already_absent) == 1

    def test_media_store_place_registers(self, tmp_path):
        media = MediaStore("abc", root=tmp_path)
        path = media.place(0, b"payload")
        assert path.read_bytes() == b"payload"
        assert path in media.registry.paths
        report = cleanup_session(media.registry)
        assert report.deleted == [str(path)]
        assert not media.dir.exists()


class TestStubSynth:
    def test_duration_scales_with_length(self):
        synth = StubSynth()
        result = synth.synthesize("x" * 100)
        assert result.duration_s == pytest.approx(6.0)
        assert result.payload.startswith(b"\x00\x00\x00\x18ftyp")
        assert result.tts_s is not None and result.render_s is not None

    def test_plan_invariant_media_ref_only_when_ready(self):
        texts, synth = scripted([1.0, 1.0], [2.0, 2.0], fails=[False, True])
        plan = plan_playback(texts)
        run_schedule(plan, synth)
        plan.validate()
        assert plan.segments[1].media_ref is None
