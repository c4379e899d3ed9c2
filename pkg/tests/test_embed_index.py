"""Stub embedder, exact search, and store persistence."""

from __future__ import annotations

import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import make_segments, make_store
from lectio.embedding import StubEmbedder, stub_embed
from lectio.errors import DimensionMismatchError, IndexBuildError, StoreError
from lectio.index import VectorIndex, build_index, search_top_k
from lectio.store import build_store, load_store, save_store
from oracles import brute_force_top_k


class TestStubEmbed:
    def test_deterministic(self):
        a = stub_embed("hello", 384)
        b = stub_embed("hello", 384)
        assert a.dtype == np.float32
        assert np.array_equal(a, b)

    def test_normalization_rule_folds_case_and_whitespace(self):
        assert np.array_equal(stub_embed("hello", 384), stub_embed("Hello ", 384))
        assert np.array_equal(stub_embed("a  b", 64), stub_embed("a b", 64))

    def test_unit_norm(self):
        for text in ("hello", "x", "some longer text with words"):
            assert abs(np.linalg.norm(stub_embed(text, 64).astype(np.float64)) - 1.0) < 1e-5

    def test_minimum_dimension(self):
        with pytest.raises(ValueError):
            stub_embed("hello", 4)

    def test_distinct_texts_distinct_vectors(self):
        assert not np.array_equal(stub_embed("alpha", 64), stub_embed("beta", 64))


class TestBuildIndex:
    def test_single_segment_self_search(self):
        store, embedder = make_store([(0, 10, "only segment")])
        hits = search_top_k(store.index, embedder.embed("only segment"), 5)
        assert len(hits) == 1
        assert hits[0][0] == "lec01-0000"
        assert hits[0][1] == pytest.approx(1.0, abs=1e-5)

    def test_self_retrieval_over_100_segments(self):
        spans = [(i * 10.0, i * 10.0 + 8.0, f"topic {i} details {i * 7}") for i in range(100)]
        store, embedder = make_store(spans)
        for sid in store.index.row_ids:
            top = search_top_k(store.index, embedder.embed(store.segment(sid).text), 1)
            assert top[0][0] == sid

    def test_duplicate_texts_equal_rows_both_retrievable(self):
        store, embedder = make_store([(0, 10, "same words"), (10, 20, "same words")])
        assert np.array_equal(store.index.matrix[0], store.index.matrix[1])
        hits = search_top_k(store.index, embedder.embed("same words"), 2)
        assert [h[0] for h in hits] == ["lec01-0000", "lec01-0001"]

    def test_empty_segments_rejected(self):
        with pytest.raises(IndexBuildError):
            build_index([], StubEmbedder(64))

    def test_embedder_failure_names_segment(self):
        class Broken(StubEmbedder):
            def embed(self, text):
                if "poison" in text:
                    raise RuntimeError("boom")
                return super().embed(text)

            def embed_batch(self, texts):
                return np.stack([self.embed(t) for t in texts])

        segments = make_segments([(0, 5, "fine"), (5, 10, "poison pill"), (10, 15, "fine two")])
        with pytest.raises(IndexBuildError, match="lec01-0001"):
            build_index(segments, Broken(64))


class TestSearchTopK:
    def test_k_larger_than_n_clamps(self):
        store, embedder = make_store([(0, 10, "a"), (10, 20, "b")])
        assert len(search_top_k(store.index, embedder.embed("a"), 10)) == 2

    def test_k_must_be_positive(self):
        store, embedder = make_store([(0, 10, "a")])
        with pytest.raises(ValueError):
            search_top_k(store.index, embedder.embed("a"), 0)

    def test_dimension_mismatch(self):
        store, _ = make_store([(0, 10, "a")], dimension=64)
        with pytest.raises(DimensionMismatchError):
            search_top_k(store.index, np.zeros(32, dtype=np.float32), 1)

    def test_matches_brute_force_with_planted_ties(self):
        rng = np.random.default_rng(7)
        n, d = 200, 48
        matrix = rng.standard_normal((n, d))
        matrix /= np.linalg.norm(matrix, axis=1, keepdims=True)
        matrix = matrix.astype(np.float32)
        matrix[50] = matrix[10]  # exact tie pair
        ids = [f"seg-{i:04d}" for i in range(n)]
        index = VectorIndex(matrix=matrix, row_ids=ids)
        query = rng.standard_normal(d)
        got = search_top_k(index, query, 10)
        want = brute_force_top_k(matrix, ids, query, 10)
        assert [g[0] for g in got] == [w[0] for w in want]
        for (_, got_score), (_, want_score) in zip(got, want):
            assert got_score == pytest.approx(want_score, abs=1e-9)


@given(st.text(min_size=0, max_size=40), st.text(min_size=0, max_size=40))
@settings(max_examples=60, deadline=None)
def test_inner_product_of_normalized_vectors_bounded(a, b):
    va = stub_embed(a or "x", 64).astype(np.float64)
    vb = stub_embed(b or "y", 64).astype(np.float64)
    assert -1 - 1e-5 <= float(va @ vb) <= 1 + 1e-5


@given(st.integers(min_value=1, max_value=120), st.integers(min_value=1, max_value=20),
       st.integers(min_value=0, max_value=2**31 - 1))
@settings(max_examples=40, deadline=None)
def test_search_oracle_equivalence_property(n, k, seed):
    rng = np.random.default_rng(seed)
    d = 16
    matrix = rng.standard_normal((n, d))
    matrix /= np.linalg.norm(matrix, axis=1, keepdims=True)
    matrix = matrix.astype(np.float32)
    ids = [f"s-{i:05d}" for i in range(n)]
    index = VectorIndex(matrix=matrix, row_ids=ids)
    query = rng.standard_normal(d)
    got = search_top_k(index, query, k)
    want = brute_force_top_k(matrix, ids, query, k)
    assert [g[0] for g in got] == [w[0] for w in want]


class TestStorePersistence:
    def test_round_trip_structural_equality(self, tmp_path):
        store, _ = make_store([(0, 10, "alpha beta"), (10, 20, "gamma delta")])
        save_store(store, tmp_path / "store")
        loaded = load_store(tmp_path / "store")
        assert np.array_equal(loaded.index.matrix, store.index.matrix)
        assert loaded.index.matrix.tobytes() == store.index.matrix.tobytes()
        assert loaded.index.row_ids == store.index.row_ids
        assert loaded.segments == store.segments
        assert loaded.metadata == store.metadata

    def test_tampered_dimension_fails_load(self, tmp_path):
        store, _ = make_store([(0, 10, "alpha")])
        out = save_store(store, tmp_path / "store")
        meta = json.loads((out / "meta.json").read_text())
        meta["dimension"] = 999
        (out / "meta.json").write_text(json.dumps(meta))
        with pytest.raises(StoreError, match="vectors file holds"):
            load_store(out)

    def test_missing_file_fails_load(self, tmp_path):
        store, _ = make_store([(0, 10, "alpha")])
        out = save_store(store, tmp_path / "store")
        (out / "vectors.f32").unlink()
        with pytest.raises(StoreError, match="missing vectors.f32"):
            load_store(out)

    def test_version_mismatch_fails_load(self, tmp_path):
        store, _ = make_store([(0, 10, "alpha")])
        out = save_store(store, tmp_path / "store")
        meta = json.loads((out / "meta.json").read_text())
        meta["format_version"] = 99
        (out / "meta.json").write_text(json.dumps(meta))
        with pytest.raises(StoreError, match="format_version"):
            load_store(out)

    def test_duplicate_segment_id_fails_load(self, tmp_path):
        store, _ = make_store([(0, 10, "alpha"), (10, 20, "beta")])
        out = save_store(store, tmp_path / "store")
        lines = (out / "segments.jsonl").read_text().splitlines()
        (out / "segments.jsonl").write_text("\n".join([lines[0], lines[0]]) + "\n")
        with pytest.raises(StoreError, match="duplicate segment id"):
            load_store(out)

    def test_two_lecture_store(self, tmp_path):
        embedder = StubEmbedder(64)
        segments = make_segments([(0, 10, "one"), (10, 20, "two")], lecture_id="lec01")
        segments += make_segments([(0, 10, "three")], lecture_id="lec02")
        store = build_store(segments, embedder, max_span=20.0)
        save_store(store, tmp_path / "store")
        loaded = load_store(tmp_path / "store")
        assert loaded.metadata.lecture_ids == ["lec01", "lec02"]
        assert len(loaded.metadata.lecture_ids) == 2
