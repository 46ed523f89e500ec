import numpy as np
import pytest

from ragqa.corpus import Document
from ragqa.dense import (
    DenseIndex,
    EmbedderError,
    MockEmbedder,
    RemoteEmbedder,
    build_dense,
    l2_search,
    load_dense,
    mock_embed,
    save_dense,
)


def l2_oracle(index: DenseIndex, query: np.ndarray, k: int):
    """Full sort of every row by squared distance, ties by numeric pmid."""
    d2 = ((index.vectors - query) ** 2).sum(axis=1)
    order = sorted(range(len(index.pmids)), key=lambda i: (d2[i], int(index.pmids[i])))
    return [(index.pmids[i], -float(d2[i])) for i in order[:k]]


def random_index(rng, n, d):
    vectors = rng.standard_normal((n, d))
    pmids = [str(p) for p in rng.permutation(np.arange(1, n + 1))]
    return DenseIndex(dim=d, vectors=vectors, pmids=pmids)


class TestMockEmbed:
    def test_deterministic(self):
        a = mock_embed("x", 8)
        b = mock_embed("x", 8)
        assert np.array_equal(a, b)

    def test_empty_text_zero_vector(self):
        assert np.array_equal(mock_embed("", 8), np.zeros(8))

    def test_token_multiset_determines_vector(self):
        assert np.array_equal(mock_embed("alpha beta alpha", 16), mock_embed("beta, ALPHA alpha!", 16))

    def test_unit_norm_when_nonempty(self):
        assert np.linalg.norm(mock_embed("some words here", 32)) == pytest.approx(1.0)

    def test_batch_matches_single(self):
        embedder = MockEmbedder(dim=12)
        texts = ["one two", "three", "four five six"]
        batch = embedder.batch_embed(texts)
        for i, text in enumerate(texts):
            assert np.array_equal(batch[i], embedder.embed(text))


class TestBuild:
    def test_shape(self):
        docs = [Document.build("1", "t", "alpha"), Document.build("2", "t", "beta")]
        index = build_dense(docs, MockEmbedder(dim=4))
        assert index.vectors.shape == (2, 4)
        assert index.pmids == ["1", "2"]

    def test_empty_corpus_rejected(self):
        with pytest.raises(ValueError, match="empty corpus"):
            build_dense([], MockEmbedder(dim=4))

    def test_failure_reports_completed_rows(self):
        class Flaky(MockEmbedder):
            calls = 0

            def batch_embed(self, texts):
                Flaky.calls += 1
                if Flaky.calls > 1:
                    raise RuntimeError("backend down")
                return super().batch_embed(texts)

        docs = [Document.build(str(i), "", f"w{i}") for i in range(1, 8)]
        with pytest.raises(EmbedderError, match="aborted after 3 of 7"):
            build_dense(docs, Flaky(dim=4), batch_size=3)


class TestL2Search:
    def test_self_retrieval_identity(self):
        rng = np.random.default_rng(0)
        index = random_index(rng, 50, 8)
        results = l2_search(index, index.vectors[17], 1)
        assert results[0].pmid == index.pmids[17]
        assert results[0].score == 0.0

    def test_one_dimensional_example(self):
        index = DenseIndex(dim=1, vectors=np.array([[0.0], [3.0]]), pmids=["1", "2"])
        results = l2_search(index, np.array([1.0]), 2)
        assert [(r.pmid, r.score) for r in results] == [("1", -1.0), ("2", -4.0)]

    def test_matches_full_sort_oracle(self):
        rng = np.random.default_rng(7)
        index = random_index(rng, 100, 8)
        for _ in range(25):
            query = rng.standard_normal(8)
            expected = l2_oracle(index, query, 10)
            got = l2_search(index, query, 10)
            assert [(r.pmid, r.score) for r in got] == expected

    def test_tie_break_by_numeric_pmid(self):
        vectors = np.array([[1.0, 0.0], [1.0, 0.0], [5.0, 5.0]])
        index = DenseIndex(dim=2, vectors=vectors, pmids=["11", "2", "1"])
        results = l2_search(index, np.array([0.0, 0.0]), 3)
        assert [r.pmid for r in results] == ["2", "11", "1"]

    def test_dimension_mismatch(self):
        index = DenseIndex(dim=4, vectors=np.zeros((2, 4)), pmids=["1", "2"])
        with pytest.raises(ValueError, match="dimension"):
            l2_search(index, np.zeros(3), 1)

    def test_result_list_invariants(self):
        rng = np.random.default_rng(3)
        index = random_index(rng, 40, 6)
        results = l2_search(index, rng.standard_normal(6), 12)
        assert len(results) == 12
        assert [r.rank for r in results] == list(range(1, 13))
        assert all(a.score >= b.score for a, b in zip(results, results[1:]))
        assert all(r.stage == "dense" for r in results)


class TestRemoteEmbedder:
    def test_contract_round_trip(self, json_server):
        def embed(body):
            return 200, {"vectors": [[float(len(t)), 1.0] for t in body["texts"]]}

        url = json_server({"/embed": embed})
        embedder = RemoteEmbedder(url, dim=2)
        out = embedder.batch_embed(["ab", "abcd"])
        assert out.tolist() == [[2.0, 1.0], [4.0, 1.0]]
        assert embedder.embed("xyz").tolist() == [3.0, 1.0]

    def test_bad_shape_rejected(self, json_server):
        url = json_server({"/embed": lambda body: (200, {"vectors": [[1.0]]})})
        embedder = RemoteEmbedder(url, dim=3)
        with pytest.raises(EmbedderError, match="shape"):
            embedder.embed("hello")

    def test_backend_error_wrapped(self, json_server):
        url = json_server({"/embed": lambda body: (500, {"error": "boom"})})
        embedder = RemoteEmbedder(url, dim=2)
        with pytest.raises(EmbedderError):
            embedder.embed("hello")


class TestSnapshot:
    def test_round_trip(self, tmp_path):
        docs = [Document.build(str(i), "t", f"token{i} shared") for i in range(1, 6)]
        index = build_dense(docs, MockEmbedder(dim=8))
        path = str(tmp_path / "dense.npz")
        save_dense(index, path)
        loaded = load_dense(path)
        assert loaded.dim == 8 and loaded.pmids == index.pmids
        assert np.array_equal(loaded.vectors, index.vectors)
        query = index.vectors[2]
        assert [r.pmid for r in l2_search(loaded, query, 3)] == [r.pmid for r in l2_search(index, query, 3)]
