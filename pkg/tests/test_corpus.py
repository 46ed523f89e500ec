import json

import pytest
from hypothesis import given, strategies as st

from ragqa.corpus import (
    Document,
    IngestStats,
    TokenizerConfig,
    corpus_stats,
    ingest_jsonl,
    load_corpus,
    load_stopwords,
    tokenize,
)


def write_corpus(tmp_path, lines):
    path = tmp_path / "corpus.jsonl"
    path.write_text("\n".join(lines) + ("\n" if lines else ""), encoding="utf-8")
    return str(path)


class TestTokenize:
    def test_lowercase_and_punctuation_split(self):
        assert tokenize("Aspirin reduces fever.") == ["aspirin", "reduces", "fever"]

    def test_empty_text(self):
        assert tokenize("") == []

    def test_stopword_removal(self):
        config = TokenizerConfig(strip_stopwords=True, stopword_list=frozenset({"the"}))
        assert tokenize("the fever", config) == ["fever"]

    def test_underscore_is_a_separator(self):
        assert tokenize("foo_bar") == ["foo", "bar"]

    def test_no_lowercase_config(self):
        assert tokenize("Fever", TokenizerConfig(lowercase=False)) == ["Fever"]

    def test_packaged_stopword_list(self):
        words = load_stopwords()
        assert len(words) == 170
        assert {"the", "is", "with", "and"} <= words
        assert "fever" not in words

    @given(st.lists(st.from_regex(r"[a-z0-9]{1,8}", fullmatch=True), min_size=0, max_size=20))
    def test_idempotent_on_own_output(self, tokens):
        assert tokenize(" ".join(tokens)) == tokens

    @given(st.text(max_size=60))
    def test_never_emits_empty_tokens(self, text):
        assert all(tokens for tokens in tokenize(text))

    @given(st.text(max_size=60))
    def test_deterministic(self, text):
        config = TokenizerConfig.english()
        assert tokenize(text, config) == tokenize(text, config)


class TestDocument:
    def test_token_count_ignores_stopword_stripping(self):
        config = TokenizerConfig.english()
        doc = Document.build("7", "The study", "the the the fever", config)
        assert doc.token_count == 6

    @given(st.text(max_size=80))
    def test_token_count_zero_iff_no_alphanumerics(self, text):
        doc = Document.build("1", "", text)
        assert doc.token_count >= 0
        has_alnum = any(ch.isalnum() for ch in text)
        assert (doc.token_count == 0) == (not has_alnum)


class TestIngest:
    def test_direct_field_mapping(self, tmp_path):
        path = write_corpus(tmp_path, ['{"PMID":"123","title":"A","content":"B C"}'])
        docs, stats = load_corpus(path)
        assert len(docs) == 1
        assert docs[0].pmid == "123" and docs[0].token_count == 3
        assert stats.skipped == 0

    def test_empty_file(self, tmp_path):
        path = write_corpus(tmp_path, [])
        docs, stats = load_corpus(path)
        assert docs == [] and stats.skipped == 0

    def test_garbage_line_skipped_with_diagnostic(self, tmp_path):
        path = write_corpus(
            tmp_path,
            [
                '{"PMID":"1","title":"t","content":"a"}',
                "not json at all {{{",
                '{"PMID":"2","title":"t","content":"b"}',
            ],
        )
        docs, stats = load_corpus(path)
        assert [d.pmid for d in docs] == ["1", "2"]
        assert stats.skipped == 1
        assert "line 2" in stats.diagnostics[0]

    def test_duplicate_pmid_first_wins(self, tmp_path):
        path = write_corpus(
            tmp_path,
            [
                '{"PMID":"9","title":"first","content":"x"}',
                '{"PMID":"9","title":"second","content":"y"}',
            ],
        )
        docs, stats = load_corpus(path)
        assert len(docs) == 1 and docs[0].title == "first"
        assert stats.skipped == 1 and "duplicate" in stats.diagnostics[0]

    def test_non_digit_pmid_skipped(self, tmp_path):
        path = write_corpus(tmp_path, ['{"PMID":"ab12","title":"t","content":"x"}'])
        docs, stats = load_corpus(path)
        assert docs == [] and stats.skipped == 1

    def test_missing_field_skipped(self, tmp_path):
        path = write_corpus(tmp_path, ['{"PMID":"1","title":"t"}'])
        docs, stats = load_corpus(path)
        assert docs == [] and stats.skipped == 1

    def test_unreadable_file_is_fatal(self, tmp_path):
        with pytest.raises(OSError):
            list(ingest_jsonl(str(tmp_path / "missing.jsonl")))

    def test_reingest_is_identical(self, tmp_path):
        lines = [json.dumps({"PMID": str(i), "title": f"t{i}", "content": f"word{i} common"}) for i in range(20)]
        path = write_corpus(tmp_path, lines)
        first, _ = load_corpus(path)
        second, _ = load_corpus(path)
        assert first == second

    def test_streaming_populates_stats(self, tmp_path):
        path = write_corpus(tmp_path, ['{"PMID":"1","title":"t","content":"a b"}', "junk"])
        stats = IngestStats()
        docs = list(ingest_jsonl(path, None, stats))
        assert len(docs) == 1 and stats.read == 2 and stats.kept == 1 and stats.skipped == 1


class TestCorpusStats:
    def test_mean(self):
        docs = [Document("1", "", "", 2), Document("2", "", "", 4)]
        assert corpus_stats(docs) == {"doc_count": 2, "mean_token_count": 3.0}

    def test_empty(self):
        assert corpus_stats([]) == {"doc_count": 0, "mean_token_count": 0.0}

    def test_constant_corpus(self):
        docs = [Document(str(i), "", "", 296) for i in range(1000)]
        stats = corpus_stats(docs)
        assert stats["doc_count"] == 1000 and stats["mean_token_count"] == 296.0
