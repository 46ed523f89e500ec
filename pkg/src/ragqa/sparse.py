"""In-memory inverted index with BM25 and TF-IDF ranked retrieval.

BM25 uses the Okapi scoring function with the smoothed idf variant
ln(1 + (N - df + 0.5) / (df + 0.5)) and parameters k1=1.2, b=0.75. Documents
sharing no query term are excluded; ties break by ascending numeric PMID.
TF-IDF is the baseline scorer tf * ln(N / df); it keeps matching documents
even when their score is exactly 0 (the df == N edge).
"""

from __future__ import annotations

import json
import math
import time
from collections import Counter
from dataclasses import dataclass, field

from .corpus import Document, TokenizerConfig, tokenize

K1 = 1.2
B = 0.75

SPARSE_FORMAT = "ragqa-sparse-index"
SPARSE_VERSION = 1


@dataclass(frozen=True)
class ScoredDoc:
    """A retrieval candidate with its stage provenance.

    Within one result list ranks are consecutive from 1 and scores are
    non-increasing.
    """

    pmid: str
    score: float
    rank: int
    stage: str  # "sparse" | "dense" | "rerank"


@dataclass
class InvertedIndex:
    """Term postings plus the corpus statistics BM25 needs (tf, dl, avgdl, N, df)."""

    postings: dict[str, list[tuple[int, int]]]  # term -> [(doc_ref, tf)], doc_ref ascending
    doc_lengths: list[int]  # doc_ref -> token count after config is applied
    doc_table: list[Document]  # doc_ref -> Document
    doc_count: int
    avg_doc_length: float
    config: TokenizerConfig
    pmid_to_ref: dict[str, int] = field(default_factory=dict)
    build_seconds: float = 0.0

    @property
    def docs_per_second(self) -> float:
        if self.build_seconds <= 0:
            return 0.0
        return self.doc_count / self.build_seconds

    def document(self, pmid: str) -> Document:
        return self.doc_table[self.pmid_to_ref[pmid]]

    def document_map(self) -> dict[str, Document]:
        return {d.pmid: d for d in self.doc_table}


def build_sparse(docs: list[Document], config: TokenizerConfig | None = None) -> InvertedIndex:
    """Index a document collection; raises ValueError("empty corpus") on no docs."""
    if not docs:
        raise ValueError("empty corpus")
    if config is None:
        config = TokenizerConfig.english()
    started = time.perf_counter()
    postings: dict[str, list[tuple[int, int]]] = {}
    doc_lengths: list[int] = []
    pmid_to_ref: dict[str, int] = {}
    for ref, doc in enumerate(docs):
        if doc.pmid in pmid_to_ref:
            raise ValueError(f"duplicate PMID {doc.pmid}")
        pmid_to_ref[doc.pmid] = ref
        tokens = tokenize(doc.title + " " + doc.content, config)
        doc_lengths.append(len(tokens))
        for term, tf in Counter(tokens).items():
            postings.setdefault(term, []).append((ref, tf))
    n = len(docs)
    avgdl = sum(doc_lengths) / n
    elapsed = time.perf_counter() - started
    return InvertedIndex(
        postings=postings,
        doc_lengths=doc_lengths,
        doc_table=list(docs),
        doc_count=n,
        avg_doc_length=avgdl,
        config=config,
        pmid_to_ref=pmid_to_ref,
        build_seconds=elapsed,
    )


def _query_tokens(index: InvertedIndex, query: str) -> list[str]:
    tokens = tokenize(query, index.config)
    if not tokens:
        raise ValueError("empty query")
    return tokens


def _ranked(index: InvertedIndex, scores: dict[int, float], k: int, stage: str) -> list[ScoredDoc]:
    table = index.doc_table
    order = sorted(scores.items(), key=lambda item: (-item[1], int(table[item[0]].pmid)))
    return [
        ScoredDoc(pmid=table[ref].pmid, score=score, rank=rank, stage=stage)
        for rank, (ref, score) in enumerate(order[:k], 1)
    ]


def bm25_search(index: InvertedIndex, query: str, k: int) -> list[ScoredDoc]:
    """Top-k documents by Okapi BM25; repeated query tokens contribute per occurrence."""
    if k < 1:
        raise ValueError("k must be >= 1")
    tokens = _query_tokens(index, query)
    n = index.doc_count
    avgdl = index.avg_doc_length
    scores: dict[int, float] = {}
    for term in tokens:
        plist = index.postings.get(term)
        if not plist:
            continue
        df = len(plist)
        idf = math.log(1.0 + (n - df + 0.5) / (df + 0.5))
        for ref, tf in plist:
            norm = K1 * (1.0 - B + B * index.doc_lengths[ref] / avgdl)
            scores[ref] = scores.get(ref, 0.0) + idf * tf * (K1 + 1.0) / (tf + norm)
    return _ranked(index, scores, k, "sparse")


def tfidf_search(index: InvertedIndex, query: str, k: int) -> list[ScoredDoc]:
    """Top-k by tf * ln(N / df); matching docs are retained even at score 0."""
    if k < 1:
        raise ValueError("k must be >= 1")
    tokens = _query_tokens(index, query)
    n = index.doc_count
    scores: dict[int, float] = {}
    for term in tokens:
        plist = index.postings.get(term)
        if not plist:
            continue
        weight = math.log(n / len(plist))
        for ref, tf in plist:
            scores[ref] = scores.get(ref, 0.0) + tf * weight
    return _ranked(index, scores, k, "sparse")


def save_sparse(index: InvertedIndex, path: str) -> None:
    """Write a version-tagged JSON snapshot of the index."""
    payload = {
        "format": SPARSE_FORMAT,
        "version": SPARSE_VERSION,
        "config": {
            "lowercase": index.config.lowercase,
            "strip_stopwords": index.config.strip_stopwords,
            "stopword_list": sorted(index.config.stopword_list),
        },
        "documents": [
            {"pmid": d.pmid, "title": d.title, "content": d.content, "token_count": d.token_count}
            for d in index.doc_table
        ],
        "doc_lengths": index.doc_lengths,
        "postings": {term: [[ref, tf] for ref, tf in plist] for term, plist in index.postings.items()},
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh)


def load_sparse(path: str) -> InvertedIndex:
    """Load a snapshot written by save_sparse; rejects unknown formats/versions."""
    with open(path, "r", encoding="utf-8") as fh:
        payload = json.load(fh)
    if payload.get("format") != SPARSE_FORMAT:
        raise ValueError(f"not a sparse index snapshot: {path}")
    if payload.get("version") != SPARSE_VERSION:
        raise ValueError(f"unsupported sparse snapshot version {payload.get('version')}")
    config = TokenizerConfig(
        lowercase=payload["config"]["lowercase"],
        strip_stopwords=payload["config"]["strip_stopwords"],
        stopword_list=frozenset(payload["config"]["stopword_list"]),
    )
    docs = [Document(**d) for d in payload["documents"]]
    doc_lengths = list(payload["doc_lengths"])
    postings = {term: [(ref, tf) for ref, tf in plist] for term, plist in payload["postings"].items()}
    n = len(docs)
    if n == 0:
        raise ValueError("empty corpus")
    return InvertedIndex(
        postings=postings,
        doc_lengths=doc_lengths,
        doc_table=docs,
        doc_count=n,
        avg_doc_length=sum(doc_lengths) / n,
        config=config,
        pmid_to_ref={d.pmid: ref for ref, d in enumerate(docs)},
    )
