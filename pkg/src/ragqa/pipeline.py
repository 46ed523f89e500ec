"""Retrieval strategy composition with per-stage timing instrumentation.

Strategies: bm25 / tfidf (single-stage sparse), dense (single-stage vector),
hybrid (sparse candidate generation at depth k, then reranking down to
keep_n). All timings are wall-clock from a monotonic source, in ms.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

from .corpus import Document, TokenizerConfig
from .dense import DenseIndex, Embedder, l2_search
from .generate import (
    GenerationError,
    Generator,
    QAResult,
    build_prompt,
    parse_answer,
)
from .rerank import Reranker, rerank
from .sparse import InvertedIndex, ScoredDoc, bm25_search, tfidf_search

STRATEGIES = ("bm25", "tfidf", "dense", "hybrid")


class StageFailure(RuntimeError):
    """A pipeline stage failed; carries the stage name for error reporting."""

    def __init__(self, stage: str, message: str):
        super().__init__(message)
        self.stage = stage


@dataclass(frozen=True)
class RetrievalConfig:
    """Strategy plus depth parameters; hybrid requires keep_n <= depth."""

    strategy: str = "hybrid"
    depth: int = 50
    keep_n: int = 10
    tokenizer: TokenizerConfig = field(default_factory=TokenizerConfig.english)

    def __post_init__(self) -> None:
        if self.strategy not in STRATEGIES:
            raise ValueError(f"unknown strategy {self.strategy!r}; expected one of {STRATEGIES}")
        if self.depth < 1 or self.keep_n < 1:
            raise ValueError("depth and keep_n must be >= 1")
        if self.strategy == "hybrid" and self.keep_n > self.depth:
            raise ValueError(f"keep_n ({self.keep_n}) must not exceed depth ({self.depth}) for hybrid")


@dataclass
class Timings:
    """Per-stage wall-clock milliseconds; total includes orchestration overhead."""

    retrieval_ms: float = 0.0
    rerank_ms: float = 0.0
    generation_ms: float = 0.0
    total_ms: float = 0.0


@dataclass
class Indexes:
    """Immutable shared state for a pipeline: indexes plus a PMID->Document map."""

    sparse: InvertedIndex | None = None
    dense: DenseIndex | None = None
    embedder: Embedder | None = None
    documents: dict[str, Document] = field(default_factory=dict)


def retrieve(
    question: str,
    config: RetrievalConfig,
    indexes: Indexes,
    reranker: Reranker | None = None,
) -> tuple[list[ScoredDoc], Timings]:
    """Run the configured retrieval strategy; fills retrieval_ms and rerank_ms.

    Raises ValueError for an empty query, StageFailure for a missing index or
    a failed rerank/embedding backend (no silent fallback).
    """
    timings = Timings()
    if config.strategy in ("bm25", "tfidf"):
        if indexes.sparse is None:
            raise StageFailure("retrieval", "sparse index not loaded")
        search = bm25_search if config.strategy == "bm25" else tfidf_search
        started = time.perf_counter()
        docs = search(indexes.sparse, question, config.keep_n)
        timings.retrieval_ms = (time.perf_counter() - started) * 1000.0
        return docs, timings

    if config.strategy == "dense":
        if indexes.dense is None or indexes.embedder is None:
            raise StageFailure("retrieval", "dense index or embedder not loaded")
        started = time.perf_counter()
        try:
            query_vec = indexes.embedder.embed(question)
        except Exception as exc:
            raise StageFailure("embed", f"query embedding failed: {exc}") from exc
        docs = l2_search(indexes.dense, query_vec, config.keep_n)
        timings.retrieval_ms = (time.perf_counter() - started) * 1000.0
        return docs, timings

    # hybrid: sparse candidates at depth, then rerank down to keep_n
    if indexes.sparse is None:
        raise StageFailure("retrieval", "sparse index not loaded")
    if reranker is None:
        raise StageFailure("rerank", "no reranker configured for hybrid retrieval")
    started = time.perf_counter()
    candidates = bm25_search(indexes.sparse, question, config.depth)
    timings.retrieval_ms = (time.perf_counter() - started) * 1000.0
    if not candidates:
        return [], timings
    pairs = [(sd, indexes.documents[sd.pmid]) for sd in candidates]
    try:
        outcome = rerank(reranker, question, pairs, config.keep_n)
    except ValueError:
        raise
    except Exception as exc:
        raise StageFailure("rerank", str(exc)) from exc
    timings.rerank_ms = outcome.rerank_time_ms
    return outcome.kept, timings


def answer_question(
    question: str,
    config: RetrievalConfig,
    indexes: Indexes,
    reranker: Reranker | None,
    generator: Generator,
) -> QAResult:
    """Full round trip: retrieve, build prompt, generate, parse, validate.

    Zero retrieved documents still reach the generator (empty context) and
    flag the result no_context; stage errors propagate as StageFailure.
    """
    started = time.perf_counter()
    docs, timings = retrieve(question, config, indexes, reranker)
    flags: set[str] = set()
    if not docs:
        flags.add("no_context")
    pairs = [(sd, indexes.documents[sd.pmid]) for sd in docs]
    bundle = build_prompt(question, pairs)
    gen_started = time.perf_counter()
    try:
        raw = generator.complete(bundle.system_text, bundle.user_text, bundle.context_text, temperature=0.0)
    except Exception as exc:
        raise StageFailure("generation", str(exc)) from exc
    timings.generation_ms = (time.perf_counter() - gen_started) * 1000.0
    try:
        parsed = parse_answer(raw, {sd.pmid for sd in docs})
    except GenerationError as exc:
        raise StageFailure("generation", str(exc)) from exc
    flags |= set(parsed.flags)
    timings.total_ms = (time.perf_counter() - started) * 1000.0
    return QAResult(
        response=parsed.response,
        used_pmids=parsed.used_pmids,
        documents=docs,
        timings=timings,
        flags=flags,
    )


@dataclass
class Engine:
    """Bundles immutable indexes and backends for the service and the bench."""

    indexes: Indexes
    reranker: Reranker | None = None
    generator: Generator | None = None
    config: RetrievalConfig = field(default_factory=RetrievalConfig)

    def answer(self, question: str, config: RetrievalConfig | None = None) -> QAResult:
        if self.generator is None:
            raise StageFailure("generation", "no generator configured")
        return answer_question(question, config or self.config, self.indexes, self.reranker, self.generator)
