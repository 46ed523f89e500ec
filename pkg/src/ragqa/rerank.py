"""Second-stage reranking of retrieval candidates with positive-score filtering.

Candidates are rescored jointly against the query; only strictly positive
relevance scores survive. Equal scores keep their incoming order, so the
first-stage ranking still breaks ties.
"""

from __future__ import annotations

import abc
import time
from dataclasses import dataclass
from typing import Sequence

import requests

from .corpus import Document, TokenizerConfig, tokenize
from .sparse import ScoredDoc


class RerankBackendError(RuntimeError):
    """Reranker backend failure; carries the wall-clock time spent so far."""

    def __init__(self, message: str, elapsed_ms: float = 0.0):
        super().__init__(message)
        self.elapsed_ms = elapsed_ms


class Reranker(abc.ABC):
    """Scores (query, document) pairs jointly; one finite real per document."""

    @abc.abstractmethod
    def score_pairs(self, query: str, documents: Sequence[Document]) -> list[float]:
        """Relevance scores aligned with the input documents."""


def overlap_rerank_score(query: str, doc: Document, config: TokenizerConfig | None = None) -> float:
    """Deterministic cross-encoder substitute: 2 * |Q intersect D| / |Q| - 1.

    Q and D are stopword-stripped token sets of the query and of the
    document's title + content. Range [-1, 1]; exactly 0 when half the query
    tokens are covered, which the strict positive filter then drops.
    """
    if config is None:
        config = TokenizerConfig.english()
    q_tokens = set(tokenize(query, config))
    if not q_tokens:
        raise ValueError("empty query")
    d_tokens = set(tokenize(doc.title + " " + doc.content, config))
    return 2.0 * (len(q_tokens & d_tokens) / len(q_tokens)) - 1.0


class OverlapReranker(Reranker):
    """Token-overlap reranker used as the hermetic fallback backend."""

    def __init__(self, config: TokenizerConfig | None = None):
        self.config = config or TokenizerConfig.english()

    def score_pairs(self, query: str, documents: Sequence[Document]) -> list[float]:
        return [overlap_rerank_score(query, doc, self.config) for doc in documents]


class RemoteReranker(Reranker):
    """Client for the rerank HTTP contract: POST /rerank {query, docs} -> {scores}."""

    def __init__(self, url: str, timeout: float = 30.0, batch_size: int = 32):
        self.url = url.rstrip("/")
        self.timeout = timeout
        self.batch_size = batch_size
        self._session = requests.Session()

    def score_pairs(self, query: str, documents: Sequence[Document]) -> list[float]:
        scores: list[float] = []
        for i in range(0, len(documents), self.batch_size):
            batch = documents[i : i + self.batch_size]
            body = {
                "query": query,
                "docs": [{"id": d.pmid, "text": d.title + " " + d.content} for d in batch],
            }
            resp = self._session.post(self.url + "/rerank", json=body, timeout=self.timeout)
            resp.raise_for_status()
            batch_scores = resp.json()["scores"]
            if len(batch_scores) != len(batch):
                raise ValueError(f"backend returned {len(batch_scores)} scores for {len(batch)} docs")
            scores.extend(float(s) for s in batch_scores)
        return scores


@dataclass
class RerankOutcome:
    """Kept candidates (all scores > 0, sorted descending) plus drop accounting."""

    kept: list[ScoredDoc]
    dropped_count: int
    rerank_time_ms: float


def rerank(
    reranker: Reranker,
    query: str,
    candidates: Sequence[tuple[ScoredDoc, Document]],
    keep_n: int,
) -> RerankOutcome:
    """Score all candidates, drop scores <= 0, sort descending, truncate to keep_n.

    The filter runs before truncation. Ties preserve incoming candidate
    order. Backend failures raise RerankBackendError carrying partial timing.
    """
    if not candidates:
        raise ValueError("no candidates to rerank")
    if keep_n < 1:
        raise ValueError("keep_n must be >= 1")
    started = time.perf_counter()
    try:
        scores = reranker.score_pairs(query, [doc for _, doc in candidates])
    except Exception as exc:
        if isinstance(exc, ValueError) and "empty query" in str(exc):
            raise
        elapsed_ms = (time.perf_counter() - started) * 1000.0
        raise RerankBackendError(f"rerank backend failed: {exc}", elapsed_ms=elapsed_ms) from exc
    if len(scores) != len(candidates):
        raise RerankBackendError(
            f"reranker returned {len(scores)} scores for {len(candidates)} candidates",
            elapsed_ms=(time.perf_counter() - started) * 1000.0,
        )
    positive = [(score, sd, doc) for score, (sd, doc) in zip(scores, candidates) if score > 0.0]
    positive.sort(key=lambda item: -item[0])  # stable: equal scores keep input order
    kept = [
        ScoredDoc(pmid=sd.pmid, score=float(score), rank=rank, stage="rerank")
        for rank, (score, sd, _) in enumerate(positive[:keep_n], 1)
    ]
    elapsed_ms = (time.perf_counter() - started) * 1000.0
    return RerankOutcome(kept=kept, dropped_count=len(candidates) - len(kept), rerank_time_ms=elapsed_ms)
