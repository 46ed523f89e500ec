"""Exhaustive flat L2 vector index with a pluggable text-embedding interface.

The index is an N x d float matrix scanned in full for every query (no
approximate structures). Scores are negated squared Euclidean distances so
result lists share the non-increasing-score invariant with sparse search.
"""

from __future__ import annotations

import abc
import hashlib
import time
from dataclasses import dataclass

import numpy as np
import requests

from .corpus import Document, TokenizerConfig, tokenize
from .sparse import ScoredDoc

DENSE_FORMAT = "ragqa-dense-index"
DENSE_VERSION = 1


class EmbedderError(RuntimeError):
    """Raised when an embedding backend fails or returns malformed output."""


class Embedder(abc.ABC):
    """Text-to-vector backend; deterministic for a fixed configuration."""

    dim: int

    @abc.abstractmethod
    def embed(self, text: str) -> np.ndarray:
        """Embed one text into a length-dim float vector."""

    def batch_embed(self, texts: list[str]) -> np.ndarray:
        """Embed texts in order; row i equals embed(texts[i])."""
        if not texts:
            return np.zeros((0, self.dim), dtype=np.float64)
        return np.stack([self.embed(t) for t in texts])


def mock_embed(text: str, d: int) -> np.ndarray:
    """Deterministic hash-based embedding: token multiset bucketed into d counts.

    Counts are L2-normalized; an empty token multiset yields the zero vector
    (left unnormalized by design).
    """
    if d < 1:
        raise ValueError("dimension must be >= 1")
    vec = np.zeros(d, dtype=np.float64)
    for token in tokenize(text, TokenizerConfig()):
        digest = hashlib.blake2b(token.encode("utf-8"), digest_size=8).digest()
        vec[int.from_bytes(digest, "big") % d] += 1.0
    norm = float(np.linalg.norm(vec))
    if norm > 0.0:
        vec /= norm
    return vec


class MockEmbedder(Embedder):
    """Hermetic stand-in for a neural encoder service."""

    def __init__(self, dim: int = 64):
        if dim < 1:
            raise ValueError("dimension must be >= 1")
        self.dim = dim

    def embed(self, text: str) -> np.ndarray:
        return mock_embed(text, self.dim)


class RemoteEmbedder(Embedder):
    """Client for the embedding HTTP contract: POST /embed {texts} -> {vectors}."""

    def __init__(self, url: str, dim: int, timeout: float = 30.0, batch_size: int = 64):
        self.url = url.rstrip("/")
        self.dim = dim
        self.timeout = timeout
        self.batch_size = batch_size
        self._session = requests.Session()

    def _call(self, texts: list[str]) -> np.ndarray:
        try:
            resp = self._session.post(self.url + "/embed", json={"texts": texts}, timeout=self.timeout)
            resp.raise_for_status()
            vectors = resp.json()["vectors"]
        except Exception as exc:
            raise EmbedderError(f"embedding backend failed: {exc}") from exc
        arr = np.asarray(vectors, dtype=np.float64)
        if arr.shape != (len(texts), self.dim):
            raise EmbedderError(f"backend returned shape {arr.shape}, expected ({len(texts)}, {self.dim})")
        return arr

    def embed(self, text: str) -> np.ndarray:
        return self._call([text])[0]

    def batch_embed(self, texts: list[str]) -> np.ndarray:
        if not texts:
            return np.zeros((0, self.dim), dtype=np.float64)
        chunks = [self._call(texts[i : i + self.batch_size]) for i in range(0, len(texts), self.batch_size)]
        return np.concatenate(chunks)


@dataclass
class DenseIndex:
    """Flat embedding matrix with one row per document."""

    dim: int
    vectors: np.ndarray  # (N, dim) float64
    pmids: list[str]
    build_seconds: float = 0.0

    def __post_init__(self) -> None:
        self._pmid_ints = np.array([int(p) for p in self.pmids], dtype=np.int64)

    @property
    def doc_count(self) -> int:
        return len(self.pmids)


def build_dense(docs: list[Document], embedder: Embedder, batch_size: int = 64) -> DenseIndex:
    """Embed title + content of every document into a flat index.

    An embedder failure aborts the build; the error reports how many rows
    had completed.
    """
    if not docs:
        raise ValueError("empty corpus")
    started = time.perf_counter()
    rows: list[np.ndarray] = []
    texts = [d.title + " " + d.content for d in docs]
    for i in range(0, len(texts), batch_size):
        try:
            rows.append(embedder.batch_embed(texts[i : i + batch_size]))
        except Exception as exc:
            done = sum(len(r) for r in rows)
            raise EmbedderError(f"embedding aborted after {done} of {len(docs)} rows: {exc}") from exc
    vectors = np.concatenate(rows) if rows else np.zeros((0, embedder.dim))
    elapsed = time.perf_counter() - started
    return DenseIndex(
        dim=embedder.dim,
        vectors=vectors,
        pmids=[d.pmid for d in docs],
        build_seconds=elapsed,
    )


def l2_search(index: DenseIndex, query_vec: np.ndarray, k: int) -> list[ScoredDoc]:
    """k nearest rows by squared Euclidean distance (exhaustive scan).

    score = -distance; exact ties break by ascending numeric PMID.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    q = np.asarray(query_vec, dtype=np.float64)
    if q.shape != (index.dim,):
        raise ValueError(f"query vector has shape {q.shape}, index dimension is {index.dim}")
    diffs = index.vectors - q
    distances = (diffs * diffs).sum(axis=1)
    order = np.lexsort((index._pmid_ints, distances))[:k]
    return [
        ScoredDoc(pmid=index.pmids[ref], score=-float(distances[ref]), rank=rank, stage="dense")
        for rank, ref in enumerate(order, 1)
    ]


def save_dense(index: DenseIndex, path: str) -> None:
    """Write a version-tagged .npz snapshot."""
    np.savez(
        path,
        format=DENSE_FORMAT,
        version=DENSE_VERSION,
        dim=index.dim,
        vectors=index.vectors,
        pmids=np.array(index.pmids, dtype=object),
    )


def load_dense(path: str) -> DenseIndex:
    """Load a snapshot written by save_dense."""
    with np.load(path, allow_pickle=True) as data:
        if str(data["format"]) != DENSE_FORMAT:
            raise ValueError(f"not a dense index snapshot: {path}")
        if int(data["version"]) != DENSE_VERSION:
            raise ValueError(f"unsupported dense snapshot version {int(data['version'])}")
        return DenseIndex(
            dim=int(data["dim"]),
            vectors=np.asarray(data["vectors"], dtype=np.float64),
            pmids=[str(p) for p in data["pmids"]],
        )
