"""Two-stage retrieval question answering over abstract-sized corpora.

Offline: ingest a newline-delimited JSON corpus and build sparse (BM25 /
TF-IDF) and dense (flat L2) indexes. Online: retrieve candidates, optionally
rerank them with positive-score filtering, and generate a cited answer
through a chat-completions-compatible backend (or hermetic stubs). The
evalbench package reproduces the retriever-comparison, depth-sweep and
latency experiment grids.
"""

__version__ = "0.1.0"

from .corpus import Document, TokenizerConfig, corpus_stats, ingest_jsonl, load_corpus, tokenize
from .dense import DenseIndex, Embedder, MockEmbedder, build_dense, l2_search, mock_embed
from .generate import QAResult, build_prompt, classify_yes_no, parse_answer, stub_generate
from .pipeline import Engine, Indexes, RetrievalConfig, Timings, answer_question, retrieve
from .rerank import OverlapReranker, RerankOutcome, overlap_rerank_score, rerank
from .sparse import InvertedIndex, ScoredDoc, bm25_search, build_sparse, tfidf_search

__all__ = [
    "Document",
    "TokenizerConfig",
    "corpus_stats",
    "ingest_jsonl",
    "load_corpus",
    "tokenize",
    "DenseIndex",
    "Embedder",
    "MockEmbedder",
    "build_dense",
    "l2_search",
    "mock_embed",
    "QAResult",
    "build_prompt",
    "classify_yes_no",
    "parse_answer",
    "stub_generate",
    "Engine",
    "Indexes",
    "RetrievalConfig",
    "Timings",
    "answer_question",
    "retrieve",
    "OverlapReranker",
    "RerankOutcome",
    "overlap_rerank_score",
    "rerank",
    "InvertedIndex",
    "ScoredDoc",
    "bm25_search",
    "build_sparse",
    "tfidf_search",
]
