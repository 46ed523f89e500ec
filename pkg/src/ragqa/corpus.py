"""Corpus ingestion and tokenization for newline-delimited JSON abstract dumps.

A corpus file holds one JSON object per line with string fields "PMID",
"title" and "content". Records are normalized into :class:`Document` with a
token count computed over title + content.
"""

from __future__ import annotations

import json
import logging
import re
from dataclasses import dataclass, field
from importlib import resources
from typing import Iterable, Iterator

logger = logging.getLogger(__name__)

# Maximal runs of Unicode alphanumerics (underscore is a separator).
_TOKEN_RE = re.compile(r"[^\W_]+")

_PMID_RE = re.compile(r"[0-9]+\Z")


def load_stopwords() -> frozenset[str]:
    """Load the packaged English stopword list (one word per line, UTF-8)."""
    text = resources.files("ragqa.data").joinpath("stopwords_en.txt").read_text("utf-8")
    return frozenset(w for w in text.splitlines() if w)


@dataclass(frozen=True)
class TokenizerConfig:
    """Deterministic tokenizer settings shared by indexing and querying."""

    lowercase: bool = True
    strip_stopwords: bool = False
    stopword_list: frozenset[str] = frozenset()

    @classmethod
    def english(cls) -> "TokenizerConfig":
        """Lowercasing config with the packaged English stopword list enabled."""
        return cls(lowercase=True, strip_stopwords=True, stopword_list=load_stopwords())


def tokenize(text: str, config: TokenizerConfig | None = None) -> list[str]:
    """Split text on non-alphanumeric runs, lowercase and drop stopwords per config.

    Empty input yields an empty list; empty tokens are never produced.
    """
    if config is None:
        config = TokenizerConfig()
    tokens = _TOKEN_RE.findall(text)
    if config.lowercase:
        tokens = [t.lower() for t in tokens]
    if config.strip_stopwords and config.stopword_list:
        tokens = [t for t in tokens if t not in config.stopword_list]
    return tokens


@dataclass(frozen=True)
class Document:
    """One corpus record: PMID, title and abstract text."""

    pmid: str
    title: str
    content: str
    token_count: int

    @classmethod
    def build(cls, pmid: str, title: str, content: str, config: TokenizerConfig | None = None) -> "Document":
        """Construct a Document, computing token_count over title + content.

        token_count always counts all tokens; stopword stripping never
        applies here even when the config enables it for retrieval.
        """
        if config is None:
            config = TokenizerConfig()
        counting = TokenizerConfig(lowercase=config.lowercase, strip_stopwords=False)
        n = len(tokenize(title + " " + content, counting))
        return cls(pmid=pmid, title=title, content=content, token_count=n)


@dataclass
class IngestStats:
    """Line accounting for one ingestion pass."""

    read: int = 0
    kept: int = 0
    skipped: int = 0
    diagnostics: list[str] = field(default_factory=list)

    def skip(self, line_no: int, reason: str) -> None:
        self.skipped += 1
        msg = f"line {line_no}: {reason}"
        self.diagnostics.append(msg)
        logger.warning("skipping corpus %s", msg)


def ingest_jsonl(
    path: str,
    config: TokenizerConfig | None = None,
    stats: IngestStats | None = None,
) -> Iterator[Document]:
    """Stream Documents from a newline-delimited JSON corpus file.

    Malformed lines and duplicate PMIDs are skipped with a diagnostic
    (first occurrence wins); an unreadable file raises the underlying
    OSError. Pass an IngestStats to collect skip counts.
    """
    if stats is None:
        stats = IngestStats()
    seen: set[str] = set()
    with open(path, "r", encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, 1):
            stats.read += 1
            line = line.strip()
            if not line:
                stats.skip(line_no, "empty line")
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                stats.skip(line_no, f"invalid JSON ({exc.msg})")
                continue
            if not isinstance(record, dict):
                stats.skip(line_no, "not a JSON object")
                continue
            missing = [k for k in ("PMID", "title", "content") if not isinstance(record.get(k), str)]
            if missing:
                stats.skip(line_no, f"missing or non-string fields: {', '.join(missing)}")
                continue
            pmid = record["PMID"]
            if not _PMID_RE.fullmatch(pmid):
                stats.skip(line_no, f"PMID {pmid!r} is not a nonempty digit string")
                continue
            if pmid in seen:
                stats.skip(line_no, f"duplicate PMID {pmid}")
                continue
            seen.add(pmid)
            stats.kept += 1
            yield Document.build(pmid, record["title"], record["content"], config)


def load_corpus(path: str, config: TokenizerConfig | None = None) -> tuple[list[Document], IngestStats]:
    """Eagerly ingest a corpus file, returning documents and skip accounting."""
    stats = IngestStats()
    docs = list(ingest_jsonl(path, config, stats))
    return docs, stats


def corpus_stats(docs: Iterable[Document]) -> dict[str, float]:
    """Document count and arithmetic mean token count (0.0 for an empty corpus)."""
    counts = [d.token_count for d in docs]
    if not counts:
        return {"doc_count": 0, "mean_token_count": 0.0}
    return {"doc_count": len(counts), "mean_token_count": sum(counts) / len(counts)}
