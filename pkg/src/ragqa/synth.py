"""Synthetic corpora with planted gold documents and closed-form expectations.

Construction, per question i with distractor count c_i:
  - two gold documents containing the question's topic token and a shared
    bridge token, once each;
  - c_i distractor documents repeating the topic token bait_tf times;
  - a pool of filler documents, every tb_every-th of which carries the
    bridge token once.

All documents have identical token length, so with BM25 the distractors
outrank the golds on the question's tokens (tf saturation beats the two
single-occurrence terms) while the bridge-only fillers land far below. The
golds therefore sit at sparse ranks c_i+1 and c_i+2 exactly, which makes
retrieval coverage, and with a gold-echo generator the end-to-end accuracy,
a closed-form function of the retrieval depth. The token-overlap reranker
keeps exactly the gold documents: they cover 2 of the question's 3
content tokens (score +1/3) while distractors and fillers cover 1 (-1/3).
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass

BRIDGE_TOKEN = "biomarker"


@dataclass(frozen=True)
class SynthSpec:
    """Parameters of the synthetic corpus; defaults suit a 10k-doc eval."""

    n_docs: int = 10000
    n_questions: int = 25
    doc_len: int = 18
    filler_vocab: int = 400
    tb_every: int = 3
    distractor_counts: tuple[int, ...] = (0, 5, 15, 35, 75)
    bait_tf: int = 5
    golds_per_question: int = 2
    seed: int = 7

    def distractors_for(self, qi: int) -> int:
        return self.distractor_counts[qi % len(self.distractor_counts)]

    def topic_token(self, qi: int) -> str:
        return f"topic{qi}term"

    def question_body(self, qi: int) -> str:
        return f"Is {self.topic_token(qi)} associated with {BRIDGE_TOKEN}?"


def _filler_tokens(rng: random.Random, vocab: list[str], k: int) -> list[str]:
    return rng.choices(vocab, k=k)


def generate(spec: SynthSpec) -> tuple[list[dict], list[dict]]:
    """Build (corpus records, eval questions) as JSON-shaped dicts."""
    m = spec.n_questions
    g = spec.golds_per_question
    total_special = m * g + sum(spec.distractors_for(i) for i in range(m))
    if spec.n_docs <= total_special + m:
        raise ValueError(f"n_docs={spec.n_docs} too small for {total_special} planted docs")
    rng = random.Random(spec.seed)
    vocab = [f"filler{i:03d}" for i in range(spec.filler_vocab)]

    records: list[dict] = []
    questions: list[dict] = []
    pmid = 0

    def emit(content_tokens: list[str]) -> str:
        nonlocal pmid
        pmid += 1
        records.append(
            {
                "PMID": str(pmid),
                "title": f"Synthetic record {pmid}",
                "content": " ".join(content_tokens),
            }
        )
        return str(pmid)

    for qi in range(m):
        topic = spec.topic_token(qi)
        gold_pmids = [
            emit([topic, BRIDGE_TOKEN] + _filler_tokens(rng, vocab, spec.doc_len - 2))
            for _ in range(g)
        ]
        for _ in range(spec.distractors_for(qi)):
            emit([topic] * spec.bait_tf + _filler_tokens(rng, vocab, spec.doc_len - spec.bait_tf))
        questions.append(
            {
                "id": f"synth{qi:03d}",
                "type": "yesno",
                "body": spec.question_body(qi),
                "exact_answer": "yes" if qi % 2 == 0 else "no",
                "documents": [f"http://www.ncbi.nlm.nih.gov/pubmed/{p}" for p in gold_pmids],
            }
        )

    filler_index = 0
    while pmid < spec.n_docs:
        if filler_index % spec.tb_every == 0:
            emit([BRIDGE_TOKEN] + _filler_tokens(rng, vocab, spec.doc_len - 1))
        else:
            emit(_filler_tokens(rng, vocab, spec.doc_len))
        filler_index += 1

    return records, questions


def write_corpus(records: list[dict], path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for record in records:
            fh.write(json.dumps(record) + "\n")


def write_questions(questions: list[dict], path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump({"questions": questions}, fh, indent=2)


def gold_ranks(spec: SynthSpec, qi: int) -> list[int]:
    """Sparse ranks of question qi's gold documents (1-based, closed form)."""
    c = spec.distractors_for(qi)
    return [c + j for j in range(1, spec.golds_per_question + 1)]


def expected_coverage(spec: SynthSpec, depth: int) -> float:
    """Fraction of questions with at least one gold doc in the sparse top-depth.

    Equals end-to-end accuracy under a gold-echo generator, for both plain
    sparse retrieval (depth = keep_n) and hybrid retrieval (depth = first
    stage size), since reranking drops no gold candidates.
    """
    hits = sum(1 for qi in range(spec.n_questions) if gold_ranks(spec, qi)[0] <= depth)
    return hits / spec.n_questions


def expected_doc_recall(spec: SynthSpec, depth: int) -> float:
    """Mean fraction of gold docs inside the sparse top-depth (closed form)."""
    total = 0.0
    for qi in range(spec.n_questions):
        ranks = gold_ranks(spec, qi)
        total += sum(1 for r in ranks if r <= depth) / len(ranks)
    return total / spec.n_questions


def latency_queries(spec: SynthSpec, n: int, seed: int = 99) -> list[str]:
    """Random filler-token queries for the latency bench (2-3 terms each)."""
    rng = random.Random(seed)
    vocab = [f"filler{i:03d}" for i in range(spec.filler_vocab)]
    return [" ".join(rng.sample(vocab, rng.choice((2, 3)))) for _ in range(n)]
