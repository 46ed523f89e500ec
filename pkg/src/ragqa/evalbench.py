"""Benchmark loading, document- and answer-level metrics, and experiment grids.

Questions come from a JSON benchmark file ({"questions": [...]}); only
yes/no questions with at least one gold PMID inside the corpus are kept
(summary questions optionally). Gold PMID sets are kept whole, so document
recall is measured against the full annotation even when parts of it lie
outside the corpus.
"""

from __future__ import annotations

import json
import logging
import re
import statistics
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Sequence

from .generate import classify_yes_no
from .pipeline import Engine, RetrievalConfig, StageFailure
from .sparse import InvertedIndex, bm25_search

logger = logging.getLogger(__name__)

_PMID_TAIL_RE = re.compile(r"(\d+)/?\s*$")

ANSWER_CLASSES = ("yes", "no")


@dataclass(frozen=True)
class EvalQuestion:
    """One benchmark question with its gold label and supporting PMIDs."""

    qid: str
    body: str
    qtype: str  # yesno | factoid | list | summary
    gold_answer: str | None  # yes/no questions only
    gold_pmids: frozenset[str]


def _extract_pmid(entry: str) -> str | None:
    match = _PMID_TAIL_RE.search(entry.strip())
    return match.group(1) if match else None


def load_eval(path: str, corpus_pmids: set[str], include_summary: bool = False) -> list[EvalQuestion]:
    """Load and filter benchmark questions.

    Keeps yes/no questions (and summary ones when include_summary) whose gold
    PMIDs intersect the corpus; factoid and list questions are excluded. Gold
    sets are NOT restricted to the corpus intersection.
    """
    try:
        with open(path, "r", encoding="utf-8") as fh:
            payload = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ValueError(f"malformed benchmark file {path}: line {exc.lineno} column {exc.colno}: {exc.msg}") from exc
    if not isinstance(payload, dict) or not isinstance(payload.get("questions"), list):
        raise ValueError(f"malformed benchmark file {path}: expected a top-level 'questions' list")
    kept: list[EvalQuestion] = []
    wanted = {"yesno"} | ({"summary"} if include_summary else set())
    for pos, item in enumerate(payload["questions"]):
        if not isinstance(item, dict):
            raise ValueError(f"malformed benchmark file {path}: question #{pos} is not an object")
        qtype = item.get("type")
        if qtype not in wanted:
            continue
        qid = str(item.get("id", f"q{pos}"))
        body = item.get("body")
        if not isinstance(body, str) or not body:
            raise ValueError(f"malformed benchmark file {path}: question {qid} has no body")
        gold_pmids = frozenset(
            p for p in (_extract_pmid(str(d)) for d in item.get("documents", [])) if p
        )
        if not gold_pmids & corpus_pmids:
            continue
        gold_answer: str | None = None
        if qtype == "yesno":
            raw = item.get("exact_answer")
            if isinstance(raw, list) and raw:
                raw = raw[0]
            if not isinstance(raw, str) or raw.strip().lower() not in ANSWER_CLASSES:
                raise ValueError(f"malformed benchmark file {path}: question {qid} lacks a yes/no exact_answer")
            gold_answer = raw.strip().lower()
        kept.append(EvalQuestion(qid=qid, body=body, qtype=qtype, gold_answer=gold_answer, gold_pmids=gold_pmids))
    return kept


def doc_metrics(retrieved: Sequence[str], gold: set[str] | frozenset[str]) -> dict[str, float]:
    """Per-question document recall and precision against the gold PMID set."""
    if not gold:
        raise ValueError("empty gold set")
    hits = len(set(retrieved) & set(gold))
    recall = hits / len(gold)
    precision = hits / len(retrieved) if retrieved else 0.0
    return {"recall": recall, "precision": precision}


def answer_metrics(
    predictions: Sequence[tuple[str, str]],
    gold: Sequence[tuple[str, str]],
) -> dict[str, float]:
    """Accuracy plus recall/precision/F1 macro-averaged over {yes, no}.

    Invalid predictions count as misclassifications for both classes. Micro
    averages are included for the machine-readable report.
    """
    pred_map = dict(predictions)
    gold_map = dict(gold)
    if len(pred_map) != len(predictions) or len(gold_map) != len(gold):
        raise ValueError("duplicate question ids")
    if set(pred_map) != set(gold_map):
        raise ValueError("mismatched question ids between predictions and gold")
    if not pred_map:
        raise ValueError("no questions to score")
    correct = sum(1 for qid, label in gold_map.items() if pred_map[qid] == label)
    accuracy = correct / len(gold_map)

    per_class: dict[str, dict[str, float]] = {}
    tp_sum = fp_sum = fn_sum = 0
    for cls in ANSWER_CLASSES:
        tp = sum(1 for qid in gold_map if gold_map[qid] == cls and pred_map[qid] == cls)
        fp = sum(1 for qid in gold_map if gold_map[qid] != cls and pred_map[qid] == cls)
        fn = sum(1 for qid in gold_map if gold_map[qid] == cls and pred_map[qid] != cls)
        precision = tp / (tp + fp) if tp + fp else 0.0
        recall = tp / (tp + fn) if tp + fn else 0.0
        f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
        per_class[cls] = {"precision": precision, "recall": recall, "f1": f1}
        tp_sum += tp
        fp_sum += fp
        fn_sum += fn

    micro_p = tp_sum / (tp_sum + fp_sum) if tp_sum + fp_sum else 0.0
    micro_r = tp_sum / (tp_sum + fn_sum) if tp_sum + fn_sum else 0.0
    micro_f1 = 2 * micro_p * micro_r / (micro_p + micro_r) if micro_p + micro_r else 0.0
    n_classes = len(ANSWER_CLASSES)
    return {
        "accuracy": accuracy,
        "recall": sum(per_class[c]["recall"] for c in ANSWER_CLASSES) / n_classes,
        "precision": sum(per_class[c]["precision"] for c in ANSWER_CLASSES) / n_classes,
        "f1": sum(per_class[c]["f1"] for c in ANSWER_CLASSES) / n_classes,
        "micro_recall": micro_r,
        "micro_precision": micro_p,
        "micro_f1": micro_f1,
    }


def latency_stats(samples_ms: Sequence[float]) -> dict[str, float]:
    """Arithmetic mean and population standard deviation of latency samples."""
    if not samples_ms:
        raise ValueError("no latency samples")
    return {
        "mean_ms": statistics.fmean(samples_ms),
        "std_ms": statistics.pstdev(samples_ms),
    }


class Journal:
    """Per-question result journal (one JSON line each) enabling resumed runs."""

    def __init__(self, path: str | None):
        self.path = path
        self._records: dict[tuple[str, str], dict] = {}
        if path is not None:
            try:
                with open(path, "r", encoding="utf-8") as fh:
                    for line in fh:
                        line = line.strip()
                        if not line:
                            continue
                        entry = json.loads(line)
                        self._records[(entry["row"], entry["qid"])] = entry["record"]
            except FileNotFoundError:
                pass

    def get(self, row_key: str, qid: str) -> dict | None:
        return self._records.get((row_key, qid))

    def put(self, row_key: str, qid: str, record: dict) -> None:
        self._records[(row_key, qid)] = record
        if self.path is not None:
            with open(self.path, "a", encoding="utf-8") as fh:
                fh.write(json.dumps({"row": row_key, "qid": qid, "record": record}) + "\n")


def _evaluate_one(engine: Engine, question: EvalQuestion, config: RetrievalConfig) -> dict:
    record: dict = {"qid": question.qid, "gold_answer": question.gold_answer}
    try:
        result = engine.answer(question.body, config)
    except (StageFailure, ValueError) as exc:
        stage = getattr(exc, "stage", "retrieval")
        logger.warning("question %s failed at stage %s: %s", question.qid, stage, exc)
        record.update(
            {
                "error": {"stage": stage, "message": str(exc)},
                "label_pred": "invalid",
                "retrieved": [],
                "used_pmids": [],
                "doc_recall": 0.0,
                "doc_precision": 0.0,
                "flags": [],
                "timings": None,
            }
        )
        return record
    retrieved = [sd.pmid for sd in result.documents]
    dm = doc_metrics(retrieved, question.gold_pmids)
    record.update(
        {
            "error": None,
            "label_pred": classify_yes_no(result.response) if question.gold_answer else None,
            "response": result.response,
            "retrieved": retrieved,
            "used_pmids": result.used_pmids,
            "doc_recall": dm["recall"],
            "doc_precision": dm["precision"],
            "flags": sorted(result.flags),
            "timings": {
                "retrieval_ms": result.timings.retrieval_ms,
                "rerank_ms": result.timings.rerank_ms,
                "generation_ms": result.timings.generation_ms,
                "total_ms": result.timings.total_ms,
            },
        }
    )
    return record


def _evaluate_row(
    engine: Engine,
    questions: Sequence[EvalQuestion],
    config: RetrievalConfig,
    row_key: str,
    journal: Journal,
    workers: int,
) -> dict[str, dict]:
    pending = [q for q in questions if journal.get(row_key, q.qid) is None]
    if workers > 1 and pending:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            futures = {pool.submit(_evaluate_one, engine, q, config): q for q in pending}
            for future, q in futures.items():
                journal.put(row_key, q.qid, future.result())
    else:
        for q in pending:
            journal.put(row_key, q.qid, _evaluate_one(engine, q, config))
    records = {q.qid: journal.get(row_key, q.qid) for q in questions}
    return records


def _aggregate_row(questions: Sequence[EvalQuestion], records: dict[str, dict]) -> dict:
    ordered = [records[q.qid] for q in sorted(questions, key=lambda q: q.qid)]
    yesno = [q for q in sorted(questions, key=lambda q: q.qid) if q.gold_answer is not None]
    row: dict = {
        "n_questions": len(questions),
        "failures": sum(1 for r in ordered if r["error"]),
        "doc_recall": statistics.fmean(r["doc_recall"] for r in ordered),
        "doc_precision": statistics.fmean(r["doc_precision"] for r in ordered),
    }
    if yesno:
        preds = [(q.qid, records[q.qid]["label_pred"]) for q in yesno]
        gold = [(q.qid, q.gold_answer) for q in yesno]
        row["answer"] = answer_metrics(preds, gold)
        row["accuracy"] = row["answer"]["accuracy"]
    timed = [r["timings"] for r in ordered if r["timings"]]
    if timed:
        row["latency"] = {
            stage: latency_stats([t[f"{stage}_ms"] for t in timed])
            for stage in ("retrieval", "rerank", "generation", "total")
        }
    return row


def run_depth_sweep(
    questions: Sequence[EvalQuestion],
    depths: Sequence[int],
    engine: Engine,
    keep_n: int = 10,
    journal: Journal | None = None,
    workers: int = 1,
) -> dict:
    """Hybrid retrieval at each depth with reranking fixed at keep_n.

    Returns {"experiment", "keep_n", "rows": [...]} with one aggregated row
    per depth; per-question outcomes go to the journal.
    """
    if not depths:
        raise ValueError("no depths given")
    journal = journal or Journal(None)
    rows = []
    for depth in depths:
        config = RetrievalConfig(strategy="hybrid", depth=depth, keep_n=keep_n, tokenizer=engine.config.tokenizer)
        records = _evaluate_row(engine, questions, config, f"depth={depth}", journal, workers)
        row = {"depth": depth}
        row.update(_aggregate_row(questions, records))
        rows.append(row)
    return {"experiment": "depth_sweep", "keep_n": keep_n, "rows": rows}


def run_retriever_comparison(
    questions: Sequence[EvalQuestion],
    strategies: Sequence[str],
    engine: Engine,
    depth: int = 50,
    keep_n: int = 10,
    journal: Journal | None = None,
    workers: int = 1,
) -> dict:
    """One aggregated row per retrieval strategy (depth applies to hybrid)."""
    if not strategies:
        raise ValueError("no strategies given")
    journal = journal or Journal(None)
    rows = []
    for strategy in strategies:
        config = RetrievalConfig(strategy=strategy, depth=depth, keep_n=keep_n, tokenizer=engine.config.tokenizer)
        records = _evaluate_row(engine, questions, config, f"strategy={strategy}", journal, workers)
        row = {"strategy": strategy}
        row.update(_aggregate_row(questions, records))
        rows.append(row)
    return {"experiment": "retriever_comparison", "depth": depth, "keep_n": keep_n, "rows": rows}


def sample_queries(
    index: InvertedIndex,
    n: int,
    seed: int = 7,
    min_df: int = 50,
) -> list[str]:
    """Deterministic 2-3 term queries drawn from the index's common vocabulary.

    Terms below min_df are excluded so the bench exercises realistic posting
    sizes; falls back to the whole vocabulary when nothing qualifies.
    """
    import random

    vocab = sorted(t for t, plist in index.postings.items() if len(plist) >= min_df)
    if not vocab:
        vocab = sorted(index.postings)
    rng = random.Random(seed)
    terms = min(3, len(vocab))
    return [" ".join(rng.sample(vocab, rng.choice((2, terms)) if terms > 2 else terms)) for _ in range(n)]


def bench_latency(
    index: InvertedIndex,
    queries: Sequence[str],
    k: int = 10,
    search: Callable = bm25_search,
) -> list[float]:
    """Wall-clock per-query latency samples (ms) for repeated sparse searches."""
    if not queries:
        raise ValueError("no queries")
    samples: list[float] = []
    for query in queries:
        started = time.perf_counter()
        search(index, query, k)
        samples.append((time.perf_counter() - started) * 1000.0)
    return samples
