"""Command-line front door: indexing, querying, serving, evaluation, benching.

Every experiment is one invocation. A plain-text key=value config file can
supply defaults for any flag (CLI arguments win). Exit codes: 0 on success,
1 on runtime failure, 2 on usage errors.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys

from . import evalbench, reporting, synth
from .corpus import Document, TokenizerConfig, corpus_stats, load_corpus
from .dense import MockEmbedder, RemoteEmbedder, build_dense, load_dense, save_dense
from .generate import ChatCompletionsGenerator, FixedAnswer, GoldEcho, StubGenerator
from .pipeline import Engine, Indexes, RetrievalConfig
from .rerank import OverlapReranker, RemoteReranker
from .sparse import bm25_search, build_sparse, load_sparse, save_sparse, tfidf_search

logger = logging.getLogger(__name__)


def load_config(path: str) -> dict:
    """Parse a key = value config file; '#' starts a comment, blanks ignored."""
    values: dict = {}
    with open(path, "r", encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"{path}:{line_no}: expected 'key = value'")
            key, value = (part.strip() for part in line.split("=", 1))
            if not key:
                raise ValueError(f"{path}:{line_no}: empty key")
            for cast in (int, float):
                try:
                    values[key.replace("-", "_")] = cast(value)
                    break
                except ValueError:
                    continue
            else:
                values[key.replace("-", "_")] = value
    return values


def _resolve_embedder(spec: str | None, dim: int):
    if spec in (None, "none"):
        return None
    if spec == "mock":
        return MockEmbedder(dim=dim)
    return RemoteEmbedder(spec, dim=dim)


def _resolve_reranker(spec: str | None):
    if spec in (None, "none"):
        return None
    if spec == "overlap":
        return OverlapReranker()
    return RemoteReranker(spec)


def _resolve_generator(spec: str | None, args, questions=None):
    if spec in (None, "none"):
        return None
    if spec.startswith("stub:"):
        mode = spec.removeprefix("stub:")
        if mode == "gold":
            if not questions:
                raise ValueError("stub:gold needs a loaded question set")
            gold = {q.body: (q.gold_answer, q.gold_pmids) for q in questions if q.gold_answer}
            return StubGenerator(GoldEcho(gold))
        return StubGenerator(FixedAnswer(mode))
    return ChatCompletionsGenerator(
        endpoint=spec,
        model=getattr(args, "model", "gpt-3.5-turbo"),
        timeout=getattr(args, "timeout", 60.0),
        api_key_env=getattr(args, "api_key_env", "RAGQA_API_KEY"),
    )


def _load_indexes(args, need_sparse: bool, need_dense: bool) -> Indexes:
    indexes = Indexes()
    config = TokenizerConfig.english()
    docs = None
    if getattr(args, "corpus", None):
        docs, stats = load_corpus(args.corpus, config)
        if stats.skipped:
            logger.warning("skipped %d corpus lines", stats.skipped)
    if getattr(args, "sparse", None):
        indexes.sparse = load_sparse(args.sparse)
    elif need_sparse:
        if docs is None:
            raise ValueError("need --sparse snapshot or --corpus to build the sparse index")
        indexes.sparse = build_sparse(docs, config)
    if need_dense:
        indexes.embedder = _resolve_embedder(getattr(args, "embedder", "mock") or "mock", args.dim)
        if getattr(args, "dense", None):
            indexes.dense = load_dense(args.dense)
        else:
            if docs is None:
                raise ValueError("need --dense snapshot or --corpus to build the dense index")
            indexes.dense = build_dense(docs, indexes.embedder)
    if indexes.sparse is not None:
        indexes.documents = indexes.sparse.document_map()
    elif docs is not None:
        indexes.documents = {d.pmid: d for d in docs}
    return indexes


def cmd_ingest(args) -> int:
    docs, stats = load_corpus(args.corpus, TokenizerConfig.english())
    summary = corpus_stats(docs)
    print(
        json.dumps(
            {
                "documents": summary["doc_count"],
                "skipped": stats.skipped,
                "mean_token_count": round(summary["mean_token_count"], 2),
            }
        )
    )
    for diag in stats.diagnostics[:20]:
        print(f"  skipped {diag}", file=sys.stderr)
    return 0


def cmd_index_sparse(args) -> int:
    docs, stats = load_corpus(args.corpus, TokenizerConfig.english())
    index = build_sparse(docs, TokenizerConfig.english())
    save_sparse(index, args.out)
    print(
        f"indexed {index.doc_count} docs in {index.build_seconds:.2f} s "
        f"({index.docs_per_second:.0f} docs/s), {stats.skipped} lines skipped -> {args.out}"
    )
    return 0


def cmd_index_dense(args) -> int:
    docs, _ = load_corpus(args.corpus, TokenizerConfig.english())
    embedder = _resolve_embedder(args.embedder, args.dim)
    if embedder is None:
        raise ValueError("--embedder is required (mock or a service URL)")
    index = build_dense(docs, embedder, batch_size=args.batch_size)
    save_dense(index, args.out)
    rate = index.doc_count / index.build_seconds if index.build_seconds > 0 else 0.0
    print(f"embedded {index.doc_count} docs (d={index.dim}) in {index.build_seconds:.2f} s ({rate:.0f} docs/s) -> {args.out}")
    return 0


def cmd_query(args) -> int:
    strategy = args.strategy
    indexes = _load_indexes(args, need_sparse=strategy in ("bm25", "tfidf", "hybrid"), need_dense=strategy == "dense")
    engine = Engine(
        indexes=indexes,
        reranker=_resolve_reranker(args.reranker),
        generator=_resolve_generator(args.generator, args),
        config=RetrievalConfig(strategy=strategy, depth=args.depth, keep_n=args.keep_n),
    )
    result = engine.answer(args.question)
    print(
        json.dumps(
            {
                "response": result.response,
                "used_PMIDs": result.used_pmids,
                "documents": [
                    {
                        "PMID": sd.pmid,
                        "title": indexes.documents[sd.pmid].title if sd.pmid in indexes.documents else "",
                        "score": sd.score,
                        "stage": sd.stage,
                    }
                    for sd in result.documents
                ],
                "timings": {
                    "retrieval_ms": result.timings.retrieval_ms,
                    "rerank_ms": result.timings.rerank_ms,
                    "generation_ms": result.timings.generation_ms,
                    "total_ms": result.timings.total_ms,
                },
                "flags": sorted(result.flags),
            },
            indent=2,
        )
    )
    return 0


def cmd_serve(args) -> int:
    import uvicorn

    from .service import create_app

    strategies_needing_sparse = args.strategy in ("bm25", "tfidf", "hybrid")
    indexes = _load_indexes(args, need_sparse=strategies_needing_sparse, need_dense=args.strategy == "dense")
    engine = Engine(
        indexes=indexes,
        reranker=_resolve_reranker(args.reranker),
        generator=_resolve_generator(args.generator, args),
        config=RetrievalConfig(strategy=args.strategy, depth=args.depth, keep_n=args.keep_n),
    )
    app = create_app(engine, ui_dir=args.ui_dir)
    uvicorn.run(app, host=args.host, port=args.port, log_level="info")
    return 0


def _load_eval_setup(args):
    config = TokenizerConfig.english()
    docs, _ = load_corpus(args.corpus, config)
    corpus_pmids = {d.pmid for d in docs}
    questions = evalbench.load_eval(args.questions, corpus_pmids, include_summary=args.include_summary)
    if not questions:
        raise ValueError("no questions survived filtering")
    need_dense = "dense" in getattr(args, "strategies", "") if hasattr(args, "strategies") else False
    indexes = Indexes(sparse=build_sparse(docs, config))
    indexes.documents = indexes.sparse.document_map()
    if need_dense:
        embedder = _resolve_embedder(args.embedder or "mock", args.dim)
        indexes.dense = build_dense(docs, embedder)
        indexes.embedder = embedder
    engine = Engine(
        indexes=indexes,
        reranker=_resolve_reranker(args.reranker),
        generator=_resolve_generator(args.generator, args, questions=questions),
        config=RetrievalConfig(strategy="hybrid", depth=args.depth, keep_n=args.keep_n),
    )
    return questions, engine


def cmd_eval_retrievers(args) -> int:
    questions, engine = _load_eval_setup(args)
    strategies = [s.strip() for s in args.strategies.split(",") if s.strip()]
    journal = evalbench.Journal(args.journal)
    report = evalbench.run_retriever_comparison(
        questions, strategies, engine, depth=args.depth, keep_n=args.keep_n, journal=journal, workers=args.workers
    )
    paths = reporting.write_retriever_report(
        report, args.out, include_timing=not args.no_timing, figures=not args.no_figures
    )
    with open(paths["txt"], "r", encoding="utf-8") as fh:
        print(fh.read(), end="")
    return 0


def cmd_eval_depths(args) -> int:
    questions, engine = _load_eval_setup(args)
    depths = [int(d.strip()) for d in args.depths.split(",") if d.strip()]
    journal = evalbench.Journal(args.journal)
    report = evalbench.run_depth_sweep(
        questions, depths, engine, keep_n=args.keep_n, journal=journal, workers=args.workers
    )
    paths = reporting.write_depth_report(
        report, args.out, include_timing=not args.no_timing, figures=not args.no_figures
    )
    with open(paths["txt"], "r", encoding="utf-8") as fh:
        print(fh.read(), end="")
    return 0


def cmd_bench_latency(args) -> int:
    config = TokenizerConfig.english()
    if args.corpus:
        docs, _ = load_corpus(args.corpus, config)
    else:
        records, _ = synth.generate(synth.SynthSpec(n_docs=args.docs, n_questions=0, seed=args.seed))
        docs = [Document.build(r["PMID"], r["title"], r["content"], config) for r in records]
    index = build_sparse(docs, config)
    print(
        f"built sparse index: {index.doc_count} docs in {index.build_seconds:.2f} s "
        f"({index.docs_per_second:.0f} docs/s)"
    )
    queries = evalbench.sample_queries(index, args.n, seed=args.seed + 1)
    search = bm25_search if args.strategy == "bm25" else tfidf_search
    samples = evalbench.bench_latency(index, queries, k=args.k, search=search)
    stats = evalbench.latency_stats(samples)
    print(f"{args.strategy} query latency over {len(samples)} queries: {stats['mean_ms']:.3f} ms ± {stats['std_ms']:.3f} ms")
    if args.out:
        reporting.write_bench_report(samples, stats, args.out, args.strategy, index.doc_count, figures=not args.no_figures)
    return 0


def cmd_synth(args) -> int:
    spec = synth.SynthSpec(n_docs=args.docs, n_questions=args.questions_count, seed=args.seed)
    records, questions = synth.generate(spec)
    synth.write_corpus(records, args.out_corpus)
    synth.write_questions(questions, args.out_questions)
    print(f"wrote {len(records)} docs -> {args.out_corpus}, {len(questions)} questions -> {args.out_questions}")
    return 0


def _add_engine_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--corpus", help="corpus .jsonl (used to build indexes when no snapshot given)")
    p.add_argument("--sparse", help="sparse index snapshot path")
    p.add_argument("--dense", help="dense index snapshot path")
    p.add_argument("--embedder", default="mock", help="'mock' or embedding service URL")
    p.add_argument("--dim", type=int, default=64, help="embedding dimension")
    p.add_argument("--reranker", default="overlap", help="'overlap', 'none', or rerank service URL")
    p.add_argument("--generator", default="stub:yes", help="'stub:<answer>', 'stub:gold', 'none', or endpoint URL")
    p.add_argument("--model", default="gpt-3.5-turbo", help="model name for a remote generator")
    p.add_argument("--timeout", type=float, default=60.0, help="backend timeout in seconds")
    p.add_argument("--api-key-env", default="RAGQA_API_KEY", help="env var holding the generator API key")
    p.add_argument("--depth", type=int, default=50, help="hybrid first-stage candidate count")
    p.add_argument("--keep-n", type=int, default=10, help="documents kept for the context")


def _add_eval_flags(p: argparse.ArgumentParser) -> None:
    _add_engine_flags(p)
    p.add_argument("--questions", required=True, help="benchmark questions JSON")
    p.add_argument("--out", required=True, help="report output directory")
    p.add_argument("--journal", help="per-question journal file (enables resume)")
    p.add_argument("--workers", type=int, default=1, help="concurrent questions (generator in-flight cap)")
    p.add_argument("--include-summary", action="store_true", help="also keep summary questions")
    p.add_argument("--no-timing", action="store_true", help="exclude timing fields from reports")
    p.add_argument("--no-figures", action="store_true", help="skip figure rendering")
    p.set_defaults(generator="stub:gold")


def build_parser(defaults: dict | None = None) -> argparse.ArgumentParser:
    # subparsers re-parse into a fresh namespace, so config-file defaults
    # must be installed on every (sub)parser, not just the root
    leaves: list[argparse.ArgumentParser] = []

    parser = argparse.ArgumentParser(prog="ragqa", description="retrieval question answering engine and bench")
    parser.add_argument("--config", help="key = value config file supplying flag defaults")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="parse a corpus file and print its stats")
    leaves.append(p)
    p.add_argument("--corpus", required=True)
    p.set_defaults(func=cmd_ingest)

    p_index = sub.add_parser("index", help="build index snapshots")
    index_sub = p_index.add_subparsers(dest="index_kind", required=True)
    p = index_sub.add_parser("sparse", help="build the inverted index")
    leaves.append(p)
    p.add_argument("--corpus", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_index_sparse)
    p = index_sub.add_parser("dense", help="build the flat vector index")
    leaves.append(p)
    p.add_argument("--corpus", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--embedder", default="mock")
    p.add_argument("--dim", type=int, default=64)
    p.add_argument("--batch-size", type=int, default=64)
    p.set_defaults(func=cmd_index_dense)

    p = sub.add_parser("query", help="answer one question, print the response JSON")
    leaves.append(p)
    _add_engine_flags(p)
    p.add_argument("--question", required=True)
    p.add_argument("--strategy", default="hybrid", choices=["bm25", "tfidf", "dense", "hybrid"])
    p.set_defaults(func=cmd_query)

    p = sub.add_parser("serve", help="run the HTTP service")
    leaves.append(p)
    _add_engine_flags(p)
    p.add_argument("--strategy", default="hybrid", choices=["bm25", "tfidf", "dense", "hybrid"])
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8080)
    p.add_argument("--ui-dir", help="static directory for the web UI")
    p.set_defaults(func=cmd_serve)

    p_eval = sub.add_parser("eval", help="run the evaluation grids")
    eval_sub = p_eval.add_subparsers(dest="eval_kind", required=True)
    p = eval_sub.add_parser("retrievers", help="compare retrieval strategies")
    leaves.append(p)
    _add_eval_flags(p)
    p.add_argument("--strategies", default="bm25,tfidf,dense,hybrid")
    p.set_defaults(func=cmd_eval_retrievers)
    p = eval_sub.add_parser("depths", help="sweep hybrid retrieval depth")
    leaves.append(p)
    _add_eval_flags(p)
    p.add_argument("--depths", default="20,50,100")
    p.set_defaults(func=cmd_eval_depths)

    p_bench = sub.add_parser("bench", help="performance benches")
    bench_sub = p_bench.add_subparsers(dest="bench_kind", required=True)
    p = bench_sub.add_parser("latency", help="sparse query latency")
    leaves.append(p)
    p.add_argument("--strategy", default="bm25", choices=["bm25", "tfidf"])
    p.add_argument("--n", type=int, default=100, help="number of queries")
    p.add_argument("--docs", type=int, default=100000, help="synthetic corpus size when no --corpus")
    p.add_argument("--corpus", help="benchmark over an existing corpus file instead")
    p.add_argument("--k", type=int, default=10)
    p.add_argument("--seed", type=int, default=7)
    p.add_argument("--out", help="write report + figure into this directory")
    p.add_argument("--no-figures", action="store_true")
    p.set_defaults(func=cmd_bench_latency)

    p = sub.add_parser("synth", help="write a synthetic corpus and question set")
    leaves.append(p)
    p.add_argument("--docs", type=int, default=10000)
    p.add_argument("--questions-count", type=int, default=25)
    p.add_argument("--out-corpus", required=True)
    p.add_argument("--out-questions", required=True)
    p.add_argument("--seed", type=int, default=7)
    p.set_defaults(func=cmd_synth)

    if defaults:
        for leaf in [parser] + leaves:
            known = {k: v for k, v in defaults.items() if any(a.dest == k for a in leaf._actions)}
            if known:
                leaf.set_defaults(**known)
    return parser


def main(argv: list[str] | None = None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(name)s: %(message)s")
    argv = list(sys.argv[1:] if argv is None else argv)

    # apply config-file defaults before the real parse; CLI flags still win
    probe = argparse.ArgumentParser(add_help=False)
    probe.add_argument("--config")
    known, _ = probe.parse_known_args(argv)
    defaults = None
    if known.config:
        try:
            defaults = load_config(known.config)
        except (OSError, ValueError) as exc:
            print(f"error: {exc}", file=sys.stderr)
            return 1
    parser = build_parser(defaults)

    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (OSError, ValueError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
