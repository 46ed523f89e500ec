"""HTTP front door: POST /query over a loaded engine, plus the static UI route.

The service never mutates indexes; each request is isolated. One structured
log line (JSON) is emitted per query with the stage timings.
"""

from __future__ import annotations

import json
import logging
import os

from fastapi import FastAPI
from fastapi.responses import JSONResponse
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel, Field

from .pipeline import Engine, RetrievalConfig, StageFailure

logger = logging.getLogger("ragqa.service")


class QueryRequest(BaseModel):
    question: str
    strategy: str = "hybrid"
    depth: int = Field(default=50, ge=1)
    keep_n: int = Field(default=10, ge=1)


class DocumentOut(BaseModel):
    PMID: str
    title: str
    score: float
    stage: str


class TimingsOut(BaseModel):
    retrieval_ms: float
    rerank_ms: float
    generation_ms: float
    total_ms: float


class QueryResponse(BaseModel):
    response: str
    used_PMIDs: list[str]
    documents: list[DocumentOut]
    timings: TimingsOut
    flags: list[str]


def _error(status: int, message: str, stage: str | None = None) -> JSONResponse:
    body: dict = {"error": message}
    if stage is not None:
        body["stage"] = stage
    return JSONResponse(status_code=status, content=body)


def create_app(engine: Engine, ui_dir: str | None = None) -> FastAPI:
    """Build the service app around an immutable engine."""
    app = FastAPI(title="ragqa", version="0.1.0")

    @app.post("/query")
    def query(request: QueryRequest):
        if not request.question.strip():
            return _error(400, "empty question")
        try:
            config = RetrievalConfig(
                strategy=request.strategy,
                depth=request.depth,
                keep_n=request.keep_n,
                tokenizer=engine.config.tokenizer,
            )
        except ValueError as exc:
            return _error(400, str(exc))
        if config.strategy in ("bm25", "tfidf", "hybrid") and engine.indexes.sparse is None:
            return _error(503, "sparse index not loaded")
        if config.strategy == "dense" and (engine.indexes.dense is None or engine.indexes.embedder is None):
            return _error(503, "dense index not loaded")
        if config.strategy == "hybrid" and engine.reranker is None:
            return _error(503, "reranker not configured")
        if engine.generator is None:
            return _error(503, "generator not configured")
        try:
            result = engine.answer(request.question, config)
        except StageFailure as exc:
            return _error(502, str(exc), stage=exc.stage)
        except ValueError as exc:
            return _error(400, str(exc))
        documents = [
            DocumentOut(
                PMID=sd.pmid,
                title=engine.indexes.documents[sd.pmid].title if sd.pmid in engine.indexes.documents else "",
                score=sd.score,
                stage=sd.stage,
            )
            for sd in result.documents
        ]
        response = QueryResponse(
            response=result.response,
            used_PMIDs=result.used_pmids,
            documents=documents,
            timings=TimingsOut(
                retrieval_ms=result.timings.retrieval_ms,
                rerank_ms=result.timings.rerank_ms,
                generation_ms=result.timings.generation_ms,
                total_ms=result.timings.total_ms,
            ),
            flags=sorted(result.flags),
        )
        logger.info(
            "%s",
            json.dumps(
                {
                    "event": "query",
                    "strategy": request.strategy,
                    "depth": request.depth,
                    "keep_n": request.keep_n,
                    "n_documents": len(documents),
                    "flags": response.flags,
                    "timings": response.timings.model_dump(),
                }
            ),
        )
        return response

    @app.get("/healthz")
    def healthz():
        return {
            "status": "ok",
            "sparse_docs": engine.indexes.sparse.doc_count if engine.indexes.sparse else 0,
            "dense_docs": engine.indexes.dense.doc_count if engine.indexes.dense else 0,
        }

    if ui_dir and os.path.isdir(ui_dir):
        app.mount("/ui", StaticFiles(directory=ui_dir, html=True), name="ui")

    return app
