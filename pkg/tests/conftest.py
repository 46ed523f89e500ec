"""Shared fixtures: tiny corpora, a gold-aware oracle reranker, and a local
JSON HTTP server for exercising the remote-backend clients hermetically."""

from __future__ import annotations

import json
import threading
from http.server import BaseHTTPRequestHandler, HTTPServer
from typing import Callable, Sequence

import pytest

from ragqa.corpus import Document, TokenizerConfig
from ragqa.rerank import Reranker
from ragqa.sparse import build_sparse


@pytest.fixture
def plain_config():
    return TokenizerConfig()


@pytest.fixture
def fever_docs(plain_config):
    return [
        Document.build("1", "", "aspirin reduces fever", plain_config),
        Document.build("2", "", "fever fever treatment", plain_config),
        Document.build("3", "", "vaccine prevents measles", plain_config),
    ]


@pytest.fixture
def fever_index(fever_docs, plain_config):
    return build_sparse(fever_docs, plain_config)


class GoldOracleReranker(Reranker):
    """Scores +1 for planted gold documents, -1 for everything else."""

    def __init__(self, gold_pmids: set[str]):
        self.gold_pmids = set(gold_pmids)

    def score_pairs(self, query: str, documents: Sequence[Document]) -> list[float]:
        return [1.0 if d.pmid in self.gold_pmids else -1.0 for d in documents]


@pytest.fixture
def gold_reranker_factory():
    return GoldOracleReranker


class _JsonHandler(BaseHTTPRequestHandler):
    routes: dict[str, Callable[[dict], tuple[int, dict]]] = {}

    def do_POST(self):
        length = int(self.headers.get("Content-Length", 0))
        body = json.loads(self.rfile.read(length) or b"{}")
        handler = self.routes.get(self.path)
        if handler is None:
            self.send_response(404)
            self.end_headers()
            return
        status, payload = handler(body)
        data = json.dumps(payload).encode("utf-8")
        self.send_response(status)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(data)))
        self.end_headers()
        self.wfile.write(data)

    def log_message(self, *args):  # keep test output quiet
        pass


@pytest.fixture
def json_server():
    """Start a throwaway HTTP server; yields (url, routes dict) to fill in."""
    servers = []

    def start(routes: dict[str, Callable[[dict], tuple[int, dict]]]) -> str:
        handler = type("Handler", (_JsonHandler,), {"routes": routes})
        server = HTTPServer(("127.0.0.1", 0), handler)
        thread = threading.Thread(target=server.serve_forever, daemon=True)
        thread.start()
        servers.append(server)
        return f"http://127.0.0.1:{server.server_port}"

    yield start
    for server in servers:
        server.shutdown()
        server.server_close()
