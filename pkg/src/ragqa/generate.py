"""Prompt assembly, answer generation backends, and structured answer parsing.

The prompt is a fixed three-part template (system instructions, the user
question, a JSON context block of retrieved documents in rank order). The
model must reply with a JSON object carrying "response" and "used_PMIDs";
parsing validates the citations against the supplied context.
"""

from __future__ import annotations

import abc
import json
import os
import threading
from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Mapping, Sequence

import requests

from .corpus import Document, TokenizerConfig, tokenize
from .sparse import ScoredDoc

if TYPE_CHECKING:
    from .pipeline import Timings

SYSTEM_PROMPT = (
    "You are a scientific medical assistant designed to synthesize responses from "
    "specific medical documents. Only use the information provided in the documents "
    "to answer questions. The first documents should be the most relevant. Do not "
    "use any other information except for the documents provided. When answering "
    "questions, always format your response as a JSON object with fields for "
    "'response', 'used_PMIDs'. Cite all PMIDs your response is based on in the "
    "'used_PMIDs' field. Please think step-by-step before answering questions and "
    "provide the most accurate response possible. Provide your answer to the "
    "question in the 'response' field."
)

USER_TEMPLATE = "Answer the following question: {question}"

CONTEXT_HEADER = "Here are the documents:"

NO_CONTEXT_NOTE = "No documents were retrieved for this question."


class GenerationError(RuntimeError):
    """Raised when the model output cannot be parsed even after repair."""


class GeneratorBackendError(RuntimeError):
    """Raised when the generation endpoint fails."""


@dataclass(frozen=True)
class PromptBundle:
    """The three prompt parts, assembled deterministically from question + docs."""

    system_text: str
    user_text: str
    context_text: str

    def full_text(self) -> str:
        return "\n\n".join((self.system_text, self.user_text, self.context_text))


@dataclass
class QAResult:
    """A generated answer with its citations, supporting documents and timings."""

    response: str
    used_pmids: list[str]
    documents: list[ScoredDoc]
    timings: "Timings"
    flags: set[str] = field(default_factory=set)


def build_prompt(question: str, docs: Sequence[tuple[ScoredDoc, Document]]) -> PromptBundle:
    """Assemble the prompt; docs must already be in rank order.

    The context block keys documents doc1..docN in that order and carries the
    stage score of each document as relevance_score. Output depends only on
    (question, docs).
    """
    entries: dict[str, dict[str, object]] = {}
    for i, (scored, doc) in enumerate(docs, 1):
        entries[f"doc{i}"] = {
            "PMID": doc.pmid,
            "title": doc.title,
            "content": doc.content,
            "relevance_score": scored.score,
        }
    context = CONTEXT_HEADER + "\n" + json.dumps(entries, indent=2, ensure_ascii=False)
    if not docs:
        context += "\n" + NO_CONTEXT_NOTE
    return PromptBundle(
        system_text=SYSTEM_PROMPT,
        user_text=USER_TEMPLATE.format(question=question),
        context_text=context,
    )


@dataclass(frozen=True)
class ParsedAnswer:
    response: str
    used_pmids: list[str]
    flags: frozenset[str]


def _validate_payload(obj: object) -> tuple[str, list[str]] | None:
    if not isinstance(obj, dict):
        return None
    response = obj.get("response")
    raw_pmids = obj.get("used_PMIDs")
    if not isinstance(response, str) or not isinstance(raw_pmids, list):
        return None
    pmids: list[str] = []
    for item in raw_pmids:
        if isinstance(item, bool):
            return None
        if isinstance(item, str):
            pmids.append(item)
        elif isinstance(item, int):
            pmids.append(str(item))
        else:
            return None
    return response, pmids


def parse_answer(raw: str, context_pmids: set[str]) -> ParsedAnswer:
    """Parse a model reply into (response, used_PMIDs, flags).

    Invalid JSON gets one repair pass that extracts the first {...} block;
    anything still unparseable raises GenerationError("malformed generation").
    Citations outside the context set are kept but flagged citation_violation.
    """
    flags: set[str] = set()
    payload = None
    try:
        payload = _validate_payload(json.loads(raw))
    except json.JSONDecodeError:
        start = raw.find("{")
        end = raw.rfind("}")
        if start != -1 and end > start:
            try:
                payload = _validate_payload(json.loads(raw[start : end + 1]))
            except json.JSONDecodeError:
                payload = None
        if payload is not None:
            flags.add("parse_repaired")
    if payload is None:
        raise GenerationError("malformed generation")
    response, used_pmids = payload
    if not set(used_pmids) <= context_pmids:
        flags.add("citation_violation")
    return ParsedAnswer(response=response, used_pmids=used_pmids, flags=frozenset(flags))


def classify_yes_no(response: str) -> str:
    """Map a free-text answer to {yes, no, invalid}: first yes/no token wins."""
    for token in tokenize(response, TokenizerConfig()):
        if token in ("yes", "no"):
            return token
    return "invalid"


@dataclass(frozen=True)
class FixedAnswer:
    """Stub policy: always answer with the given text, citing the whole context."""

    answer: str


@dataclass(frozen=True)
class GoldEcho:
    """Stub policy keyed by question text: echo the gold label iff any gold
    PMID made it into the context, otherwise the opposite label; cite the
    intersection either way."""

    gold: Mapping[str, tuple[str, frozenset[str]]]


def _stub_payload(question: str, context_pmids: Sequence[str], policy) -> str:
    if isinstance(policy, FixedAnswer):
        return json.dumps({"response": policy.answer, "used_PMIDs": list(context_pmids)})
    if isinstance(policy, GoldEcho):
        label, gold_pmids = policy.gold[question]
        hit = [p for p in context_pmids if p in gold_pmids]
        answer = label if hit else ("no" if label == "yes" else "yes")
        return json.dumps({"response": answer, "used_PMIDs": hit})
    raise TypeError(f"unknown stub policy: {policy!r}")


def stub_generate(question: str, docs: Sequence[tuple[ScoredDoc, Document]], policy) -> str:
    """Hermetic generation substitute; emits the same JSON shape as the model."""
    return _stub_payload(question, [doc.pmid for _, doc in docs], policy)


class Generator(abc.ABC):
    """A chat-style completion backend; temperature stays 0 in evaluation."""

    @abc.abstractmethod
    def complete(self, system: str, user: str, context: str, temperature: float = 0.0) -> str:
        """Return the raw model reply for the three prompt parts."""


class StubGenerator(Generator):
    """Drives stub_generate from the assembled prompt text alone."""

    def __init__(self, policy):
        self.policy = policy

    def complete(self, system: str, user: str, context: str, temperature: float = 0.0) -> str:
        question = user.removeprefix("Answer the following question: ")
        body = context.removeprefix(CONTEXT_HEADER).strip()
        if body.endswith(NO_CONTEXT_NOTE):
            body = body[: -len(NO_CONTEXT_NOTE)].strip()
        entries = json.loads(body)
        pmids = [entry["PMID"] for entry in entries.values()]
        return _stub_payload(question, pmids, self.policy)


class ChatCompletionsGenerator(Generator):
    """Client for any chat-completions-compatible HTTP endpoint.

    The API key is read from an environment variable (default RAGQA_API_KEY);
    concurrent calls are capped by a semaphore.
    """

    def __init__(
        self,
        endpoint: str,
        model: str,
        timeout: float = 60.0,
        api_key_env: str = "RAGQA_API_KEY",
        max_in_flight: int = 4,
    ):
        self.endpoint = endpoint
        self.model = model
        self.timeout = timeout
        self.api_key_env = api_key_env
        self._sem = threading.BoundedSemaphore(max_in_flight)
        self._session = requests.Session()

    def complete(self, system: str, user: str, context: str, temperature: float = 0.0) -> str:
        body = {
            "model": self.model,
            "messages": [
                {"role": "system", "content": system},
                {"role": "user", "content": user},
                {"role": "user", "content": context},
            ],
            "temperature": temperature,
        }
        headers = {}
        api_key = os.environ.get(self.api_key_env)
        if api_key:
            headers["Authorization"] = f"Bearer {api_key}"
        try:
            with self._sem:
                resp = self._session.post(self.endpoint, json=body, headers=headers, timeout=self.timeout)
            resp.raise_for_status()
            return resp.json()["choices"][0]["message"]["content"]
        except Exception as exc:
            raise GeneratorBackendError(f"generation backend failed: {exc}") from exc
