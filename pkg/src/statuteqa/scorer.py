"""Pluggable semantic scorers behind one protocol.

A scorer backend answers two kinds of requests: pair scores in [0, 1]
(relevance or pair classification) and per-token span logits for
extractive answers. Backends: a deterministic token-overlap baseline,
a precomputed score file, a remote HTTP service, and a weighted
combination of other backends. The engine never loads neural models;
anything model-shaped lives behind this protocol.
"""

from __future__ import annotations

import time
from collections import Counter
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Optional, Protocol, Sequence

import requests

from statuteqa.analyzer import Analyzer
from statuteqa.errors import ProtocolError, TransportError, ValidationError
from statuteqa.jsonl import read_jsonl

# Separates the components of a structured request id (qid / law / article
# or qid / key). U+001F cannot appear in dataset identifiers.
REQUEST_ID_SEP = "\x1f"


class Task(str, Enum):
    RELEVANCE = "relevance"
    PAIR_CLASSIFICATION = "pair_classification"


@dataclass(frozen=True)
class PairScoreRequest:
    items: tuple[tuple[str, str, str], ...]  # (request_id, text_a, text_b)
    task: Task

    def __post_init__(self):
        if not self.items:
            raise ValidationError("score request batch is empty")
        ids = [rid for rid, _, _ in self.items]
        if len(set(ids)) != len(ids):
            raise ValidationError("duplicate request_id in batch")


@dataclass(frozen=True)
class PairScoreResponse:
    scores: tuple[tuple[str, float], ...]  # (request_id, score in [0, 1])


@dataclass(frozen=True)
class SpanLogits:
    start_scores: list[float]
    end_scores: list[float]
    token_offsets: list[tuple[int, int]]  # byte offsets into the context

    def __post_init__(self):
        n = len(self.start_scores)
        if n == 0:
            raise ProtocolError("span logits are empty")
        if len(self.end_scores) != n or len(self.token_offsets) != n:
            raise ProtocolError(
                f"span logit lengths differ: start={n} end={len(self.end_scores)} "
                f"offsets={len(self.token_offsets)}"
            )


class ScorerBackend(Protocol):
    def score_pairs(self, request: PairScoreRequest) -> PairScoreResponse: ...

    def span_logits(self, question: str, context: str) -> SpanLogits: ...


def relevance_request_id(qid: str, law_id: str, article_id: str) -> str:
    return REQUEST_ID_SEP.join((qid, law_id, article_id))


def pair_request_id(qid: str, key: str) -> str:
    return REQUEST_ID_SEP.join((qid, key))


def score_pairs(backend: ScorerBackend, request: PairScoreRequest) -> PairScoreResponse:
    """Run a batch through a backend and enforce the response contract."""
    response = backend.score_pairs(request)
    got_ids = [rid for rid, _ in response.scores]
    want_ids = [rid for rid, _, _ in request.items]
    if got_ids != want_ids:
        raise ProtocolError(f"response ids {got_ids!r} do not match request ids {want_ids!r}")
    for rid, score in response.scores:
        if not 0.0 <= score <= 1.0:
            raise ProtocolError(f"score {score} for {rid!r} outside [0, 1]")
    return response


def span_logits(backend: ScorerBackend, question: str, context: str) -> SpanLogits:
    if not context:
        raise ValidationError("span_logits: context is empty")
    return backend.span_logits(question, context)


def score_pairs_chunked(
    backend: ScorerBackend,
    items: Sequence[tuple[str, str, str]],
    task: Task,
    batch_size: int = 32,
    max_in_flight: int = 4,
) -> dict[str, float]:
    """Split a large batch into chunks, scored with bounded concurrency.

    Results are keyed by request_id, so arrival order never matters.
    """
    chunks = [items[i : i + batch_size] for i in range(0, len(items), batch_size)]
    results: dict[str, float] = {}
    if not chunks:
        return results
    if max_in_flight <= 1 or len(chunks) == 1:
        for chunk in chunks:
            resp = score_pairs(backend, PairScoreRequest(items=tuple(chunk), task=task))
            results.update(resp.scores)
        return results
    from concurrent.futures import ThreadPoolExecutor

    with ThreadPoolExecutor(max_workers=max_in_flight) as pool:
        futures = [
            pool.submit(score_pairs, backend, PairScoreRequest(items=tuple(chunk), task=task))
            for chunk in chunks
        ]
        for fut in futures:
            results.update(fut.result().scores)
    return results


# ---------------------------------------------------------------------------
# Backends
# ---------------------------------------------------------------------------


class BaselineScorer:
    """Deterministic stand-in: token Jaccard for pairs, question-overlap
    indicators for span logits. Lets the whole pipeline run with no model."""

    def __init__(self, analyzer: Optional[Analyzer] = None):
        self.analyzer = analyzer or Analyzer()

    def _jaccard(self, text_a: str, text_b: str) -> float:
        ca = Counter(self.analyzer.tokens(text_a))
        cb = Counter(self.analyzer.tokens(text_b))
        union = sum((ca | cb).values())
        if union == 0:
            return 0.0
        inter = sum((ca & cb).values())
        return min(1.0, max(0.0, inter / union))

    def score_pairs(self, request: PairScoreRequest) -> PairScoreResponse:
        return PairScoreResponse(
            scores=tuple((rid, self._jaccard(a, b)) for rid, a, b in request.items)
        )

    def span_logits(self, question: str, context: str) -> SpanLogits:
        stream = self.analyzer.analyze(context)
        if not stream.tokens:
            raise ProtocolError("context produced no tokens")
        qtokens = set(self.analyzer.tokens(question))
        scores = [1.0 if t in qtokens else 0.0 for t in stream.tokens]
        return SpanLogits(
            start_scores=list(scores),
            end_scores=list(scores),
            token_offsets=list(stream.source_offsets),
        )


class FileScorer:
    """Replays precomputed scores / logits from JSON Lines fixtures.

    Pair lines: {"qid", "law_id", "article_id", "score"} for relevance or
    {"qid", "key", "score"} for pair classification. Span lines:
    {"question", "context", "start_scores", "end_scores", "token_offsets"}.
    """

    def __init__(self, pair_path: str | Path | None = None, span_path: str | Path | None = None):
        self._pairs: dict[str, float] = {}
        self._spans: dict[tuple[str, str], SpanLogits] = {}
        if pair_path is not None:
            for record in read_jsonl(pair_path):
                if "law_id" in record:
                    rid = relevance_request_id(
                        record["qid"], record["law_id"], record["article_id"]
                    )
                else:
                    rid = pair_request_id(record["qid"], record["key"])
                self._pairs[rid] = float(record["score"])
        if span_path is not None:
            for record in read_jsonl(span_path):
                self._spans[(record["question"], record["context"])] = SpanLogits(
                    start_scores=[float(x) for x in record["start_scores"]],
                    end_scores=[float(x) for x in record["end_scores"]],
                    token_offsets=[(int(s), int(e)) for s, e in record["token_offsets"]],
                )

    def score_pairs(self, request: PairScoreRequest) -> PairScoreResponse:
        scores = []
        for rid, _, _ in request.items:
            if rid not in self._pairs:
                raise ProtocolError(f"score file has no entry for request id {rid!r}")
            scores.append((rid, self._pairs[rid]))
        return PairScoreResponse(scores=tuple(scores))

    def span_logits(self, question: str, context: str) -> SpanLogits:
        key = (question, context)
        if key not in self._spans:
            raise ProtocolError(f"span file has no entry for question {question!r}")
        return self._spans[key]


class HttpScorer:
    """Remote scorer speaking the wire protocol.

    Transport failures are retried with exponential backoff; protocol
    errors (malformed responses) are surfaced immediately.
    """

    def __init__(
        self,
        base_url: str,
        timeout: float = 30.0,
        retries: int = 3,
        backoff: float = 0.2,
        session: Optional[requests.Session] = None,
    ):
        self.base_url = base_url.rstrip("/")
        self.timeout = timeout
        self.retries = retries
        self.backoff = backoff
        self.session = session or requests.Session()

    def _post(self, endpoint: str, payload: dict) -> dict:
        last: Exception | None = None
        for attempt in range(self.retries):
            try:
                resp = self.session.post(
                    f"{self.base_url}{endpoint}", json=payload, timeout=self.timeout
                )
            except (requests.ConnectionError, requests.Timeout) as e:
                last = e
                if attempt < self.retries - 1:
                    time.sleep(self.backoff * (2**attempt))
                continue
            if resp.status_code >= 500:
                last = TransportError(f"{endpoint}: server error {resp.status_code}")
                if attempt < self.retries - 1:
                    time.sleep(self.backoff * (2**attempt))
                continue
            if resp.status_code != 200:
                raise ProtocolError(f"{endpoint}: HTTP {resp.status_code}: {resp.text[:200]}")
            try:
                return resp.json()
            except ValueError as e:
                raise ProtocolError(f"{endpoint}: response is not JSON") from e
        raise TransportError(f"{endpoint}: giving up after {self.retries} attempts: {last}")

    def score_pairs(self, request: PairScoreRequest) -> PairScoreResponse:
        payload = {
            "task": request.task.value,
            "items": [{"id": rid, "text_a": a, "text_b": b} for rid, a, b in request.items],
        }
        body = self._post("/score_pairs", payload)
        try:
            by_id = {entry["id"]: float(entry["score"]) for entry in body["scores"]}
        except (KeyError, TypeError) as e:
            raise ProtocolError(f"malformed /score_pairs response: {body!r}") from e
        scores = []
        for rid, _, _ in request.items:
            if rid not in by_id:
                raise ProtocolError(f"/score_pairs response missing id {rid!r}")
            scores.append((rid, by_id[rid]))
        return PairScoreResponse(scores=tuple(scores))

    def span_logits(self, question: str, context: str) -> SpanLogits:
        body = self._post("/span_logits", {"question": question, "context": context})
        try:
            return SpanLogits(
                start_scores=[float(x) for x in body["start_scores"]],
                end_scores=[float(x) for x in body["end_scores"]],
                token_offsets=[(int(s), int(e)) for s, e in body["token_offsets"]],
            )
        except (KeyError, TypeError) as e:
            raise ProtocolError(f"malformed /span_logits response: {body!r}") from e

    def health(self) -> dict:
        try:
            resp = self.session.get(f"{self.base_url}/health", timeout=self.timeout)
        except (requests.ConnectionError, requests.Timeout) as e:
            raise TransportError(f"/health: {e}") from e
        return resp.json()


class CombinedScorer:
    """Weighted mean of member backends (weights >= 0, summing to 1)."""

    def __init__(self, backends: Sequence[ScorerBackend], weights: Sequence[float]):
        if len(backends) != len(weights):
            raise ValidationError(
                f"{len(backends)} backends but {len(weights)} weights"
            )
        if not backends:
            raise ValidationError("combine_scorers: no backends")
        if any(w < 0 for w in weights):
            raise ValidationError("combine_scorers: negative weight")
        if abs(sum(weights) - 1.0) > 1e-9:
            raise ValidationError(f"weights sum to {sum(weights)}, expected 1")
        self.backends = list(backends)
        self.weights = list(weights)

    def score_pairs(self, request: PairScoreRequest) -> PairScoreResponse:
        totals = [0.0] * len(request.items)
        for backend, weight in zip(self.backends, self.weights):
            resp = score_pairs(backend, request)
            for i, (_, score) in enumerate(resp.scores):
                totals[i] += weight * score
        return PairScoreResponse(
            scores=tuple(
                (rid, min(1.0, max(0.0, total)))
                for (rid, _, _), total in zip(request.items, totals)
            )
        )

    def span_logits(self, question: str, context: str) -> SpanLogits:
        member = [b.span_logits(question, context) for b in self.backends]
        offsets = member[0].token_offsets
        for logits in member[1:]:
            if logits.token_offsets != offsets:
                raise ProtocolError(
                    "combined backends disagree on token offsets; span logits cannot be averaged"
                )
        n = len(offsets)
        start = [
            sum(w * m.start_scores[i] for w, m in zip(self.weights, member)) for i in range(n)
        ]
        end = [sum(w * m.end_scores[i] for w, m in zip(self.weights, member)) for i in range(n)]
        return SpanLogits(start_scores=start, end_scores=end, token_offsets=list(offsets))


def combine_scorers(backends: Sequence[ScorerBackend], weights: Sequence[float]) -> CombinedScorer:
    return CombinedScorer(backends, weights)

