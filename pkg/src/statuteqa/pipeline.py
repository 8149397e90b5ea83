"""End-to-end retrieval: BM25 candidates, semantic scores, normalization,
fusion, and threshold selection, per question."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

from statuteqa.bm25 import DEFAULT_TOP_K, InvertedIndex, ScoredCandidate, retrieve_topk
from statuteqa.corpus import Corpus, Question
from statuteqa.ensemble import fuse, normalize_pools, select
from statuteqa.errors import ValidationError
from statuteqa.scorer import ScorerBackend, Task, relevance_request_id, score_pairs_chunked


@dataclass
class RetrievalPipeline:
    corpus: Corpus
    index: InvertedIndex
    backend: ScorerBackend
    top_k: int = DEFAULT_TOP_K
    scorer_text: str = "prefixed"  # "prefixed" | "raw": article side of the pair
    normalize_mode: str = "per_question"
    allow_empty_answer: bool = False
    batch_size: int = 32
    max_in_flight: int = 4
    _article_text: dict = field(init=False, repr=False)

    def __post_init__(self):
        if self.scorer_text not in ("prefixed", "raw"):
            raise ValidationError(f"scorer_text must be 'prefixed' or 'raw', got {self.scorer_text!r}")
        self._article_text = {
            a.key: (a.prefixed_text if self.scorer_text == "prefixed" else a.text)
            for a in self.corpus
        }

    def build_pools(self, questions: Sequence[Question]) -> dict[str, list[ScoredCandidate]]:
        """Top-k BM25 candidates per question with both score columns
        filled and normalized. Only pool members get semantic scores."""
        pools: dict[str, list[ScoredCandidate]] = {}
        items: list[tuple[str, str, str]] = []
        for q in questions:
            candidates = retrieve_topk(self.index, q.text, k=self.top_k, qid=q.question_id)
            pools[q.question_id] = candidates
            for c in candidates:
                text_b = self._article_text.get(c.key)
                if text_b is None:
                    raise ValidationError(f"index document {c.key} missing from corpus")
                items.append(
                    (relevance_request_id(q.question_id, c.law_id, c.article_id), q.text, text_b)
                )
        scores = score_pairs_chunked(
            self.backend, items, Task.RELEVANCE, self.batch_size, self.max_in_flight
        )
        for pool in pools.values():
            for c in pool:
                c.w_bert_raw = scores[relevance_request_id(c.qid, c.law_id, c.article_id)]
        normalize_pools(pools, self.normalize_mode)
        return pools

    def decide(
        self, pool: Sequence[ScoredCandidate], alpha: float, theta: float
    ) -> list[ScoredCandidate]:
        """Fused ranking filtered to the selected set, order preserved."""
        ranked = fuse(list(pool), alpha)
        chosen = select(ranked, theta, allow_empty_answer=self.allow_empty_answer)
        return [c for c in ranked if c.key in chosen]

    def retrieve(
        self, questions: Sequence[Question], alpha: float, theta: float
    ) -> dict[str, list[ScoredCandidate]]:
        pools = self.build_pools(questions)
        return {qid: self.decide(pool, alpha, theta) for qid, pool in pools.items()}

    def search(self, query: str, k: int, alpha: float, theta: float) -> list[ScoredCandidate]:
        """Single ad-hoc query (the serve endpoint); same decision path as
        retrieve but with the pool capped at k."""
        candidates = retrieve_topk(self.index, query, k=k)
        pools = {"": candidates}
        items = [
            (relevance_request_id("", c.law_id, c.article_id), query, self._article_text[c.key])
            for c in candidates
        ]
        scores = score_pairs_chunked(
            self.backend, items, Task.RELEVANCE, self.batch_size, self.max_in_flight
        )
        for c in candidates:
            c.w_bert_raw = scores[relevance_request_id("", c.law_id, c.article_id)]
        normalize_pools(pools, self.normalize_mode)
        return self.decide(candidates, alpha, theta)
