"""Okapi BM25 over an inverted index of prefixed article text.

The lexical half of the retrieval pipeline. Articles are indexed as
prefixed_text (rendered article index + content), so a query that cites
an article by number can match on the prefix. Queries are analyzed
verbatim, with the same tokenizer that built the index.
"""

from __future__ import annotations

import json
import math
from bisect import bisect_left
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from statuteqa.analyzer import Analyzer
from statuteqa.corpus import Corpus
from statuteqa.errors import ValidationError

# Recall on labeled training sets saturates by depth 100, so that is the
# default candidate depth handed to the semantic scorer.
DEFAULT_TOP_K = 100


@dataclass(frozen=True)
class BM25Params:
    k1: float = 1.2
    b: float = 0.75

    def __post_init__(self):
        if self.k1 <= 0:
            raise ValidationError(f"k1 must be > 0, got {self.k1}")
        if not 0.0 <= self.b <= 1.0:
            raise ValidationError(f"b must be in [0, 1], got {self.b}")


@dataclass
class ScoredCandidate:
    """One (question, article) pair moving through the retrieval pipeline.

    Raw scores are filled by their producers (BM25, semantic scorer),
    normalized columns by min-max scaling over the question's candidate
    pool, and `score` by the fusion step.
    """

    qid: str
    law_id: str
    article_id: str
    w_bm25_raw: float = 0.0
    w_bert_raw: float = 0.0
    w_bm25: Optional[float] = None
    w_bert: Optional[float] = None
    score: Optional[float] = None

    @property
    def key(self) -> tuple[str, str]:
        return (self.law_id, self.article_id)

    def to_dict(self) -> dict:
        return {
            "qid": self.qid,
            "law_id": self.law_id,
            "article_id": self.article_id,
            "w_bm25_raw": self.w_bm25_raw,
            "w_bert_raw": self.w_bert_raw,
            "w_bm25": self.w_bm25,
            "w_bert": self.w_bert,
            "score": self.score,
        }


@dataclass
class InvertedIndex:
    postings: dict[str, list[tuple[int, int]]]  # term -> [(doc_ordinal, tf)], ordinal ascending
    doc_lengths: list[int]
    doc_table: list[tuple[str, str]]  # ordinal -> (law_id, article_id)
    params: BM25Params
    tokenizer_version: str
    stopwords: tuple[str, ...] = ()
    avg_doc_length: float = field(init=False)

    def __post_init__(self):
        self.avg_doc_length = float(np.mean(self.doc_lengths)) if self.doc_lengths else 0.0
        # All-empty documents leave nothing in the postings, so the norm
        # divisor is never used; 1.0 just keeps the arithmetic finite.
        avg = self.avg_doc_length if self.avg_doc_length > 0 else 1.0
        self._norms = self.params.k1 * (
            1.0 - self.params.b + self.params.b * np.asarray(self.doc_lengths, dtype=float) / avg
        )
        self._dense = {
            term: (
                np.fromiter((o for o, _ in plist), dtype=np.int64, count=len(plist)),
                np.fromiter((tf for _, tf in plist), dtype=np.float64, count=len(plist)),
            )
            for term, plist in self.postings.items()
        }

    @property
    def doc_count(self) -> int:
        return len(self.doc_table)

    @property
    def analyzer(self) -> Analyzer:
        return Analyzer(stopwords=frozenset(self.stopwords))

    def idf(self, term: str) -> float:
        # +1 inside the log keeps idf >= 0 even for terms in most documents.
        df = len(self.postings.get(term, ()))
        if df == 0:
            return 0.0
        n = self.doc_count
        return math.log(1.0 + (n - df + 0.5) / (df + 0.5))

    def term_frequency(self, term: str, doc_ordinal: int) -> int:
        plist = self.postings.get(term)
        if not plist:
            return 0
        i = bisect_left(plist, (doc_ordinal, 0))
        if i < len(plist) and plist[i][0] == doc_ordinal:
            return plist[i][1]
        return 0

    def save(self, path: str | Path) -> None:
        payload = {
            "tokenizer_version": self.tokenizer_version,
            "stopwords": sorted(self.stopwords),
            "params": {"k1": self.params.k1, "b": self.params.b},
            "doc_table": [[law, art] for law, art in self.doc_table],
            "doc_lengths": self.doc_lengths,
            "postings": {t: [[o, tf] for o, tf in plist] for t, plist in self.postings.items()},
        }
        Path(path).write_text(
            json.dumps(payload, ensure_ascii=False, sort_keys=True, separators=(",", ":")),
            encoding="utf-8",
        )

    @classmethod
    def load(cls, path: str | Path) -> "InvertedIndex":
        payload = json.loads(Path(path).read_text(encoding="utf-8"))
        version = payload["tokenizer_version"]
        current = Analyzer().version
        if version != current:
            raise ValidationError(
                f"index built with tokenizer {version!r}, this build uses {current!r}"
            )
        return cls(
            postings={
                t: [(int(o), int(tf)) for o, tf in plist]
                for t, plist in payload["postings"].items()
            },
            doc_lengths=[int(x) for x in payload["doc_lengths"]],
            doc_table=[(law, art) for law, art in payload["doc_table"]],
            params=BM25Params(**payload["params"]),
            tokenizer_version=version,
            stopwords=tuple(payload.get("stopwords", [])),
        )


def build_index(
    corpus: Corpus, analyzer: Analyzer, params: BM25Params = BM25Params()
) -> InvertedIndex:
    """Index every article's prefixed_text; doc ordinals follow corpus order."""
    if len(corpus) == 0:
        raise ValidationError("build_index: corpus is empty")
    postings: dict[str, list[tuple[int, int]]] = {}
    doc_lengths: list[int] = []
    doc_table: list[tuple[str, str]] = []
    for ordinal, article in enumerate(corpus):
        tokens = analyzer.tokens(article.prefixed_text)
        doc_lengths.append(len(tokens))
        doc_table.append(article.key)
        counts: dict[str, int] = {}
        for t in tokens:
            counts[t] = counts.get(t, 0) + 1
        for term in sorted(counts):
            postings.setdefault(term, []).append((ordinal, counts[term]))
    return InvertedIndex(
        postings=postings,
        doc_lengths=doc_lengths,
        doc_table=doc_table,
        params=params,
        tokenizer_version=analyzer.version,
        stopwords=tuple(sorted(analyzer.stopwords)),
    )


def bm25_score(index: InvertedIndex, query_tokens: Sequence[str], doc_ordinal: int) -> float:
    """Okapi BM25 for one document.

    score = sum over query tokens of
        idf(t) * tf * (k1 + 1) / (tf + k1 * (1 - b + b * len/avglen))

    Query tokens are taken as given: a token repeated in the query
    contributes once per occurrence. Terms absent from the index add 0.
    """
    if not 0 <= doc_ordinal < index.doc_count:
        raise ValidationError(f"doc_ordinal {doc_ordinal} out of range")
    k1, b = index.params.k1, index.params.b
    avg = index.avg_doc_length if index.avg_doc_length > 0 else 1.0
    norm = k1 * (1.0 - b + b * index.doc_lengths[doc_ordinal] / avg)
    score = 0.0
    for term in query_tokens:
        tf = index.term_frequency(term, doc_ordinal)
        if tf == 0:
            continue
        score += index.idf(term) * tf * (k1 + 1.0) / (tf + norm)
    return score


def score_all(index: InvertedIndex, query_tokens: Sequence[str]) -> np.ndarray:
    """BM25 scores for every document, via the postings accumulator."""
    scores = np.zeros(index.doc_count, dtype=np.float64)
    k1 = index.params.k1
    for term in query_tokens:
        entry = index._dense.get(term)
        if entry is None:
            continue
        ordinals, tfs = entry
        idf = index.idf(term)
        scores[ordinals] += idf * tfs * (k1 + 1.0) / (tfs + index._norms[ordinals])
    return scores


def retrieve_topk(
    index: InvertedIndex, query: str, k: int = DEFAULT_TOP_K, qid: str = ""
) -> list[ScoredCandidate]:
    """Top-k documents by BM25, descending; ties broken by ascending ordinal."""
    if k < 1:
        raise ValidationError(f"k must be >= 1, got {k}")
    tokens = index.analyzer.tokens(query)
    scores = score_all(index, tokens)
    # Stable argsort of the negated scores keeps ascending ordinal among ties.
    order = np.argsort(-scores, kind="stable")[:k]
    out = []
    for ordinal in order:
        law_id, article_id = index.doc_table[ordinal]
        out.append(
            ScoredCandidate(
                qid=qid,
                law_id=law_id,
                article_id=article_id,
                w_bm25_raw=float(scores[ordinal]),
            )
        )
    return out
