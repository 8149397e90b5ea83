"""Data-enrichment toolkit for crawled legal Q&A dumps.

Crawled counseling answers cite the statutes they rely on; the citations
are pulled out with a configurable pattern set, resolved against the
corpus, and the pairs filtered by question length so they match the
official data's profile. Multiple-choice questions are recycled into
yes/no training statements, and a token-budget subset is cut for
masked-language-model pretraining.
"""

from __future__ import annotations

import re
import unicodedata
from dataclasses import dataclass, field, replace
from enum import Enum
from pathlib import Path
from typing import Iterable, Optional, Sequence

from statuteqa.analyzer import Analyzer
from statuteqa.corpus import Corpus, Question, QuestionType, bucket_histogram
from statuteqa.errors import ValidationError
from statuteqa.jsonl import read_jsonl
from statuteqa.qa import SpecialPatterns, classify_special_choices

# "Điều <n> <law name>" style citations; each pattern must expose
# article_id and law_id groups. The name capture stops at punctuation or at
# a lowercase function word (case matters: "Quy hoạch" is a name word,
# "quy định" ends one).
_LAW_KEYWORD = (
    r"(?:Bộ luật|bộ luật|Luật|luật|Nghị định|nghị định|Nghị quyết|nghị quyết"
    r"|Pháp lệnh|pháp lệnh|Thông tư|thông tư|Hiến pháp|hiến pháp)"
)
_NAME_STOP = (
    r"(?:và|hoặc|hay|là|thì|mà|nên|vì|để|của|cho|về|với|theo|tại|trên|này|đó"
    r"|đã|sẽ|được|bị|do|có|không|cũng|nói|nêu|ghi|quy|khi|nếu|từ|đến)\b"
)
_NAME_TOKEN = rf"(?!{_NAME_STOP})[^\W_][\w/\-]*"
DEFAULT_REFERENCE_PATTERNS = (
    rf"[Đđ]iều\s+(?P<article_id>\d+[a-z]?)\s+"
    rf"(?P<law_id>{_LAW_KEYWORD}(?:[ \t]+{_NAME_TOKEN})*)",
)


class FilterTask(str, Enum):
    RETRIEVAL = "retrieval"
    QA = "qa"


@dataclass(frozen=True)
class CrawledPair:
    question: str
    answer: str
    source_url: str = ""
    extracted_refs: Optional[tuple[tuple[str, str], ...]] = None


@dataclass(frozen=True)
class EnrichmentConfig:
    max_question_words_task1: int = 100
    max_question_words_task2: int = 128
    mlm_max_question_tokens: int = 128
    mlm_max_total_tokens: int = 512
    reference_patterns: tuple[str, ...] = DEFAULT_REFERENCE_PATTERNS
    law_aliases: dict[str, str] = field(default_factory=dict)  # normalized name -> corpus law_id

    def __post_init__(self):
        for name in (
            "max_question_words_task1",
            "max_question_words_task2",
            "mlm_max_question_tokens",
            "mlm_max_total_tokens",
        ):
            if getattr(self, name) <= 0:
                raise ValidationError(f"{name} must be positive")

    def word_limit(self, task: FilterTask) -> int:
        if task is FilterTask.RETRIEVAL:
            return self.max_question_words_task1
        return self.max_question_words_task2


def load_crawled_pairs(path: str | Path) -> list[CrawledPair]:
    """Read a crawled dump: JSON Lines of {"question", "answer", "url"}."""
    return [
        CrawledPair(
            question=unicodedata.normalize("NFC", str(r["question"])),
            answer=unicodedata.normalize("NFC", str(r["answer"])),
            source_url=str(r.get("url", "")),
        )
        for r in read_jsonl(path)
    ]


def _normalize_law_name(name: str) -> str:
    return unicodedata.normalize("NFC", " ".join(name.split()).casefold())


def extract_references(
    answer_text: str, patterns: Sequence[str] = DEFAULT_REFERENCE_PATTERNS
) -> list[tuple[str, str]]:
    """Ordered, deduplicated (law_id, article_id) citations found in a text.

    Law names are whitespace-collapsed and case-folded, so the caller
    matches them against corpus ids the same way.
    """
    refs: list[tuple[str, str]] = []
    seen: set[tuple[str, str]] = set()
    text = unicodedata.normalize("NFC", answer_text)
    for pattern in patterns:
        for m in re.finditer(pattern, text):
            ref = (_normalize_law_name(m.group("law_id")), m.group("article_id"))
            if ref not in seen:
                seen.add(ref)
                refs.append(ref)
    return refs


class LawResolver:
    """Maps normalized citation names to corpus law ids (aliases first)."""

    def __init__(self, corpus: Corpus, aliases: Optional[dict[str, str]] = None):
        self.corpus = corpus
        self._by_name = {_normalize_law_name(law_id): law_id for law_id in corpus.law_ids()}
        for name, law_id in (aliases or {}).items():
            self._by_name[_normalize_law_name(name)] = law_id

    def resolve(self, law_name: str, article_id: str) -> Optional[tuple[str, str]]:
        law_id = self._by_name.get(_normalize_law_name(law_name))
        if law_id is None:
            return None
        if self.corpus.get(law_id, article_id) is None:
            return None
        return (law_id, article_id)


def filter_pairs(
    pairs: Iterable[CrawledPair],
    corpus: Corpus,
    config: EnrichmentConfig = EnrichmentConfig(),
    task: FilterTask = FilterTask.RETRIEVAL,
    analyzer: Optional[Analyzer] = None,
) -> list[CrawledPair]:
    """Keep pairs whose question fits the task's word budget and whose
    citations all resolve in the corpus (non-citing pairs are dropped).

    Kept pairs carry their references resolved to corpus (law_id,
    article_id) keys; every resolved reference counts as a positive label.
    """
    analyzer = analyzer or Analyzer()
    resolver = LawResolver(corpus, config.law_aliases)
    limit = config.word_limit(task)
    kept: list[CrawledPair] = []
    for pair in pairs:
        if analyzer.word_count(pair.question) > limit:
            continue
        refs = pair.extracted_refs
        if refs is None:
            refs = tuple(extract_references(pair.answer, config.reference_patterns))
        if not refs:
            continue
        resolved = [resolver.resolve(law, art) for law, art in refs]
        if any(r is None for r in resolved):
            continue
        deduped: list[tuple[str, str]] = []
        for r in resolved:
            if r not in deduped:
                deduped.append(r)
        kept.append(replace(pair, extracted_refs=tuple(deduped)))
    return kept


@dataclass(frozen=True)
class YesNoSample:
    sample_id: str
    text: str
    label: bool  # True = affirmative
    source_qid: str
    source_choice: str


def mc_to_yesno(
    mc_questions: Sequence[Question],
    special_patterns: SpecialPatterns = SpecialPatterns(),
) -> list[YesNoSample]:
    """One yes/no statement per concrete choice: stem + " " + choice text,
    affirmative iff the choice is the gold answer. Special choices have no
    supporting article text and are skipped."""
    samples: list[YesNoSample] = []
    for q in mc_questions:
        if q.qtype is not QuestionType.MULTIPLE_CHOICE or not q.choices:
            raise ValidationError(f"question {q.question_id!r} is not multiple choice")
        if q.gold_answer is None:
            raise ValidationError(f"question {q.question_id!r} has no gold label")
        special = {s.label for s in classify_special_choices(q.choices, special_patterns)}
        for label, text in q.choices:
            if label in special:
                continue
            samples.append(
                YesNoSample(
                    sample_id=f"{q.question_id}:{label}",
                    text=q.text + " " + text,
                    label=label == q.gold_answer,
                    source_qid=q.question_id,
                    source_choice=label,
                )
            )
    return samples


def build_mlm_subset(
    pairs: Iterable[CrawledPair],
    config: EnrichmentConfig = EnrichmentConfig(),
    analyzer: Optional[Analyzer] = None,
) -> list[str]:
    """Concatenated question+answer records within the pretraining token
    budget: question <= 128 tokens and question plus answer <= 512."""
    analyzer = analyzer or Analyzer()
    records: list[str] = []
    for pair in pairs:
        q_tokens = analyzer.word_count(pair.question)
        if q_tokens > config.mlm_max_question_tokens:
            continue
        if q_tokens + analyzer.word_count(pair.answer) > config.mlm_max_total_tokens:
            continue
        records.append(pair.question + " " + pair.answer)
    return records


@dataclass(frozen=True)
class FactoidSample:
    question: str
    context: str
    answer: str
    byte_start: int
    byte_end: int


def filter_factoid_training(
    samples: Iterable[tuple[str, str, str]]
) -> list[FactoidSample]:
    """Keep (question, context, answer) triples whose answer occurs verbatim
    in the context; the first occurrence provides the gold byte offsets."""
    kept: list[FactoidSample] = []
    for question, context, answer in samples:
        idx = context.find(answer)
        if idx < 0:
            continue
        byte_start = len(context[:idx].encode("utf-8"))
        kept.append(
            FactoidSample(
                question=question,
                context=context,
                answer=answer,
                byte_start=byte_start,
                byte_end=byte_start + len(answer.encode("utf-8")),
            )
        )
    return kept


def length_histogram(
    pairs: Iterable[CrawledPair],
    bucket_width: int = 50,
    analyzer: Optional[Analyzer] = None,
) -> dict:
    """Question word-count distribution, in the same JSON shape as the
    corpus stats output (run before and after filtering to compare)."""
    analyzer = analyzer or Analyzer()
    lengths = [analyzer.word_count(p.question) for p in pairs]
    if not lengths:
        return {"buckets": [], "mean": None, "median": None, "max": None}
    buckets = bucket_histogram(lengths, bucket_width)
    lengths_sorted = sorted(lengths)
    n = len(lengths_sorted)
    median = (
        lengths_sorted[n // 2]
        if n % 2
        else (lengths_sorted[n // 2 - 1] + lengths_sorted[n // 2]) / 2
    )
    return {
        "buckets": [{"lo": lo, "hi": hi, "count": c} for lo, hi, c in buckets],
        "mean": int(round(sum(lengths) / n)),
        "median": int(round(median)),
        "max": max(lengths),
    }
