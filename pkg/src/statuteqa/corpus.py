"""Load, validate, and serve the legal corpus and question sets.

Corpus files are JSON lists of laws, each law carrying an id and its
articles; question files are JSON lists of typed question objects.
All text is NFC-normalized on ingest. A corpus is immutable once loaded.
"""

from __future__ import annotations

import json
import statistics
import unicodedata
from dataclasses import dataclass, field
from enum import Enum
from importlib import resources
from pathlib import Path
from typing import Iterable, Iterator, Optional

from statuteqa.analyzer import Analyzer
from statuteqa.errors import ParseError, ValidationError

# Vietnamese statute citations render an article index in this shape;
# locale-specific wording stays configurable.
DEFAULT_PREFIX_TEMPLATE = "Điều {article_id} {law_id}"


class QuestionType(str, Enum):
    FACTOID = "factoid"
    YES_NO = "yes_no"
    MULTIPLE_CHOICE = "multiple_choice"


@dataclass(frozen=True)
class Article:
    """One statute article; prefixed_text is what gets indexed."""

    law_id: str
    article_id: str
    text: str
    prefixed_text: str

    @property
    def key(self) -> tuple[str, str]:
        return (self.law_id, self.article_id)


@dataclass(frozen=True)
class Question:
    question_id: str
    qtype: QuestionType
    text: str
    choices: Optional[tuple[tuple[str, str], ...]] = None
    gold_relevant: Optional[frozenset[tuple[str, str]]] = None
    gold_answer: Optional[str] = None

    def choice_labels(self) -> list[str]:
        return [label for label, _ in (self.choices or ())]


@dataclass(frozen=True)
class Corpus:
    articles: tuple[Article, ...]
    prefix_template: str = DEFAULT_PREFIX_TEMPLATE
    _by_key: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        by_key = {a.key: a for a in self.articles}
        object.__setattr__(self, "_by_key", by_key)

    def __len__(self) -> int:
        return len(self.articles)

    def __iter__(self) -> Iterator[Article]:
        return iter(self.articles)

    def get(self, law_id: str, article_id: str) -> Optional[Article]:
        return self._by_key.get((law_id, article_id))

    def __contains__(self, key: tuple[str, str]) -> bool:
        return key in self._by_key

    def law_ids(self) -> list[str]:
        seen: dict[str, None] = {}
        for a in self.articles:
            seen.setdefault(a.law_id, None)
        return list(seen)

    def union(self, other: "Corpus") -> "Corpus":
        """Merge two corpora; duplicate (law_id, article_id) pairs rejected.

        Auxiliary corpora are never merged implicitly — files may not share
        an id scheme, so unioning is always an explicit call.
        """
        merged = list(self.articles)
        for a in other.articles:
            if a.key in self._by_key:
                raise ValidationError(
                    f"duplicate article (law_id={a.law_id!r}, article_id={a.article_id!r}) in union"
                )
            merged.append(a)
        return Corpus(articles=tuple(merged), prefix_template=self.prefix_template)

    def to_laws_json(self) -> list[dict]:
        """Serialize back to the on-disk laws shape (round-trips load_corpus)."""
        laws: dict[str, list[dict]] = {}
        order: list[str] = []
        for a in self.articles:
            if a.law_id not in laws:
                laws[a.law_id] = []
                order.append(a.law_id)
            laws[a.law_id].append({"id": a.article_id, "text": a.text})
        return [{"id": law_id, "articles": laws[law_id]} for law_id in order]

    def save(self, path: str | Path) -> None:
        Path(path).write_text(
            json.dumps(self.to_laws_json(), ensure_ascii=False, indent=2) + "\n",
            encoding="utf-8",
        )


def render_prefix(template: str, law_id: str, article_id: str) -> str:
    return template.format(article_id=article_id, law_id=law_id)


def _read_json(path: str | Path):
    raw = Path(path).read_text(encoding="utf-8")
    try:
        return json.loads(raw)
    except json.JSONDecodeError as e:
        byte_offset = len(raw[: e.pos].encode("utf-8"))
        raise ParseError(f"{path}: malformed JSON at byte {byte_offset}: {e.msg}") from e


def load_corpus(path: str | Path, prefix_template: str = DEFAULT_PREFIX_TEMPLATE) -> Corpus:
    """Load a corpus file: a JSON list of laws `{id, articles: [{id, text}]}`."""
    data = _read_json(path)
    if not isinstance(data, list):
        raise ValidationError(f"{path}: corpus file must be a JSON list of laws")
    articles: list[Article] = []
    seen: set[tuple[str, str]] = set()
    for law in data:
        law_id = unicodedata.normalize("NFC", str(law["id"]))
        for art in law.get("articles", []):
            article_id = unicodedata.normalize("NFC", str(art["id"]))
            text = unicodedata.normalize("NFC", str(art["text"]))
            if not text.strip():
                raise ValidationError(
                    f"empty article text for (law_id={law_id!r}, article_id={article_id!r})"
                )
            key = (law_id, article_id)
            if key in seen:
                raise ValidationError(
                    f"duplicate article (law_id={law_id!r}, article_id={article_id!r})"
                )
            seen.add(key)
            prefixed = render_prefix(prefix_template, law_id, article_id) + " " + text
            articles.append(
                Article(law_id=law_id, article_id=article_id, text=text, prefixed_text=prefixed)
            )
    return Corpus(articles=tuple(articles), prefix_template=prefix_template)


def default_aliases() -> dict:
    with resources.files("statuteqa.data").joinpath("type_aliases.json").open(
        "r", encoding="utf-8"
    ) as f:
        return json.load(f)


def _normalize_choices(raw) -> tuple[tuple[str, str], ...]:
    if isinstance(raw, dict):
        return tuple(
            (unicodedata.normalize("NFC", str(k)), unicodedata.normalize("NFC", str(v)))
            for k, v in raw.items()
        )
    if isinstance(raw, list):
        out = []
        for i, item in enumerate(raw):
            if isinstance(item, dict):
                out.append(
                    (
                        unicodedata.normalize("NFC", str(item["label"])),
                        unicodedata.normalize("NFC", str(item["text"])),
                    )
                )
            else:
                out.append((chr(ord("A") + i), unicodedata.normalize("NFC", str(item))))
        return tuple(out)
    raise ValidationError(f"unsupported choices shape: {type(raw).__name__}")


def load_questions(
    path: str | Path,
    aliases: Optional[dict] = None,
) -> list[Question]:
    """Load a question file: a JSON list of question objects.

    Dataset-specific question_type and answer strings are mapped to the three
    canonical types via the alias table (the shipped default covers the
    Vietnamese and English spellings; pass `aliases` to extend it).
    """
    data = _read_json(path)
    if not isinstance(data, list):
        raise ValidationError(f"{path}: question file must be a JSON list")
    aliases = aliases or default_aliases()
    type_map = aliases.get("question_types", {})
    answer_map = aliases.get("answers", {})

    questions: list[Question] = []
    for obj in data:
        qid = str(obj["question_id"])
        raw_type = str(obj["question_type"])
        canonical = type_map.get(raw_type, raw_type)
        try:
            qtype = QuestionType(canonical)
        except ValueError:
            raise ValidationError(f"question {qid!r}: unknown question_type {raw_type!r}")
        text = unicodedata.normalize("NFC", str(obj["text"]))

        choices = None
        if "choices" in obj and obj["choices"] is not None:
            choices = _normalize_choices(obj["choices"])
        if qtype is QuestionType.MULTIPLE_CHOICE:
            if not choices:
                raise ValidationError(f"question {qid!r}: multiple_choice requires choices")
            if not 3 <= len(choices) <= 4:
                raise ValidationError(
                    f"question {qid!r}: choice count {len(choices)} outside [3, 4]"
                )
            labels = [label for label, _ in choices]
            if len(set(labels)) != len(labels):
                raise ValidationError(f"question {qid!r}: duplicate choice labels")
        elif choices:
            raise ValidationError(f"question {qid!r}: choices only valid for multiple_choice")

        gold_relevant = None
        if obj.get("relevant_articles"):
            gold_relevant = frozenset(
                (
                    unicodedata.normalize("NFC", str(r["law_id"])),
                    unicodedata.normalize("NFC", str(r["article_id"])),
                )
                for r in obj["relevant_articles"]
            )

        gold_answer = None
        if obj.get("answer") is not None:
            raw_answer = unicodedata.normalize("NFC", str(obj["answer"]))
            if qtype is QuestionType.YES_NO:
                if raw_answer not in answer_map:
                    raise ValidationError(
                        f"question {qid!r}: yes/no answer {raw_answer!r} not in alias table"
                    )
                gold_answer = answer_map[raw_answer]
            elif qtype is QuestionType.MULTIPLE_CHOICE:
                if raw_answer not in [label for label, _ in choices]:
                    raise ValidationError(
                        f"question {qid!r}: answer {raw_answer!r} is not a choice label"
                    )
                gold_answer = raw_answer
            else:
                gold_answer = raw_answer

        questions.append(
            Question(
                question_id=qid,
                qtype=qtype,
                text=text,
                choices=choices,
                gold_relevant=gold_relevant,
                gold_answer=gold_answer,
            )
        )
    return questions


@dataclass(frozen=True)
class CorpusStats:
    article_count: int
    bucket_width: int
    buckets: tuple[tuple[int, int, int], ...]  # (lo, hi, count), non-empty only
    mean: int
    median: int
    max: int

    def to_dict(self) -> dict:
        return {
            "buckets": [{"lo": lo, "hi": hi, "count": c} for lo, hi, c in self.buckets],
            "mean": self.mean,
            "median": self.median,
            "max": self.max,
        }


def bucket_histogram(values: Iterable[int], bucket_width: int) -> list[tuple[int, int, int]]:
    """Histogram over integer values; only populated buckets are returned."""
    if bucket_width <= 0:
        raise ValidationError("bucket_width must be positive")
    counts: dict[int, int] = {}
    for v in values:
        counts[v // bucket_width] = counts.get(v // bucket_width, 0) + 1
    return [
        (b * bucket_width, (b + 1) * bucket_width, counts[b]) for b in sorted(counts)
    ]


def corpus_stats(corpus: Corpus, analyzer: Analyzer, bucket_width: int = 50) -> CorpusStats:
    """Token-length distribution of article text (not prefixed_text)."""
    if len(corpus) == 0:
        raise ValidationError("corpus_stats: corpus is empty")
    lengths = [analyzer.word_count(a.text) for a in corpus]
    return CorpusStats(
        article_count=len(lengths),
        bucket_width=bucket_width,
        buckets=tuple(bucket_histogram(lengths, bucket_width)),
        mean=int(round(statistics.mean(lengths))),
        median=int(round(statistics.median(lengths))),
        max=max(lengths),
    )
