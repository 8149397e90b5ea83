"""Question-type dispatch and the three answer-decision procedures.

Factoid questions get an extracted span (highest start+end logit pair with
end >= start). Yes/no questions run in two phases: BM25 text matching picks
the article clause closest to the question, then a pair classifier scores
(question, clause) against a verdict threshold. Multiple-choice questions
score each concrete choice as a statement against the matched clause, with
threshold rules deciding special options ("all/none of the above",
"both A and B").
"""

from __future__ import annotations

import logging
import re
from dataclasses import dataclass, field
from typing import Optional, Sequence, Union

import numpy as np

from statuteqa.analyzer import Analyzer
from statuteqa.bm25 import BM25Params, InvertedIndex, score_all
from statuteqa.corpus import Article, Question, QuestionType
from statuteqa.errors import ProtocolError, ValidationError
from statuteqa.scorer import (
    PairScoreRequest,
    ScorerBackend,
    Task,
    pair_request_id,
    score_pairs,
    span_logits,
)

log = logging.getLogger(__name__)

YESNO_KEY = "yes_no"

# Enumerators that open a clause at the start of a line: "1.", "2.", "a)",
# "b)", "đ)". Each pattern must expose an `id` group.
DEFAULT_CLAUSE_PATTERNS = (r"(?P<id>\d+)\.", r"(?P<id>[a-zđ])\)")

DEFAULT_UNIFORM_PATTERNS = (
    r"all of the above",
    r"none of the above",
    r"tất cả (?:các |những )?(?:đáp án|phương án|ý|câu)",
    r"không (?:có )?(?:đáp án|phương án|ý|câu) nào",
)
DEFAULT_PAIR_CORRECT_PATTERNS = (
    r"both\s+(?P<a>\w+)\s+and\s+(?P<b>\w+)\s+(?:is|are)\s+(?:correct|right|true)",
    r"cả\s+(?P<a>\w+)\s+và\s+(?P<b>\w+)\s+(?:đều\s+)?đúng",
    r"^both\s+(?P<a>\w+)\s+and\s+(?P<b>\w+)\s*$",
    r"^cả\s+(?P<a>\w+)\s+và\s+(?P<b>\w+)\s*$",
)
DEFAULT_PAIR_WRONG_PATTERNS = (
    r"both\s+(?P<a>\w+)\s+and\s+(?P<b>\w+)\s+(?:is|are)\s+(?:wrong|incorrect|false)",
    r"cả\s+(?P<a>\w+)\s+và\s+(?P<b>\w+)\s+(?:đều\s+)?sai",
)


@dataclass(frozen=True)
class Clause:
    parent: tuple[str, str]
    clause_id: str
    text: str
    span: tuple[int, int] = (0, 0)  # char range in the article text


@dataclass(frozen=True)
class SpecialPatterns:
    uniform: tuple[str, ...] = DEFAULT_UNIFORM_PATTERNS
    pair_correct: tuple[str, ...] = DEFAULT_PAIR_CORRECT_PATTERNS
    pair_wrong: tuple[str, ...] = DEFAULT_PAIR_WRONG_PATTERNS


@dataclass(frozen=True)
class ChoicePolicy:
    uniform_band: float = 0.1
    pair_threshold: float = 0.5
    equality_epsilon: float = 0.02
    special_patterns: SpecialPatterns = field(default_factory=SpecialPatterns)

    def __post_init__(self):
        for name in ("uniform_band", "pair_threshold", "equality_epsilon"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValidationError(f"{name} must be in [0, 1], got {v}")


@dataclass(frozen=True)
class SpanAnswer:
    text: str
    byte_start: int
    byte_end: int


@dataclass(frozen=True)
class YesNoAnswer:
    verdict: bool
    score: float


@dataclass(frozen=True)
class ChoiceAnswer:
    label: str
    per_choice_scores: dict[str, float]


@dataclass(frozen=True)
class Answer:
    qid: str
    qtype: QuestionType
    payload: Union[SpanAnswer, YesNoAnswer, ChoiceAnswer]

    def render(self) -> str:
        """Submission-shaped answer string."""
        if isinstance(self.payload, SpanAnswer):
            return self.payload.text
        if isinstance(self.payload, YesNoAnswer):
            return "yes" if self.payload.verdict else "no"
        return self.payload.label


# ---------------------------------------------------------------------------
# Clause segmentation and passage matching
# ---------------------------------------------------------------------------


def segment_clauses(
    article: Article, patterns: Sequence[str] = DEFAULT_CLAUSE_PATTERNS
) -> list[Clause]:
    """Split an article into enumerated clauses.

    Prose before the first enumerator becomes clause "0"; an article with
    no enumerators is returned whole as clause "0". Clause spans cover the
    article text exactly, so joining article[span] segments reconstructs
    it. Repeated enumerator ids are disambiguated with an ordinal suffix.
    """
    text = article.text
    compiled = [re.compile(r"[ \t]*" + p + r"[ \t]+") for p in patterns]
    marks: list[tuple[int, int, str]] = []  # (line_start, content_start, id)
    pos = 0
    for line in text.splitlines(keepends=True):
        for pattern in compiled:
            m = pattern.match(line)
            if m:
                marks.append((pos, pos + m.end(), m.group("id")))
                break
        pos += len(line)

    key = (article.law_id, article.article_id)
    if not marks:
        return [Clause(parent=key, clause_id="0", text=text.strip(), span=(0, len(text)))]

    clauses: list[Clause] = []
    seen: dict[str, int] = {}
    intro = text[: marks[0][0]]
    intro_absorbed = 0
    if intro.strip():
        clauses.append(Clause(parent=key, clause_id="0", text=intro.strip(), span=(0, marks[0][0])))
    else:
        intro_absorbed = marks[0][0]  # leading whitespace folds into the first clause span

    for i, (line_start, content_start, cid) in enumerate(marks):
        seen[cid] = seen.get(cid, 0) + 1
        clause_id = cid if seen[cid] == 1 else f"{cid}_{seen[cid]}"
        end = marks[i + 1][0] if i + 1 < len(marks) else len(text)
        body = text[content_start:end].strip()
        if not body:
            body = text[line_start:end].strip()
        start = line_start if i > 0 or not intro_absorbed else 0
        clauses.append(Clause(parent=key, clause_id=clause_id, text=body, span=(start, end)))
    return clauses


def _clause_index(
    clauses: Sequence[Clause], analyzer: Analyzer, params: BM25Params
) -> InvertedIndex:
    """Throwaway BM25 mini-index over one article's clauses."""
    postings: dict[str, list[tuple[int, int]]] = {}
    doc_lengths: list[int] = []
    doc_table: list[tuple[str, str]] = []
    for ordinal, clause in enumerate(clauses):
        tokens = analyzer.tokens(clause.text)
        doc_lengths.append(len(tokens))
        doc_table.append((clause.parent[0], clause.clause_id))
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
    )


def rank_clauses(
    question: Question,
    article: Article,
    bm25_params: BM25Params = BM25Params(),
    analyzer: Optional[Analyzer] = None,
    patterns: Sequence[str] = DEFAULT_CLAUSE_PATTERNS,
) -> list[tuple[Clause, float]]:
    analyzer = analyzer or Analyzer()
    clauses = segment_clauses(article, patterns)
    index = _clause_index(clauses, analyzer, bm25_params)
    scores = score_all(index, analyzer.tokens(question.text))
    order = np.argsort(-scores, kind="stable")
    return [(clauses[i], float(scores[i])) for i in order]


def match_passage(
    question: Question,
    article: Article,
    bm25_params: BM25Params = BM25Params(),
    analyzer: Optional[Analyzer] = None,
    patterns: Sequence[str] = DEFAULT_CLAUSE_PATTERNS,
) -> Clause:
    """Highest-BM25 clause for the question; ties go to the earliest clause.

    When no clause shares a term with the question, the intro clause "0"
    (or the first clause, if the article starts enumerated) is returned.
    """
    ranked = rank_clauses(question, article, bm25_params, analyzer, patterns)
    if ranked[0][1] == 0.0:
        for clause, _ in ranked:
            if clause.clause_id == "0":
                return clause
        return min(ranked, key=lambda pair: pair[0].span[0])[0]
    return ranked[0][0]


# ---------------------------------------------------------------------------
# Factoid
# ---------------------------------------------------------------------------


def answer_factoid(
    question: Question,
    context_article: Article,
    backend: ScorerBackend,
    max_span_tokens: int = 64,
) -> Answer:
    """Best span (i, j) by start[i] + end[j], subject to j >= i and
    j - i < max_span_tokens; ties go to the earliest (i, then j)."""
    context = context_article.text
    logits = span_logits(backend, question.text, context)
    start, end = logits.start_scores, logits.end_scores
    n = len(start)
    best_i, best_j, best_val = 0, 0, None
    for i in range(n):
        for j in range(i, min(n, i + max_span_tokens)):
            val = start[i] + end[j]
            if best_val is None or val > best_val:
                best_i, best_j, best_val = i, j, val

    context_bytes = context.encode("utf-8")
    byte_start = logits.token_offsets[best_i][0]
    byte_end = logits.token_offsets[best_j][1]
    if not (0 <= byte_start <= byte_end <= len(context_bytes)):
        raise ProtocolError(
            f"token offsets ({byte_start}, {byte_end}) fall outside the context"
        )
    try:
        text = context_bytes[byte_start:byte_end].decode("utf-8")
    except UnicodeDecodeError as e:
        raise ProtocolError("token offsets split a UTF-8 sequence") from e
    return Answer(
        qid=question.question_id,
        qtype=QuestionType.FACTOID,
        payload=SpanAnswer(text=text, byte_start=byte_start, byte_end=byte_end),
    )


# ---------------------------------------------------------------------------
# Yes/no
# ---------------------------------------------------------------------------


def answer_yes_no(
    question: Question,
    article: Article,
    backend: ScorerBackend,
    policy: ChoicePolicy = ChoicePolicy(),
    bm25_params: BM25Params = BM25Params(),
    clause_top_n: int = 1,
) -> Answer:
    """Match the closest clause, then classify the (question, clause) pair.

    clause_top_n > 1 scores the question against the n best clauses and
    keeps the maximum (default is the single best clause).
    """
    if clause_top_n == 1:
        passages = [match_passage(question, article, bm25_params)]
    else:
        ranked = rank_clauses(question, article, bm25_params)
        passages = [c for c, _ in ranked[:clause_top_n]]
    items = tuple(
        (pair_request_id(question.question_id, f"{YESNO_KEY}:{p.clause_id}"), question.text, p.text)
        for p in passages
    )
    response = score_pairs(
        backend, PairScoreRequest(items=items, task=Task.PAIR_CLASSIFICATION)
    )
    score = max(s for _, s in response.scores)
    return Answer(
        qid=question.question_id,
        qtype=QuestionType.YES_NO,
        payload=YesNoAnswer(verdict=score >= policy.pair_threshold, score=score),
    )


# ---------------------------------------------------------------------------
# Multiple choice
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class _Special:
    label: str
    kind: str  # "uniform" | "pair"
    polarity: Optional[str] = None  # "correct" | "wrong" for pair specials
    referenced: tuple[str, ...] = ()


def classify_special_choices(
    choices: Sequence[tuple[str, str]], patterns: SpecialPatterns
) -> list[_Special]:
    specials: list[_Special] = []
    uniform = [re.compile(p, re.IGNORECASE) for p in patterns.uniform]
    pair_wrong = [re.compile(p, re.IGNORECASE) for p in patterns.pair_wrong]
    pair_correct = [re.compile(p, re.IGNORECASE) for p in patterns.pair_correct]
    for label, text in choices:
        if any(p.search(text) for p in uniform):
            specials.append(_Special(label=label, kind="uniform"))
            continue
        matched = None
        polarity = None
        for p in pair_wrong:
            matched = p.search(text)
            if matched:
                polarity = "wrong"
                break
        if not matched:
            for p in pair_correct:
                matched = p.search(text)
                if matched:
                    polarity = "correct"
                    break
        if matched:
            groups = matched.groupdict()
            referenced = tuple(
                v for v in (groups.get("a"), groups.get("b")) if v is not None
            )
            specials.append(
                _Special(label=label, kind="pair", polarity=polarity, referenced=referenced)
            )
    return specials


def _statement(question: Question, choice_text: str) -> str:
    # Same stem + choice concatenation used to generate yes/no training
    # samples, keeping training and inference inputs symmetric.
    return question.text + " " + choice_text


def answer_multiple_choice(
    question: Question,
    article: Article,
    backend: ScorerBackend,
    policy: ChoicePolicy = ChoicePolicy(),
    bm25_params: BM25Params = BM25Params(),
) -> Answer:
    if not question.choices or not 3 <= len(question.choices) <= 4:
        raise ValidationError(
            f"question {question.question_id!r}: multiple choice needs 3 or 4 choices"
        )
    specials = classify_special_choices(question.choices, policy.special_patterns)
    kinds = {s.kind for s in specials}
    if len(kinds) > 1:
        raise ValidationError(
            f"question {question.question_id!r}: choices match more than one special type"
        )
    if sum(1 for s in specials if s.kind == "uniform") > 1:
        raise ValidationError(
            f"question {question.question_id!r}: multiple all/none-of-the-above choices"
        )
    for polarity in ("correct", "wrong"):
        if sum(1 for s in specials if s.kind == "pair" and s.polarity == polarity) > 1:
            raise ValidationError(
                f"question {question.question_id!r}: multiple 'both ... {polarity}' choices"
            )

    special_labels = {s.label for s in specials}
    concrete = [(label, text) for label, text in question.choices if label not in special_labels]

    passage = match_passage(question, article, bm25_params)
    scores: dict[str, float] = {}
    if concrete:
        items = tuple(
            (pair_request_id(question.question_id, label), _statement(question, text), passage.text)
            for label, text in concrete
        )
        response = score_pairs(
            backend, PairScoreRequest(items=items, task=Task.PAIR_CLASSIFICATION)
        )
        scores = {
            label: score for (label, _), (_, score) in zip(concrete, response.scores)
        }

    label = _decide_choice(question, specials, concrete, scores, policy)
    return Answer(
        qid=question.question_id,
        qtype=QuestionType.MULTIPLE_CHOICE,
        payload=ChoiceAnswer(label=label, per_choice_scores=scores),
    )


def _argmax_label(concrete: Sequence[tuple[str, str]], scores: dict[str, float]) -> str:
    # Ties go to the earliest label in choice order.
    best = concrete[0][0]
    for label, _ in concrete[1:]:
        if scores[label] > scores[best]:
            best = label
    return best


def _decide_choice(
    question: Question,
    specials: Sequence[_Special],
    concrete: Sequence[tuple[str, str]],
    scores: dict[str, float],
    policy: ChoicePolicy,
) -> str:
    if not concrete:
        # Every choice is special; nothing to compare, so take the special.
        log.warning("question %s: all choices are special", question.question_id)
        return specials[0].label

    uniform = next((s for s in specials if s.kind == "uniform"), None)
    if uniform is not None:
        spread = max(scores.values()) - min(scores.values())
        if spread <= policy.uniform_band:
            return uniform.label
        return _argmax_label(concrete, scores)

    pair_specials = [s for s in specials if s.kind == "pair"]
    if pair_specials:
        return _decide_pair_special(question, pair_specials, concrete, scores, policy)

    return _argmax_label(concrete, scores)


def _decide_pair_special(
    question: Question,
    pair_specials: Sequence[_Special],
    concrete: Sequence[tuple[str, str]],
    scores: dict[str, float],
    policy: ChoicePolicy,
) -> str:
    referenced = _referenced_labels(question, pair_specials, concrete)
    s1, s2 = scores[referenced[0]], scores[referenced[1]]
    correct = next((s for s in pair_specials if s.polarity == "correct"), None)
    wrong = next((s for s in pair_specials if s.polarity == "wrong"), None)

    if abs(s1 - s2) <= policy.equality_epsilon and min(s1, s2) > policy.pair_threshold:
        if correct is not None:
            return correct.label
    elif max(s1, s2) < policy.pair_threshold:
        # Both referenced choices fail the threshold: the opposing option.
        if wrong is not None:
            return wrong.label
        special_labels = {s.label for s in pair_specials}
        remaining = [
            label
            for label, _ in concrete
            if label not in referenced and label not in special_labels
        ]
        if len(remaining) == 1:
            return remaining[0]

    # One score above and one below the threshold is undefined in the rule
    # set; fall back to the better of the two concrete choices.
    log.warning(
        "question %s: pair rule inconclusive (s1=%.3f, s2=%.3f); using argmax",
        question.question_id,
        s1,
        s2,
    )
    if s1 == s2:
        return referenced[0]
    return referenced[0] if s1 > s2 else referenced[1]


def _referenced_labels(
    question: Question,
    pair_specials: Sequence[_Special],
    concrete: Sequence[tuple[str, str]],
) -> tuple[str, str]:
    labels = [label for label, _ in concrete]
    for special in pair_specials:
        if len(special.referenced) == 2:
            resolved = []
            for ref in special.referenced:
                match = next((l for l in labels if l.casefold() == ref.casefold()), None)
                if match is not None:
                    resolved.append(match)
            if len(resolved) == 2:
                return (resolved[0], resolved[1])
    if len(labels) == 2:
        return (labels[0], labels[1])
    raise ValidationError(
        f"question {question.question_id!r}: cannot resolve which choices "
        f"'both ... and ...' refers to"
    )


# ---------------------------------------------------------------------------
# Dispatch
# ---------------------------------------------------------------------------


def answer_question(
    question: Question,
    article: Article,
    backend: ScorerBackend,
    policy: ChoicePolicy = ChoicePolicy(),
    bm25_params: BM25Params = BM25Params(),
    max_span_tokens: int = 64,
    clause_top_n: int = 1,
) -> Answer:
    """Route a question to its decision procedure; unknown types are a
    hard error, never a silent skip."""
    if question.qtype is QuestionType.FACTOID:
        return answer_factoid(question, article, backend, max_span_tokens)
    if question.qtype is QuestionType.YES_NO:
        return answer_yes_no(question, article, backend, policy, bm25_params, clause_top_n)
    if question.qtype is QuestionType.MULTIPLE_CHOICE:
        return answer_multiple_choice(question, article, backend, policy, bm25_params)
    raise ValidationError(f"question {question.question_id!r}: unknown type {question.qtype!r}")
