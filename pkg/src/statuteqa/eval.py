"""Retrieval and answer metrics: per-question precision/recall, F2-macro,
accuracy, and recall@k sweeps.

Everything is macro-averaged: metrics are computed per question first and
then averaged, so every question weighs the same regardless of how many
gold articles it has. Values are rounded only at serialization time.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Optional, Sequence

from statuteqa.bm25 import InvertedIndex, retrieve_topk
from statuteqa.corpus import Question, QuestionType
from statuteqa.errors import ValidationError

ArticleKey = tuple[str, str]


def f2(precision: float, recall: float) -> float:
    """F-beta with beta=2: recall weighted four times precision."""
    if precision + recall == 0:
        return 0.0
    return 5.0 * precision * recall / (4.0 * precision + recall)


@dataclass(frozen=True)
class PerQuestionMetrics:
    qid: str
    precision: float
    recall: float
    f2: float


@dataclass(frozen=True)
class EvalReport:
    per_question: tuple[PerQuestionMetrics, ...]
    f2_macro: float
    precision_macro: float
    recall_macro: float
    accuracy: Optional[float] = None
    recall_at_k: Optional[dict[int, float]] = field(default=None)

    def to_dict(self, decimals: int = 4) -> dict:
        out = {
            "f2_macro": round(self.f2_macro, decimals),
            "precision_macro": round(self.precision_macro, decimals),
            "recall_macro": round(self.recall_macro, decimals),
            "per_question": [
                {
                    "qid": m.qid,
                    "precision": round(m.precision, decimals),
                    "recall": round(m.recall, decimals),
                    "f2": round(m.f2, decimals),
                }
                for m in self.per_question
            ],
        }
        if self.accuracy is not None:
            out["accuracy"] = round(self.accuracy, decimals)
        if self.recall_at_k is not None:
            out["recall_at_k"] = {str(k): round(v, decimals) for k, v in self.recall_at_k.items()}
        return out

    def save(self, path: str | Path, decimals: int = 4) -> None:
        Path(path).write_text(
            json.dumps(self.to_dict(decimals), ensure_ascii=False, indent=2) + "\n",
            encoding="utf-8",
        )

    def save_csv(self, path: str | Path, decimals: int = 4) -> None:
        with open(path, "w", newline="", encoding="utf-8") as f:
            writer = csv.writer(f)
            writer.writerow(["qid", "precision", "recall", "f2"])
            for m in self.per_question:
                writer.writerow(
                    [
                        m.qid,
                        round(m.precision, decimals),
                        round(m.recall, decimals),
                        round(m.f2, decimals),
                    ]
                )


def score_retrieval(
    predictions: Mapping[str, set[ArticleKey]],
    gold: Mapping[str, set[ArticleKey]],
) -> EvalReport:
    """Per-question P/R/F2 and macro means.

    Precision of an empty prediction is defined as 0 (selection normally
    falls back to top-1, so the case only arises when that fallback is
    disabled).
    """
    per_question = []
    for qid in predictions:
        if qid not in gold:
            raise ValidationError(f"no gold labels for question {qid!r}")
        gold_set = set(gold[qid])
        if not gold_set:
            raise ValidationError(f"empty gold set for question {qid!r}")
        pred_set = set(predictions[qid])
        hits = len(pred_set & gold_set)
        precision = hits / len(pred_set) if pred_set else 0.0
        recall = hits / len(gold_set)
        per_question.append(
            PerQuestionMetrics(qid=qid, precision=precision, recall=recall, f2=f2(precision, recall))
        )
    n = len(per_question)
    if n == 0:
        raise ValidationError("score_retrieval: no predictions")
    return EvalReport(
        per_question=tuple(per_question),
        f2_macro=sum(m.f2 for m in per_question) / n,
        precision_macro=sum(m.precision for m in per_question) / n,
        recall_macro=sum(m.recall for m in per_question) / n,
    )


_YES_NO = {"yes", "no"}


def score_answers(predictions: Mapping[str, str], questions: Sequence[Question]) -> float:
    """Accuracy = questions answered correctly / questions with gold answers.

    Factoid correctness is case-folded exact string match; a question
    without a prediction counts as answered incorrectly.
    """
    labeled = [q for q in questions if q.gold_answer is not None]
    if not labeled:
        raise ValidationError("score_answers: no gold answers")
    correct = 0
    for q in labeled:
        pred = predictions.get(q.question_id)
        if pred is None:
            continue
        if q.qtype is QuestionType.YES_NO:
            normalized = pred.strip().casefold()
            if normalized not in _YES_NO:
                raise ValidationError(
                    f"question {q.question_id!r}: yes/no prediction {pred!r} is not yes or no"
                )
            correct += normalized == q.gold_answer
        elif q.qtype is QuestionType.MULTIPLE_CHOICE:
            if pred not in q.choice_labels():
                raise ValidationError(
                    f"question {q.question_id!r}: prediction {pred!r} is not a choice label"
                )
            correct += pred == q.gold_answer
        else:
            correct += pred.strip().casefold() == q.gold_answer.strip().casefold()
    return correct / len(labeled)


def recall_at_k(
    index: InvertedIndex, questions: Sequence[Question], ks: Sequence[int]
) -> dict[int, float]:
    """Macro recall of gold articles within the BM25 top-k, per cutoff."""
    if list(ks) != sorted(ks):
        raise ValidationError("ks must be sorted ascending")
    labeled = [q for q in questions if q.gold_relevant]
    if not labeled:
        raise ValidationError("recall_at_k: no labeled questions")
    max_k = max(ks)
    sums = {k: 0.0 for k in ks}
    for q in labeled:
        ranking = [c.key for c in retrieve_topk(index, q.text, k=max_k)]
        gold = set(q.gold_relevant)
        for k in ks:
            top = set(ranking[:k])
            sums[k] += len(top & gold) / len(gold)
    return {k: sums[k] / len(labeled) for k in ks}
