"""Score fusion: min-max normalization, weighted combination of the lexical
and semantic scores, threshold selection, and the grid search that tunes
the mixing weight and the acceptance threshold on a validation set.

fused score = alpha * w_bm25 + (1 - alpha) * w_bert

Articles whose fused score reaches theta are returned; when nothing
reaches it, the single best candidate is returned instead (competition
scoring punishes empty answers).
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Mapping, Sequence

import numpy as np

from statuteqa.bm25 import ScoredCandidate
from statuteqa.corpus import Question
from statuteqa.errors import ValidationError
from statuteqa.eval import f2 as f2_score

ArticleKey = tuple[str, str]


@dataclass(frozen=True)
class EnsembleParams:
    alpha: float
    theta: float
    grid_step: float
    tuned_on: str = ""
    achieved_f2: float = 0.0

    def __post_init__(self):
        for name in ("alpha", "theta"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValidationError(f"{name} must be in [0, 1], got {v}")
        if self.grid_step <= 0:
            raise ValidationError(f"grid_step must be > 0, got {self.grid_step}")

    def to_dict(self) -> dict:
        return {
            "alpha": self.alpha,
            "theta": self.theta,
            "grid_step": self.grid_step,
            "tuned_on": self.tuned_on,
            "achieved_f2": self.achieved_f2,
        }

    def save(self, path: str | Path) -> None:
        Path(path).write_text(
            json.dumps(self.to_dict(), ensure_ascii=False, indent=2) + "\n", encoding="utf-8"
        )

    @classmethod
    def load(cls, path: str | Path) -> "EnsembleParams":
        return cls(**json.loads(Path(path).read_text(encoding="utf-8")))


def minmax_normalize(values: Sequence[float]) -> list[float]:
    """(v - min) / (max - min); a constant pool maps to all zeros so that a
    scorer with no spread carries no weight."""
    if len(values) == 0:
        raise ValidationError("minmax_normalize: empty list")
    lo = min(values)
    hi = max(values)
    if hi == lo:
        return [0.0] * len(values)
    return [(v - lo) / (hi - lo) for v in values]


def normalize_pool(candidates: Sequence[ScoredCandidate]) -> None:
    """Fill the normalized columns from the raw ones, in place."""
    if not candidates:
        return
    for attr_raw, attr_norm in (("w_bm25_raw", "w_bm25"), ("w_bert_raw", "w_bert")):
        normalized = minmax_normalize([getattr(c, attr_raw) for c in candidates])
        for c, v in zip(candidates, normalized):
            setattr(c, attr_norm, v)


def normalize_pools(
    pools: Mapping[str, Sequence[ScoredCandidate]], mode: str = "per_question"
) -> None:
    """Normalize every question's candidate pool.

    per_question (default): each pool is scaled by its own min and max,
    matching the per-question ranking decision. global: one min and max
    across all pools, for comparison runs.
    """
    if mode == "per_question":
        for pool in pools.values():
            normalize_pool(pool)
        return
    if mode != "global":
        raise ValidationError(f"unknown normalization mode {mode!r}")
    everything = [c for pool in pools.values() for c in pool]
    if not everything:
        return
    for attr_raw, attr_norm in (("w_bm25_raw", "w_bm25"), ("w_bert_raw", "w_bert")):
        normalized = minmax_normalize([getattr(c, attr_raw) for c in everything])
        for c, v in zip(everything, normalized):
            setattr(c, attr_norm, v)


def fuse(candidates: Sequence[ScoredCandidate], alpha: float) -> list[ScoredCandidate]:
    """Populate the fused score and return candidates ranked by it,
    descending, ties broken by (law_id, article_id) ascending."""
    if not 0.0 <= alpha <= 1.0:
        raise ValidationError(f"alpha must be in [0, 1], got {alpha}")
    for c in candidates:
        if c.w_bm25 is None or c.w_bert is None:
            raise ValidationError(
                f"candidate {c.key} has unnormalized scores; run normalize_pool first"
            )
        c.score = alpha * c.w_bm25 + (1.0 - alpha) * c.w_bert
    return sorted(candidates, key=lambda c: (-c.score, c.law_id, c.article_id))


def select(
    candidates: Sequence[ScoredCandidate], theta: float, allow_empty_answer: bool = False
) -> set[ArticleKey]:
    """All candidates with fused score >= theta; falls back to the single
    top candidate when none qualifies (unless empty answers are allowed)."""
    chosen = {c.key for c in candidates if c.score is not None and c.score >= theta}
    if chosen or allow_empty_answer or not candidates:
        return chosen
    top = min(candidates, key=lambda c: (-c.score, c.law_id, c.article_id))
    return {top.key}


CandidateProvider = Callable[[str], Sequence[ScoredCandidate]]


def grid_search(
    train_questions: Sequence[Question],
    candidate_provider: CandidateProvider | Mapping[str, Sequence[ScoredCandidate]],
    step: float = 0.01,
    tuned_on: str = "",
    allow_empty_answer: bool = False,
) -> EnsembleParams:
    """Exhaustive search over the (alpha, theta) grid {0, step, ..., 1}^2,
    maximizing validation F2-macro; ties go to smaller alpha, then theta.

    Candidates must arrive with normalized columns populated; normalization
    is independent of both grid parameters.
    """
    n_steps = round(1.0 / step)
    if n_steps < 1 or abs(n_steps * step - 1.0) > 1e-9:
        raise ValidationError(f"step {step} does not divide [0, 1] evenly")
    if not train_questions:
        raise ValidationError("grid_search: no labeled questions")
    provider = (
        candidate_provider.get if isinstance(candidate_provider, Mapping) else candidate_provider
    )

    # Per-question arrays: normalized scores, gold membership, and the
    # candidate each empty selection falls back to.
    pools = []
    for q in train_questions:
        if not q.gold_relevant:
            raise ValidationError(f"grid_search: question {q.question_id!r} has no gold labels")
        candidates = list(provider(q.question_id) or [])
        for c in candidates:
            if c.w_bm25 is None or c.w_bert is None:
                raise ValidationError(
                    f"candidate {c.key} for {q.question_id!r} has unnormalized scores"
                )
        bm25_col = np.array([c.w_bm25 for c in candidates], dtype=np.float64)
        bert_col = np.array([c.w_bert for c in candidates], dtype=np.float64)
        gold_mask = np.array([c.key in q.gold_relevant for c in candidates], dtype=bool)
        by_key = sorted(range(len(candidates)), key=lambda i: candidates[i].key)
        tie_rank = np.zeros(len(candidates), dtype=np.int64)
        for rank, idx in enumerate(by_key):
            tie_rank[idx] = rank
        pools.append((bm25_col, bert_col, gold_mask, len(q.gold_relevant), tie_rank))

    grid = np.array([i / n_steps for i in range(n_steps + 1)], dtype=np.float64)
    best = (-1.0, 2.0, 2.0)  # (f2, alpha, theta); any grid point beats it
    n_q = len(pools)
    for alpha in grid:
        f2_by_theta = np.zeros(len(grid), dtype=np.float64)
        for bm25_col, bert_col, gold_mask, n_gold, tie_rank in pools:
            if len(bm25_col) == 0:
                continue  # nothing retrieved: empty prediction, F2 = 0
            scores = alpha * bm25_col + (1.0 - alpha) * bert_col
            picked = scores[None, :] >= grid[:, None]  # (theta, candidate)
            hits = (picked & gold_mask[None, :]).sum(axis=1).astype(np.float64)
            n_pred = picked.sum(axis=1).astype(np.float64)
            if not allow_empty_answer:
                top = np.lexsort((tie_rank, -scores))[0]
                empty = n_pred == 0
                n_pred[empty] = 1.0
                hits[empty] = 1.0 if gold_mask[top] else 0.0
            precision = np.divide(hits, n_pred, out=np.zeros_like(hits), where=n_pred > 0)
            recall = hits / n_gold
            denom = 4.0 * precision + recall
            f2_by_theta += np.divide(
                5.0 * precision * recall, denom, out=np.zeros_like(denom), where=denom > 0
            )
        f2_by_theta /= n_q
        for ti, theta in enumerate(grid):
            if f2_by_theta[ti] > best[0]:
                best = (float(f2_by_theta[ti]), float(alpha), float(theta))

    achieved, alpha, theta = best
    return EnsembleParams(
        alpha=alpha,
        theta=theta,
        grid_step=step,
        tuned_on=tuned_on,
        achieved_f2=achieved,
    )
