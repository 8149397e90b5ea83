"""Model loading and inference for the scoring service.

One bundle holds two task heads over pretrained encoders: a sequence
classifier for text-pair scores and a QA head for span logits. Checkpoints
are configuration, not code: any local directory or hub id with the right
head slots in. Sequences longer than the advertised maximum are truncated
on the context side only; the question is always kept intact.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import torch
from transformers import (
    AutoModelForQuestionAnswering,
    AutoModelForSequenceClassification,
    AutoTokenizer,
)


@dataclass(frozen=True)
class SidecarConfig:
    pair_model: str
    span_model: Optional[str] = None  # defaults to pair_model
    device: str = "cpu"
    max_length: Optional[int] = None  # defaults to the model's limit, capped at 512
    max_batch: int = 64

    @property
    def span_model_id(self) -> str:
        return self.span_model or self.pair_model

    @property
    def name(self) -> str:
        if self.span_model and self.span_model != self.pair_model:
            return f"{self.pair_model}+{self.span_model}"
        return self.pair_model


@dataclass(frozen=True)
class PairResult:
    scores: list[float]  # request order
    truncated_indices: list[int]


@dataclass(frozen=True)
class SpanResult:
    start_scores: list[float]
    end_scores: list[float]
    token_offsets: list[tuple[int, int]]  # byte offsets into the context
    truncated: bool


def _byte_positions(text: str) -> list[int]:
    positions = [0]
    total = 0
    for ch in text:
        total += len(ch.encode("utf-8"))
        positions.append(total)
    return positions


class ModelBundle:
    def __init__(self, config: SidecarConfig):
        torch.manual_seed(0)
        self.config = config
        self.device = torch.device(config.device)

        self.pair_tokenizer = AutoTokenizer.from_pretrained(config.pair_model, use_fast=True)
        self.pair_model = AutoModelForSequenceClassification.from_pretrained(config.pair_model)
        if self.pair_model.config.num_labels not in (1, 2):
            raise ValueError(
                f"pair model has {self.pair_model.config.num_labels} labels; need 1 or 2"
            )
        self.pair_model.to(self.device).eval()

        self.span_tokenizer = AutoTokenizer.from_pretrained(config.span_model_id, use_fast=True)
        self.span_model = AutoModelForQuestionAnswering.from_pretrained(config.span_model_id)
        self.span_model.to(self.device).eval()

        limit = min(
            self.pair_tokenizer.model_max_length,
            self.span_tokenizer.model_max_length,
            512,
        )
        self.max_length = config.max_length or int(limit)

    @property
    def name(self) -> str:
        return self.config.name

    def score_pairs(self, items: Sequence[tuple[str, str]]) -> PairResult:
        """Positive-class probability per (text_a, text_b), request order."""
        texts_a = [a for a, _ in items]
        texts_b = [b for _, b in items]
        truncated = []
        for i, (a, b) in enumerate(items):
            full = self.pair_tokenizer(a, b, truncation=False)
            if len(full["input_ids"]) > self.max_length:
                truncated.append(i)
        encoded = self.pair_tokenizer(
            texts_a,
            texts_b,
            truncation="only_second",
            max_length=self.max_length,
            padding=True,
            return_tensors="pt",
        ).to(self.device)
        with torch.no_grad():
            logits = self.pair_model(**encoded).logits
        if logits.shape[-1] == 1:
            probs = torch.sigmoid(logits[:, 0])
        else:
            probs = torch.softmax(logits, dim=-1)[:, 1]
        return PairResult(scores=[float(p) for p in probs], truncated_indices=truncated)

    def span_logits(self, question: str, context: str) -> SpanResult:
        """Per-context-token start/end logits with byte offsets."""
        full = self.span_tokenizer(question, context, truncation=False)
        truncated = len(full["input_ids"]) > self.max_length
        encoded = self.span_tokenizer(
            question,
            context,
            truncation="only_second",
            max_length=self.max_length,
            return_offsets_mapping=True,
            return_tensors="pt",
        )
        sequence_ids = encoded.sequence_ids(0)
        offsets = encoded["offset_mapping"][0].tolist()
        model_inputs = {
            k: v.to(self.device) for k, v in encoded.items() if k != "offset_mapping"
        }
        with torch.no_grad():
            output = self.span_model(**model_inputs)
        start_all = output.start_logits[0].tolist()
        end_all = output.end_logits[0].tolist()

        byte_pos = _byte_positions(context)
        start_scores, end_scores, token_offsets = [], [], []
        for i, seq_id in enumerate(sequence_ids):
            if seq_id != 1:
                continue  # special or question token
            char_start, char_end = offsets[i]
            if char_start == char_end:
                continue
            start_scores.append(float(start_all[i]))
            end_scores.append(float(end_all[i]))
            token_offsets.append((byte_pos[char_start], byte_pos[char_end]))
        return SpanResult(
            start_scores=start_scores,
            end_scores=end_scores,
            token_offsets=token_offsets,
            truncated=truncated,
        )
