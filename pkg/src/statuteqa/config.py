"""Structured pipeline configuration.

One JSON file configures every subcommand; any leaf can be overridden on
the command line by a flag of the same dotted name (--bm25.k1 1.6).
"""

from __future__ import annotations

import copy
import json
from pathlib import Path
from typing import Any, Optional

from statuteqa.analyzer import Analyzer
from statuteqa.bm25 import BM25Params
from statuteqa.corpus import DEFAULT_PREFIX_TEMPLATE
from statuteqa.enrich import EnrichmentConfig
from statuteqa.errors import ValidationError
from statuteqa.qa import ChoicePolicy
from statuteqa.scorer import BaselineScorer, FileScorer, HttpScorer, ScorerBackend

DEFAULT_CONFIG: dict[str, Any] = {
    "paths": {
        "corpus": "",
        "questions": "",
        "index": "",
        "params": "",
        "scorer": "baseline",  # baseline | file:<pairs>[,<spans>] | http(s)://host:port
    },
    "prefix_template": DEFAULT_PREFIX_TEMPLATE,
    "stopwords": [],
    "bm25": {"k1": 1.2, "b": 0.75, "top_k": 100},
    "ensemble": {
        "alpha": 1.0,
        "theta": 0.0,
        "grid_step": 0.01,
        "normalize_mode": "per_question",
        "allow_empty_answer": False,
        "scorer_text": "prefixed",
    },
    "qa": {
        "uniform_band": 0.1,
        "pair_threshold": 0.5,
        "equality_epsilon": 0.02,
        "max_span_tokens": 64,
        "clause_top_n": 1,
    },
    "enrich": {
        "max_question_words_task1": 100,
        "max_question_words_task2": 128,
        "mlm_max_question_tokens": 128,
        "mlm_max_total_tokens": 512,
    },
    "concurrency": {"batch_size": 32, "max_in_flight": 4},
}


class PipelineConfig:
    def __init__(self, values: Optional[dict] = None):
        self.values = copy.deepcopy(DEFAULT_CONFIG)
        if values:
            _merge(self.values, values)

    @classmethod
    def from_file(cls, path: str | Path) -> "PipelineConfig":
        return cls(json.loads(Path(path).read_text(encoding="utf-8")))

    def get(self, dotted: str):
        node: Any = self.values
        for part in dotted.split("."):
            if not isinstance(node, dict) or part not in node:
                raise ValidationError(f"unknown config key {dotted!r}")
            node = node[part]
        return node

    def set(self, dotted: str, raw: str) -> None:
        """Override a leaf; the string value is coerced to the leaf's type."""
        parts = dotted.split(".")
        node = self.values
        for part in parts[:-1]:
            if not isinstance(node.get(part), dict):
                raise ValidationError(f"unknown config key {dotted!r}")
            node = node[part]
        leaf = parts[-1]
        if leaf not in node:
            raise ValidationError(f"unknown config key {dotted!r}")
        node[leaf] = _coerce(raw, node[leaf], dotted)

    # Typed views -----------------------------------------------------------

    def analyzer(self) -> Analyzer:
        return Analyzer(stopwords=frozenset(self.values["stopwords"]))

    def bm25_params(self) -> BM25Params:
        return BM25Params(k1=self.values["bm25"]["k1"], b=self.values["bm25"]["b"])

    def choice_policy(self) -> ChoicePolicy:
        qa = self.values["qa"]
        return ChoicePolicy(
            uniform_band=qa["uniform_band"],
            pair_threshold=qa["pair_threshold"],
            equality_epsilon=qa["equality_epsilon"],
        )

    def enrichment(self) -> EnrichmentConfig:
        e = self.values["enrich"]
        return EnrichmentConfig(
            max_question_words_task1=e["max_question_words_task1"],
            max_question_words_task2=e["max_question_words_task2"],
            mlm_max_question_tokens=e["mlm_max_question_tokens"],
            mlm_max_total_tokens=e["mlm_max_total_tokens"],
        )

    def scorer_backend(self) -> ScorerBackend:
        return make_scorer(self.values["paths"]["scorer"], self.analyzer())

    def require_path(self, key: str, must_exist: bool = True) -> Path:
        raw = self.values["paths"].get(key, "")
        if not raw:
            raise ValidationError(f"config paths.{key} is not set")
        path = Path(raw)
        if must_exist and not path.exists():
            raise ValidationError(f"paths.{key}: {path} does not exist")
        return path


def make_scorer(spec: str, analyzer: Optional[Analyzer] = None) -> ScorerBackend:
    """Backend selector: baseline | file:<pairs>[,<spans>] | http(s)://url."""
    if spec == "baseline":
        return BaselineScorer(analyzer)
    if spec.startswith("file:"):
        parts = spec[len("file:") :].split(",")
        pair_path = parts[0] or None
        span_path = parts[1] if len(parts) > 1 and parts[1] else None
        return FileScorer(pair_path=pair_path, span_path=span_path)
    if spec.startswith(("http://", "https://")):
        return HttpScorer(spec)
    raise ValidationError(f"unknown scorer spec {spec!r}")


def _merge(base: dict, extra: dict) -> None:
    for key, value in extra.items():
        if key not in base:
            raise ValidationError(f"unknown config key {key!r}")
        if isinstance(base[key], dict):
            if not isinstance(value, dict):
                raise ValidationError(f"config key {key!r} must be an object")
            _merge(base[key], value)
        else:
            base[key] = value


def _coerce(raw: str, current, dotted: str):
    if isinstance(current, bool):
        if raw.lower() in ("true", "1", "yes"):
            return True
        if raw.lower() in ("false", "0", "no"):
            return False
        raise ValidationError(f"{dotted}: expected a boolean, got {raw!r}")
    if isinstance(current, int) and not isinstance(current, bool):
        return int(raw)
    if isinstance(current, float):
        return float(raw)
    if isinstance(current, list):
        return json.loads(raw)
    return raw
