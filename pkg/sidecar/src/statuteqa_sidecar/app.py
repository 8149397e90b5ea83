"""FastAPI surface implementing the engine's scorer wire protocol.

POST /score_pairs  {task, items: [{id, text_a, text_b}]} -> {scores: [{id, score}], truncated: [id]}
POST /span_logits  {question, context} -> {start_scores, end_scores, token_offsets, truncated}
GET  /health       -> {status, model}

The health endpoint reports a non-ok status until the model bundle has
finished loading; everything else returns 503 in that window. Requests in
one batch are processed atomically and answered in request order.
"""

from __future__ import annotations

import threading
from typing import Optional

from fastapi import FastAPI, HTTPException
from pydantic import BaseModel, Field

from statuteqa_sidecar.models import ModelBundle, SidecarConfig


class PairItem(BaseModel):
    id: str
    text_a: str
    text_b: str


class ScorePairsRequest(BaseModel):
    task: str = "relevance"
    items: list[PairItem] = Field(min_length=1)


class SpanRequest(BaseModel):
    question: str
    context: str


class ModelState:
    """Holds the bundle; None until loading completes."""

    def __init__(self, config: SidecarConfig):
        self.config = config
        self.bundle: Optional[ModelBundle] = None
        self._lock = threading.Lock()

    def load(self) -> None:
        with self._lock:
            if self.bundle is None:
                self.bundle = ModelBundle(self.config)

    def require(self) -> ModelBundle:
        if self.bundle is None:
            raise HTTPException(status_code=503, detail="model is still loading")
        return self.bundle


def create_app(config: SidecarConfig, preload: bool = True) -> FastAPI:
    app = FastAPI(title="statuteqa scoring sidecar")
    state = ModelState(config)
    app.state.models = state
    if preload:
        state.load()  # fail fast: a broken checkpoint aborts startup

    # One batch at a time per process; requests queue on this lock.
    inference_lock = threading.Lock()

    @app.get("/health")
    def health():
        if state.bundle is None:
            return {"status": "loading", "model": config.name}
        return {"status": "ok", "model": state.bundle.name}

    @app.post("/score_pairs")
    def score_pairs(request: ScorePairsRequest):
        bundle = state.require()
        if len(request.items) > config.max_batch:
            raise HTTPException(
                status_code=413,
                detail=f"batch of {len(request.items)} exceeds max {config.max_batch}",
            )
        ids = [item.id for item in request.items]
        if len(set(ids)) != len(ids):
            raise HTTPException(status_code=422, detail="duplicate request ids in batch")
        with inference_lock:
            result = bundle.score_pairs([(i.text_a, i.text_b) for i in request.items])
        return {
            "scores": [
                {"id": rid, "score": score} for rid, score in zip(ids, result.scores)
            ],
            "truncated": [ids[i] for i in result.truncated_indices],
        }

    @app.post("/span_logits")
    def span_logits(request: SpanRequest):
        bundle = state.require()
        if not request.context:
            raise HTTPException(status_code=422, detail="context is empty")
        with inference_lock:
            result = bundle.span_logits(request.question, request.context)
        if not result.token_offsets:
            raise HTTPException(status_code=422, detail="context produced no tokens")
        return {
            "start_scores": result.start_scores,
            "end_scores": result.end_scores,
            "token_offsets": [[s, e] for s, e in result.token_offsets],
            "truncated": result.truncated,
        }

    return app
