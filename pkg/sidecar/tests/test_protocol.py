"""Protocol conformance: the engine's recorded test vectors, score range,
order preservation, offset integrity, and determinism."""

import json
import random
from pathlib import Path

import pytest

VECTORS_PATH = Path(__file__).resolve().parents[2] / "tests" / "protocol_vectors.json"

WORDS = (
    "thanh niên luật điều tài sản công dân việt nam tuổi thẻ hướng dẫn viên "
    "du lịch thời hạn năm người thành một hai ba cỡ ảnh chân dung màu hồ sơ "
    "ngoàivocab kếtquả xyzw"
).split()


def make_text(rng, lo=1, hi=12):
    return " ".join(rng.choices(WORDS, k=rng.randint(lo, hi)))


@pytest.fixture(scope="module")
def vectors():
    return json.loads(VECTORS_PATH.read_text(encoding="utf-8"))


def test_health_reports_model(client):
    body = client.get("/health").json()
    assert body["status"] == "ok"
    assert body["model"]


def test_health_before_load_is_not_ok(sidecar_config):
    from statuteqa_sidecar.app import create_app
    from fastapi.testclient import TestClient

    cold = TestClient(create_app(sidecar_config, preload=False))
    body = cold.get("/health").json()
    assert body["status"] != "ok"
    response = cold.post(
        "/score_pairs",
        json={"task": "relevance", "items": [{"id": "x", "text_a": "a", "text_b": "b"}]},
    )
    assert response.status_code == 503


def test_recorded_pair_vectors_conform(client, vectors):
    for batch in vectors["score_pairs"]:
        payload = {"task": batch["task"], "items": batch["items"]}
        response = client.post("/score_pairs", json=payload)
        assert response.status_code == 200
        scores = response.json()["scores"]
        # order preservation and score range
        assert [s["id"] for s in scores] == [i["id"] for i in batch["items"]]
        assert all(0.0 <= s["score"] <= 1.0 for s in scores)
        # identical texts in one batch score identically
        by_text = {}
        for item, entry in zip(batch["items"], scores):
            by_text.setdefault((item["text_a"], item["text_b"]), set()).add(entry["score"])
        assert all(len(v) == 1 for v in by_text.values())


def test_recorded_span_vectors_conform(client, vectors):
    for case in vectors["span_logits"]:
        response = client.post("/span_logits", json=case)
        assert response.status_code == 200
        body = response.json()
        n = len(body["start_scores"])
        assert n >= 1
        assert len(body["end_scores"]) == n
        assert len(body["token_offsets"]) == n
        raw = case["context"].encode("utf-8")
        for start, end in body["token_offsets"]:
            assert 0 <= start < end <= len(raw)
            raw[start:end].decode("utf-8")


def test_repeated_requests_are_deterministic(client, vectors):
    batch = vectors["score_pairs"][0]
    payload = {"task": batch["task"], "items": batch["items"]}
    first = client.post("/score_pairs", json=payload).json()
    second = client.post("/score_pairs", json=payload).json()
    assert first == second
    case = vectors["span_logits"][0]
    assert client.post("/span_logits", json=case).json() == client.post(
        "/span_logits", json=case
    ).json()


def test_offset_integrity_100_random_pairs(client):
    rng = random.Random(606)
    for _ in range(100):
        question = make_text(rng)
        context = make_text(rng, 1, 25)
        response = client.post(
            "/span_logits", json={"question": question, "context": context}
        )
        assert response.status_code == 200
        body = response.json()
        raw = context.encode("utf-8")
        assert len(body["start_scores"]) == len(body["end_scores"]) == len(body["token_offsets"])
        previous_end = 0
        for start, end in body["token_offsets"]:
            assert 0 <= start < end <= len(raw)
            raw[start:end].decode("utf-8")  # valid UTF-8 slice of the sent context
            assert start >= previous_end  # non-overlapping, increasing
            previous_end = end


def test_single_token_context(client):
    body = client.post("/span_logits", json={"question": "gì", "context": "một"}).json()
    assert len(body["start_scores"]) == 1
    assert body["token_offsets"] == [[0, len("một".encode("utf-8"))]]


def test_empty_context_rejected(client):
    response = client.post("/span_logits", json={"question": "gì", "context": ""})
    assert response.status_code == 422


def test_oversized_batch_rejected(client, sidecar_config):
    items = [
        {"id": f"r{i}", "text_a": "a", "text_b": "b"}
        for i in range(sidecar_config.max_batch + 1)
    ]
    response = client.post("/score_pairs", json={"task": "relevance", "items": items})
    assert response.status_code == 413


def test_duplicate_ids_rejected(client):
    items = [{"id": "same", "text_a": "a", "text_b": "b"}] * 2
    response = client.post("/score_pairs", json={"task": "relevance", "items": items})
    assert response.status_code == 422


def test_truncation_is_flagged(checkpoint_dirs):
    from fastapi.testclient import TestClient
    from statuteqa_sidecar.app import create_app
    from statuteqa_sidecar.models import SidecarConfig

    pair_dir, span_dir = checkpoint_dirs
    tiny = create_app(
        SidecarConfig(pair_model=str(pair_dir), span_model=str(span_dir), max_length=16)
    )
    client = TestClient(tiny)
    long_text = " ".join(["luật"] * 40)
    response = client.post(
        "/score_pairs",
        json={
            "task": "relevance",
            "items": [
                {"id": "long", "text_a": "thanh niên", "text_b": long_text},
                {"id": "short", "text_a": "thanh niên", "text_b": "luật"},
            ],
        },
    )
    body = response.json()
    assert body["truncated"] == ["long"]
    assert all(0.0 <= s["score"] <= 1.0 for s in body["scores"])

    span = client.post(
        "/span_logits", json={"question": "gì", "context": long_text}
    ).json()
    assert span["truncated"] is True
    raw = long_text.encode("utf-8")
    for start, end in span["token_offsets"]:
        raw[start:end].decode("utf-8")


def test_broken_checkpoint_fails_at_startup(tmp_path):
    from statuteqa_sidecar.app import create_app
    from statuteqa_sidecar.models import SidecarConfig

    with pytest.raises(Exception):
        create_app(SidecarConfig(pair_model=str(tmp_path / "not-a-checkpoint")))


def test_question_survives_truncation(checkpoint_dirs):
    # only_second truncation: every context token present belongs to the
    # context, and the question side is never cut.
    from fastapi.testclient import TestClient
    from statuteqa_sidecar.app import create_app
    from statuteqa_sidecar.models import SidecarConfig

    pair_dir, span_dir = checkpoint_dirs
    client = TestClient(
        create_app(SidecarConfig(pair_model=str(pair_dir), span_model=str(span_dir), max_length=24))
    )
    question = " ".join(["thanh"] * 10)
    context = " ".join(["luật"] * 30)
    body = client.post("/span_logits", json={"question": question, "context": context}).json()
    # 10 question tokens + 3 specials leaves 11 context slots at most
    assert 1 <= len(body["token_offsets"]) <= 11
