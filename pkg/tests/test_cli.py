import json
import threading
from pathlib import Path

import pytest
import requests

from statuteqa import cli
from statuteqa.config import PipelineConfig, make_scorer
from statuteqa.errors import ValidationError
from statuteqa.scorer import BaselineScorer, FileScorer

FIXTURES = Path(__file__).parent / "fixtures"


@pytest.fixture()
def workdir(tmp_path):
    return tmp_path


def run(*argv):
    return cli.main([str(a) for a in argv])


def base_args(workdir, **extra):
    args = [
        "--paths.corpus", FIXTURES / "corpus.json",
        "--paths.questions", FIXTURES / "questions.json",
        "--paths.index", workdir / "index.json",
        "--bm25.top_k", "5",
    ]
    for key, value in extra.items():
        args += [f"--{key}", str(value)]
    return args


def test_index_command(workdir, capsys):
    assert run("index", *base_args(workdir)) == 0
    assert (workdir / "index.json").exists()
    assert "indexed 9 articles" in capsys.readouterr().out


def test_index_twice_byte_identical(workdir):
    run("index", *base_args(workdir))
    first = (workdir / "index.json").read_bytes()
    run("index", *base_args(workdir))
    assert (workdir / "index.json").read_bytes() == first


def test_full_pipeline_reproduces_tuned_f2(workdir, capsys):
    run("index", *base_args(workdir))
    params_path = workdir / "params.json"
    assert (
        run(
            "tune",
            *base_args(workdir, **{"ensemble.grid_step": "0.1"}),
            "--out", params_path,
        )
        == 0
    )
    params = json.loads(params_path.read_text(encoding="utf-8"))

    predictions_path = workdir / "preds.jsonl"
    assert (
        run(
            "retrieve",
            *base_args(workdir),
            "--paths.params", params_path,
            "--out", predictions_path,
        )
        == 0
    )

    report_path = workdir / "report.json"
    assert (
        run(
            "eval",
            *base_args(workdir),
            "--predictions", predictions_path,
            "--out", report_path,
        )
        == 0
    )
    report = json.loads(report_path.read_text(encoding="utf-8"))
    # Retrieval with the tuned params on the tuning set must reproduce the
    # F2 the grid search reported.
    assert report["f2_macro"] == pytest.approx(params["achieved_f2"], abs=5e-5)


def test_retrieve_alpha_one_is_pure_bm25(workdir, index):
    from statuteqa.bm25 import retrieve_topk

    run("index", *base_args(workdir))
    out = workdir / "preds.jsonl"
    run(
        "retrieve",
        *base_args(workdir, **{"ensemble.alpha": "1.0", "ensemble.theta": "0.0"}),
        "--out", out,
    )
    questions = json.loads((FIXTURES / "questions.json").read_text(encoding="utf-8"))
    by_qid = {q["question_id"]: q["text"] for q in questions}
    for line in out.read_text(encoding="utf-8").splitlines():
        record = json.loads(line)
        got = [(a["law_id"], a["article_id"]) for a in record["articles"]]
        bm25_keys = [c.key for c in retrieve_topk(index, by_qid[record["question_id"]], k=5)]
        assert set(got) == set(bm25_keys)


def test_qa_command_with_gold_articles(workdir):
    out = workdir / "answers.jsonl"
    assert run("qa", *base_args(workdir), "--out", out) == 0
    answers = {r["question_id"]: r["answer"] for r in map(json.loads, out.read_text(encoding="utf-8").splitlines())}
    assert set(answers) == {"q1", "q2", "q3", "q4", "q5", "q6"}
    assert answers["q2"] == "yes"
    assert answers["q4"] == "no"
    assert answers["q5"] in {"A", "B", "C"}


def test_qa_then_eval_accuracy(workdir, capsys):
    answers_path = workdir / "answers.jsonl"
    run("qa", *base_args(workdir), "--out", answers_path)
    report_path = workdir / "report.json"
    assert (
        run("eval", *base_args(workdir), "--answers", answers_path, "--out", report_path) == 0
    )
    payload = json.loads(report_path.read_text(encoding="utf-8"))
    assert 0.0 <= payload["accuracy"] <= 1.0


def test_eval_recall_sweep(workdir, capsys):
    run("index", *base_args(workdir))
    assert run("eval", *base_args(workdir), "--ks", "1,3,9") == 0
    out = capsys.readouterr().out
    assert "recall@1" in out and "recall@9" in out


def test_eval_without_inputs_fails(workdir):
    assert run("eval", *base_args(workdir)) == 1


def test_stats_command(workdir, capsys):
    assert run("stats", *base_args(workdir)) == 0
    payload = json.loads(capsys.readouterr().out)
    assert sum(b["count"] for b in payload["buckets"]) == 9


def test_enrich_filter_and_histogram(workdir, capsys):
    out = workdir / "kept.jsonl"
    assert (
        run(
            "enrich", *base_args(workdir),
            "--op", "filter", "--in", FIXTURES / "crawled.jsonl", "--out", out,
        )
        == 0
    )
    kept = [json.loads(l) for l in out.read_text(encoding="utf-8").splitlines()]
    assert len(kept) == 2
    assert all(r["refs"] for r in kept)

    capsys.readouterr()  # drop the filter command's summary line
    assert (
        run("enrich", *base_args(workdir), "--op", "histogram", "--in", out) == 0
    )
    hist = json.loads(capsys.readouterr().out)
    assert sum(b["count"] for b in hist["buckets"]) == 2


def test_enrich_mc2yesno(workdir):
    out = workdir / "yn.jsonl"
    assert (
        run(
            "enrich", *base_args(workdir),
            "--op", "mc2yesno", "--in", FIXTURES / "questions.json", "--out", out,
        )
        == 0
    )
    rows = [json.loads(l) for l in out.read_text(encoding="utf-8").splitlines()]
    # q5 has 3 concrete choices; q6 has 2 concrete + 1 special
    assert len(rows) == 5
    assert sum(r["label"] == "yes" for r in rows) == 1  # q6's gold is its special choice


def test_enrich_factoid_filter(workdir):
    src = workdir / "triples.jsonl"
    rows = [
        {"question": "q1", "context": "thời hạn năm năm", "answer": "năm năm"},
        {"question": "q2", "context": "không chứa", "answer": "năm năm"},
    ]
    src.write_text("\n".join(json.dumps(r, ensure_ascii=False) for r in rows), encoding="utf-8")
    out = workdir / "kept.jsonl"
    assert run("enrich", *base_args(workdir), "--op", "factoid", "--in", src, "--out", out) == 0
    kept = [json.loads(l) for l in out.read_text(encoding="utf-8").splitlines()]
    assert len(kept) == 1
    assert kept[0]["byte_start"] > 0


def test_config_flag_end_to_end(workdir, tmp_path, capsys):
    cfg_path = tmp_path / "config.json"
    cfg_path.write_text(
        json.dumps(
            {
                "paths": {
                    "corpus": str(FIXTURES / "corpus.json"),
                    "index": str(workdir / "index.json"),
                },
                "bm25": {"top_k": 5},
            }
        ),
        encoding="utf-8",
    )
    assert run("index", "--config", cfg_path) == 0
    assert (workdir / "index.json").exists()
    capsys.readouterr()
    assert run("stats", "--config", cfg_path, "--bucket-width", "10") == 0
    payload = json.loads(capsys.readouterr().out)
    assert sum(b["count"] for b in payload["buckets"]) == 9


def test_config_file_and_override(workdir, tmp_path):
    cfg_path = tmp_path / "config.json"
    cfg_path.write_text(json.dumps({"bm25": {"k1": 1.6}}), encoding="utf-8")
    cfg = PipelineConfig.from_file(cfg_path)
    assert cfg.values["bm25"]["k1"] == 1.6
    cfg.set("bm25.k1", "2.0")
    assert cfg.values["bm25"]["k1"] == 2.0
    with pytest.raises(ValidationError, match="unknown config key"):
        cfg.set("bm25.zzz", "1")


def test_make_scorer_specs(tmp_path):
    assert isinstance(make_scorer("baseline"), BaselineScorer)
    pair_file = tmp_path / "p.jsonl"
    pair_file.write_text("", encoding="utf-8")
    assert isinstance(make_scorer(f"file:{pair_file}"), FileScorer)
    with pytest.raises(ValidationError):
        make_scorer("magic")


def test_missing_corpus_path_is_error(workdir, capsys):
    assert run("stats") == 1
    assert "paths.corpus" in capsys.readouterr().err


def test_missing_params_file_is_error(workdir, capsys):
    run("index", *base_args(workdir))
    code = run(
        "retrieve",
        *base_args(workdir),
        "--paths.params", workdir / "nope.json",
        "--out", workdir / "preds.jsonl",
    )
    assert code == 1
    assert "paths.params" in capsys.readouterr().err


def test_eval_csv_summary(workdir):
    run("index", *base_args(workdir))
    preds = workdir / "preds.jsonl"
    run("retrieve", *base_args(workdir), "--out", preds)
    csv_path = workdir / "per_question.csv"
    assert (
        run("eval", *base_args(workdir), "--predictions", preds, "--csv", csv_path) == 0
    )
    lines = csv_path.read_text(encoding="utf-8").strip().splitlines()
    assert lines[0] == "qid,precision,recall,f2"
    assert len(lines) == 7  # header + six questions


def test_serve_matches_retrieve(workdir):
    run("index", *base_args(workdir))
    cfg = PipelineConfig()
    cfg.set("paths.corpus", str(FIXTURES / "corpus.json"))
    cfg.set("paths.index", str(workdir / "index.json"))
    cfg.set("bm25.top_k", "5")
    server = cli.build_search_server(cfg, "127.0.0.1", 0)
    port = server.server_address[1]
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    try:
        questions = json.loads((FIXTURES / "questions.json").read_text(encoding="utf-8"))
        query = next(q["text"] for q in questions if q["question_id"] == "q2")
        resp = requests.get(
            f"http://127.0.0.1:{port}/search", params={"q": query, "k": 5}, timeout=10
        )
        assert resp.status_code == 200
        payload = resp.json()

        out = workdir / "preds.jsonl"
        run(
            "retrieve",
            "--paths.corpus", str(FIXTURES / "corpus.json"),
            "--paths.index", str(workdir / "index.json"),
            "--paths.questions", str(FIXTURES / "questions.json"),
            "--bm25.top_k", "5",
            "--out", str(out),
        )
        record = next(
            json.loads(l)
            for l in out.read_text(encoding="utf-8").splitlines()
            if json.loads(l)["question_id"] == "q2"  # same text as the query
        )
        assert payload["articles"] == record["articles"]

        missing = requests.get(f"http://127.0.0.1:{port}/other", timeout=10)
        assert missing.status_code == 404
        no_query = requests.get(f"http://127.0.0.1:{port}/search", timeout=10)
        assert no_query.status_code == 400
    finally:
        server.shutdown()
        server.server_close()
        thread.join(timeout=5)
