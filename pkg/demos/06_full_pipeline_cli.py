#!/usr/bin/env python3
# The whole thing through the operator CLI, exactly as the acceptance
# suite drives it: index -> tune -> retrieve -> qa -> eval. Artifacts land
# in a scratch directory; re-running reproduces them byte for byte.

import json
import tempfile
from pathlib import Path

from statuteqa import cli

FIXTURES = Path(__file__).resolve().parents[1] / "tests" / "fixtures"

with tempfile.TemporaryDirectory() as scratch:
    work = Path(scratch)
    base = [
        "--paths.corpus", str(FIXTURES / "corpus.json"),
        "--paths.questions", str(FIXTURES / "questions.json"),
        "--paths.index", str(work / "index.json"),
        "--bm25.top_k", "5",
        "--ensemble.grid_step", "0.1",
    ]

    cli.main(["index", *base])
    cli.main(["tune", *base, "--out", str(work / "params.json")])
    cli.main(
        [
            "retrieve", *base,
            "--paths.params", str(work / "params.json"),
            "--out", str(work / "predictions.jsonl"),
        ]
    )
    cli.main(
        [
            "qa", *base,
            "--predictions", str(work / "predictions.jsonl"),
            "--out", str(work / "answers.jsonl"),
        ]
    )
    cli.main(
        [
            "eval", *base,
            "--predictions", str(work / "predictions.jsonl"),
            "--answers", str(work / "answers.jsonl"),
            "--out", str(work / "report.json"),
        ]
    )

    report = json.loads((work / "report.json").read_text(encoding="utf-8"))
    print("\nreport.json:")
    print(json.dumps(report, ensure_ascii=False, indent=2))

# a retrieval service with the same decision path:
#   statuteqa serve --paths.corpus ... --paths.index ... --port 8400
#   curl 'http://localhost:8400/search?q=thời hạn thẻ hướng dẫn viên&k=5'
#
# and to score with a neural model instead of the overlap baseline, start
# the sidecar and pass --paths.scorer http://localhost:8500:
#   statuteqa-sidecar --pair-model <checkpoint> --port 8500
