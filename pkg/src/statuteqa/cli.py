"""Operator surface: index, tune, retrieve, answer, evaluate, enrich,
stats, and a small retrieval HTTP service.

Every subcommand is a pure function of its inputs and configuration: no
timestamps or hidden state end up in any artifact, so re-running a command
reproduces its outputs byte for byte.
"""

from __future__ import annotations

import argparse
import json
import sys
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path
from urllib.parse import parse_qs, urlparse

from statuteqa import bm25, enrich, eval as eval_mod, qa as qa_mod
from statuteqa.config import DEFAULT_CONFIG, PipelineConfig
from statuteqa.corpus import corpus_stats, load_corpus, load_questions
from statuteqa.ensemble import EnsembleParams, grid_search
from statuteqa.errors import StatuteQAError, ValidationError
from statuteqa.jsonl import read_jsonl, write_jsonl
from statuteqa.pipeline import RetrievalPipeline


def _config_leaves(node: dict, prefix: str = "") -> list[str]:
    out = []
    for key, value in node.items():
        dotted = f"{prefix}{key}"
        if isinstance(value, dict):
            out.extend(_config_leaves(value, dotted + "."))
        else:
            out.append(dotted)
    return out


_LEAVES = _config_leaves(DEFAULT_CONFIG)


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="JSON config file; flags override it")
    for dotted in _LEAVES:
        parser.add_argument(f"--{dotted}", dest=dotted, metavar="V", help=argparse.SUPPRESS)


def _load_config(args: argparse.Namespace) -> PipelineConfig:
    cfg = PipelineConfig.from_file(args.config) if args.config else PipelineConfig()
    for dotted in _LEAVES:
        value = getattr(args, dotted, None)
        if value is not None:
            cfg.set(dotted, value)
    return cfg


def _pipeline(cfg: PipelineConfig, corpus, index) -> RetrievalPipeline:
    ens = cfg.values["ensemble"]
    conc = cfg.values["concurrency"]
    return RetrievalPipeline(
        corpus=corpus,
        index=index,
        backend=cfg.scorer_backend(),
        top_k=cfg.values["bm25"]["top_k"],
        scorer_text=ens["scorer_text"],
        normalize_mode=ens["normalize_mode"],
        allow_empty_answer=ens["allow_empty_answer"],
        batch_size=conc["batch_size"],
        max_in_flight=conc["max_in_flight"],
    )


def _alpha_theta(cfg: PipelineConfig) -> tuple[float, float]:
    params_path = cfg.values["paths"]["params"]
    if params_path:
        if not Path(params_path).exists():
            raise ValidationError(f"paths.params: {params_path} does not exist")
        params = EnsembleParams.load(params_path)
        return params.alpha, params.theta
    return cfg.values["ensemble"]["alpha"], cfg.values["ensemble"]["theta"]


def _selected_to_dict(qid: str, selected) -> dict:
    return {
        "question_id": qid,
        "articles": [
            {"law_id": c.law_id, "article_id": c.article_id, "score": c.score} for c in selected
        ],
    }


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------


def cmd_index(args: argparse.Namespace) -> int:
    cfg = _load_config(args)
    corpus = load_corpus(cfg.require_path("corpus"), cfg.values["prefix_template"])
    index = bm25.build_index(corpus, cfg.analyzer(), cfg.bm25_params())
    out = cfg.require_path("index", must_exist=False)
    index.save(out)
    print(f"indexed {index.doc_count} articles, {len(index.postings)} terms -> {out}")
    return 0


def cmd_retrieve(args: argparse.Namespace) -> int:
    cfg = _load_config(args)
    corpus = load_corpus(cfg.require_path("corpus"), cfg.values["prefix_template"])
    index = bm25.InvertedIndex.load(cfg.require_path("index"))
    questions = load_questions(cfg.require_path("questions"))
    alpha, theta = _alpha_theta(cfg)
    pipeline = _pipeline(cfg, corpus, index)
    results = pipeline.retrieve(questions, alpha, theta)
    write_jsonl(
        args.out, (_selected_to_dict(q.question_id, results[q.question_id]) for q in questions)
    )
    print(f"retrieved for {len(questions)} questions (alpha={alpha}, theta={theta}) -> {args.out}")
    return 0


def cmd_tune(args: argparse.Namespace) -> int:
    cfg = _load_config(args)
    corpus = load_corpus(cfg.require_path("corpus"), cfg.values["prefix_template"])
    index = bm25.InvertedIndex.load(cfg.require_path("index"))
    questions_path = cfg.require_path("questions")
    questions = load_questions(questions_path)
    labeled = [q for q in questions if q.gold_relevant]
    if not labeled:
        raise ValidationError("tune: no questions with relevant_articles labels")
    pipeline = _pipeline(cfg, corpus, index)
    pools = pipeline.build_pools(labeled)
    params = grid_search(
        labeled,
        pools,
        step=cfg.values["ensemble"]["grid_step"],
        tuned_on=questions_path.name,
        allow_empty_answer=cfg.values["ensemble"]["allow_empty_answer"],
    )
    out = args.out or cfg.values["paths"]["params"]
    if not out:
        raise ValidationError("tune: no output path (--out or paths.params)")
    params.save(out)
    print(
        f"tuned alpha={params.alpha} theta={params.theta} "
        f"(F2-macro {params.achieved_f2:.4f} on {params.tuned_on}) -> {out}"
    )
    return 0


def cmd_qa(args: argparse.Namespace) -> int:
    cfg = _load_config(args)
    corpus = load_corpus(cfg.require_path("corpus"), cfg.values["prefix_template"])
    questions = load_questions(cfg.require_path("questions"))
    backend = cfg.scorer_backend()
    policy = cfg.choice_policy()

    context_keys: dict[str, tuple[str, str]] = {}
    if args.predictions:
        for record in read_jsonl(args.predictions):
            arts = record.get("articles", [])
            if arts:
                context_keys[record["question_id"]] = (
                    arts[0]["law_id"],
                    arts[0]["article_id"],
                )

    rows = []
    for q in questions:
        key = context_keys.get(q.question_id)
        if key is None:
            if not q.gold_relevant:
                raise ValidationError(
                    f"question {q.question_id!r}: no retrieved or gold article to answer from"
                )
            key = sorted(q.gold_relevant)[0]
        article = corpus.get(*key)
        if article is None:
            raise ValidationError(f"question {q.question_id!r}: article {key} not in corpus")
        answer = qa_mod.answer_question(
            q,
            article,
            backend,
            policy=policy,
            bm25_params=cfg.bm25_params(),
            max_span_tokens=cfg.values["qa"]["max_span_tokens"],
            clause_top_n=cfg.values["qa"]["clause_top_n"],
        )
        rows.append({"question_id": q.question_id, "answer": answer.render()})
    write_jsonl(args.out, rows)
    print(f"answered {len(rows)} questions -> {args.out}")
    return 0


def cmd_eval(args: argparse.Namespace) -> int:
    cfg = _load_config(args)
    questions = load_questions(cfg.require_path("questions"))
    gold = {
        q.question_id: set(q.gold_relevant) for q in questions if q.gold_relevant is not None
    }

    report = None
    if args.predictions:
        predictions = {}
        for record in read_jsonl(args.predictions):
            predictions[record["question_id"]] = {
                (a["law_id"], a["article_id"]) for a in record["articles"]
            }
        report = eval_mod.score_retrieval(predictions, gold)
        print(
            f"F2-macro {report.f2_macro:.4f}  precision {report.precision_macro:.4f}  "
            f"recall {report.recall_macro:.4f}  ({len(report.per_question)} questions)"
        )
        if args.csv:
            report.save_csv(args.csv)

    accuracy = None
    if args.answers:
        answers = {r["question_id"]: str(r["answer"]) for r in read_jsonl(args.answers)}
        accuracy = eval_mod.score_answers(answers, questions)
        print(f"accuracy {accuracy:.4f}")

    recall_at_k = None
    if args.ks:
        ks = sorted(int(k) for k in args.ks.split(","))
        index = bm25.InvertedIndex.load(cfg.require_path("index"))
        recall_at_k = eval_mod.recall_at_k(index, questions, ks)
        for k in ks:
            print(f"recall@{k} {recall_at_k[k]:.4f}")

    if report is None and accuracy is None and recall_at_k is None:
        raise ValidationError("eval: nothing to do (need --predictions, --answers, or --ks)")

    if args.out:
        if report is None:
            payload: dict = {}
        else:
            payload = report.to_dict()
        if accuracy is not None:
            payload["accuracy"] = round(accuracy, 4)
        if recall_at_k is not None:
            payload["recall_at_k"] = {str(k): round(v, 4) for k, v in recall_at_k.items()}
        Path(args.out).write_text(
            json.dumps(payload, ensure_ascii=False, indent=2) + "\n", encoding="utf-8"
        )
    return 0


def cmd_enrich(args: argparse.Namespace) -> int:
    cfg = _load_config(args)
    econf = cfg.enrichment()
    analyzer = cfg.analyzer()

    if args.op == "filter":
        corpus = load_corpus(cfg.require_path("corpus"), cfg.values["prefix_template"])
        pairs = enrich.load_crawled_pairs(args.input)
        task = enrich.FilterTask(args.task)
        kept = enrich.filter_pairs(pairs, corpus, econf, task, analyzer)
        write_jsonl(
            args.out,
            (
                {
                    "question": p.question,
                    "answer": p.answer,
                    "url": p.source_url,
                    "refs": [{"law_id": law, "article_id": art} for law, art in p.extracted_refs],
                }
                for p in kept
            ),
        )
        print(f"kept {len(kept)} of {len(pairs)} pairs -> {args.out}")
    elif args.op == "mc2yesno":
        questions = load_questions(args.input)
        mc = [q for q in questions if q.qtype.value == "multiple_choice"]
        samples = enrich.mc_to_yesno(mc)
        write_jsonl(
            args.out,
            (
                {"id": s.sample_id, "text": s.text, "label": "yes" if s.label else "no"}
                for s in samples
            ),
        )
        print(f"generated {len(samples)} yes/no samples from {len(mc)} questions -> {args.out}")
    elif args.op == "mlm":
        pairs = [
            enrich.CrawledPair(question=r["question"], answer=r["answer"])
            for r in read_jsonl(args.input)
        ]
        records = enrich.build_mlm_subset(pairs, econf, analyzer)
        write_jsonl(args.out, ({"text": t} for t in records))
        print(f"selected {len(records)} of {len(pairs)} records -> {args.out}")
    elif args.op == "factoid":
        triples = [
            (r["question"], r["context"], r["answer"]) for r in read_jsonl(args.input)
        ]
        kept = enrich.filter_factoid_training(triples)
        write_jsonl(
            args.out,
            (
                {
                    "question": s.question,
                    "context": s.context,
                    "answer": s.answer,
                    "byte_start": s.byte_start,
                    "byte_end": s.byte_end,
                }
                for s in kept
            ),
        )
        print(f"kept {len(kept)} of {len(triples)} factoid samples -> {args.out}")
    elif args.op == "histogram":
        pairs = [
            enrich.CrawledPair(question=r["question"], answer=r.get("answer", ""))
            for r in read_jsonl(args.input)
        ]
        hist = enrich.length_histogram(pairs, args.bucket_width, analyzer)
        text = json.dumps(hist, ensure_ascii=False, indent=2) + "\n"
        if args.out:
            Path(args.out).write_text(text, encoding="utf-8")
        else:
            print(text, end="")
    else:
        raise ValidationError(f"unknown enrich op {args.op!r}")
    return 0


def cmd_stats(args: argparse.Namespace) -> int:
    cfg = _load_config(args)
    corpus = load_corpus(cfg.require_path("corpus"), cfg.values["prefix_template"])
    stats = corpus_stats(corpus, cfg.analyzer(), bucket_width=args.bucket_width)
    text = json.dumps(stats.to_dict(), ensure_ascii=False, indent=2) + "\n"
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    else:
        print(text, end="")
    return 0


def build_search_server(cfg: PipelineConfig, host: str, port: int) -> ThreadingHTTPServer:
    """Retrieval service over the immutable index; responses mirror the
    retrieve command's output for the same query and params."""
    corpus = load_corpus(cfg.require_path("corpus"), cfg.values["prefix_template"])
    index = bm25.InvertedIndex.load(cfg.require_path("index"))
    pipeline = _pipeline(cfg, corpus, index)
    alpha, theta = _alpha_theta(cfg)
    default_k = cfg.values["bm25"]["top_k"]

    class Handler(BaseHTTPRequestHandler):
        def do_GET(self):  # noqa: N802 (http.server API)
            parsed = urlparse(self.path)
            if parsed.path != "/search":
                self._reply(404, {"error": "unknown path; use /search?q=...&k=..."})
                return
            params = parse_qs(parsed.query)
            query = params.get("q", [""])[0]
            if not query:
                self._reply(400, {"error": "missing query parameter q"})
                return
            try:
                k = int(params.get("k", [str(default_k)])[0])
                selected = pipeline.search(query, k=k, alpha=alpha, theta=theta)
            except StatuteQAError as e:
                self._reply(400, {"error": str(e)})
                return
            self._reply(
                200,
                {
                    "q": query,
                    "k": k,
                    "alpha": alpha,
                    "theta": theta,
                    "articles": [
                        {"law_id": c.law_id, "article_id": c.article_id, "score": c.score}
                        for c in selected
                    ],
                },
            )

        def _reply(self, status: int, payload: dict) -> None:
            body = json.dumps(payload, ensure_ascii=False, sort_keys=True).encode("utf-8")
            self.send_response(status)
            self.send_header("Content-Type", "application/json; charset=utf-8")
            self.send_header("Content-Length", str(len(body)))
            self.end_headers()
            self.wfile.write(body)

        def log_message(self, fmt, *log_args):
            pass  # quiet by default

    return ThreadingHTTPServer((host, port), Handler)


def cmd_serve(args: argparse.Namespace) -> int:
    cfg = _load_config(args)
    server = build_search_server(cfg, args.host, args.port)
    print(f"serving on http://{args.host}:{server.server_address[1]}/search")
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        pass
    finally:
        server.server_close()
    return 0


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="statuteqa",
        description="Statute retrieval and legal question answering pipeline.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("index", help="build and persist the BM25 index")
    _add_common(p)
    p.set_defaults(func=cmd_index)

    p = sub.add_parser("retrieve", help="questions file -> predictions JSONL")
    _add_common(p)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_retrieve)

    p = sub.add_parser("tune", help="grid-search alpha and theta on labeled questions")
    _add_common(p)
    p.add_argument("--out", help="params JSON (default: paths.params)")
    p.set_defaults(func=cmd_tune)

    p = sub.add_parser("qa", help="answer questions from retrieved or gold articles")
    _add_common(p)
    p.add_argument("--predictions", help="retrieve output; top article becomes the context")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_qa)

    p = sub.add_parser("eval", help="score predictions and/or answers against gold labels")
    _add_common(p)
    p.add_argument("--predictions", help="retrieval predictions JSONL")
    p.add_argument("--answers", help="answers JSONL")
    p.add_argument("--ks", help="comma-separated cutoffs for a BM25 recall@k sweep")
    p.add_argument("--out", help="report JSON path")
    p.add_argument("--csv", help="per-question CSV summary path")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("enrich", help="filter dumps, generate samples, cut MLM subsets")
    _add_common(p)
    p.add_argument("--op", required=True, choices=["filter", "mc2yesno", "mlm", "factoid", "histogram"])
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--out")
    p.add_argument("--task", default="retrieval", choices=["retrieval", "qa"])
    p.add_argument("--bucket-width", type=int, default=50)
    p.set_defaults(func=cmd_enrich)

    p = sub.add_parser("stats", help="corpus length-distribution JSON")
    _add_common(p)
    p.add_argument("--out")
    p.add_argument("--bucket-width", type=int, default=50)
    p.set_defaults(func=cmd_stats)

    p = sub.add_parser("serve", help="HTTP retrieval endpoint GET /search?q=...&k=...")
    _add_common(p)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8400)
    p.set_defaults(func=cmd_serve)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except StatuteQAError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    except (OSError, KeyError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
