#!/usr/bin/env python3
# Load a statute corpus and look at what's inside: article prefixes,
# lookups, and the token-length distribution.

import json
from pathlib import Path

from statuteqa.analyzer import Analyzer
from statuteqa.corpus import corpus_stats, load_corpus, load_questions

FIXTURES = Path(__file__).resolve().parents[1] / "tests" / "fixtures"

corpus = load_corpus(FIXTURES / "corpus.json")
print(f"{len(corpus)} articles across laws: {corpus.law_ids()}")

# every article is indexed with its rendered index prepended, so a query
# citing "Điều 105" can match lexically
article = corpus.get("Bộ luật Dân sự", "105")
print("\nraw text:      ", article.text.splitlines()[0], "...")
print("prefixed text: ", article.prefixed_text[:60], "...")

# token-length distribution of the raw article text (the official corpora
# peak around 300 tokens; this bundled fixture is tiny)
stats = corpus_stats(corpus, Analyzer(), bucket_width=10)
print("\nlength histogram (bucket -> count):")
for lo, hi, count in stats.buckets:
    print(f"  [{lo:3d},{hi:3d}): {'#' * count} ({count})")
print(f"mean {stats.mean} / median {stats.median} / max {stats.max} tokens")

# the stats JSON shape is ready for external plotting
print("\nas JSON:", json.dumps(stats.to_dict(), ensure_ascii=False)[:80], "...")

questions = load_questions(FIXTURES / "questions.json")
for q in questions[:3]:
    print(f"\n{q.question_id} [{q.qtype.value}] {q.text[:60]}")
    print(f"   gold articles: {sorted(q.gold_relevant)}  answer: {q.gold_answer!r}")
