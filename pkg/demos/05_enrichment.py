#!/usr/bin/env python3
# Data enrichment over a crawled Q&A dump: pull statute citations out of
# answers with regexes, keep pairs that resolve into the corpus and fit
# the length budget, recycle multiple-choice questions into yes/no
# statements, and cut a token-budget subset for MLM pretraining.

from pathlib import Path

from statuteqa.corpus import load_corpus, load_questions
from statuteqa.enrich import (
    FilterTask,
    build_mlm_subset,
    extract_references,
    filter_pairs,
    length_histogram,
    load_crawled_pairs,
    mc_to_yesno,
)

FIXTURES = Path(__file__).resolve().parents[1] / "tests" / "fixtures"

corpus = load_corpus(FIXTURES / "corpus.json")
pairs = load_crawled_pairs(FIXTURES / "crawled.jsonl")
print(f"{len(pairs)} crawled pairs")

for pair in pairs[:3]:
    refs = extract_references(pair.answer)
    print(f"  Q: {pair.question[:50]}")
    print(f"     citations found: {refs}")

# keep pairs whose citations all resolve in the corpus and whose question
# fits the task budget (100 words for retrieval, 128 for QA)
kept = filter_pairs(pairs, corpus, task=FilterTask.RETRIEVAL)
print(f"\nkept after filtering: {len(kept)} of {len(pairs)}")
for pair in kept:
    print(f"  {pair.question[:50]} -> {pair.extracted_refs}")

print("\nlength histogram before filtering:", length_histogram(pairs)["buckets"])
print("length histogram after filtering: ", length_histogram(kept)["buckets"])

# multiple-choice questions become yes/no training statements: stem +
# choice text, affirmative iff the choice is the gold answer; special
# options ("all of the above", "both A and B") carry no article text and
# are skipped
questions = load_questions(FIXTURES / "questions.json")
mc = [q for q in questions if q.qtype.value == "multiple_choice"]
samples = mc_to_yesno(mc)
print(f"\n{len(mc)} MC questions -> {len(samples)} yes/no statements:")
for sample in samples:
    print(f"  [{'yes' if sample.label else 'no ':<3}] {sample.text[:70]}")

# MLM pretraining subset: question <= 128 tokens, question+answer <= 512
records = build_mlm_subset(kept)
print(f"\nMLM subset: {len(records)} concatenated records")
