#!/usr/bin/env python3
# Build the BM25 inverted index and retrieve candidates, then sweep
# recall@k the way candidate depth is chosen for the semantic stage.

from pathlib import Path

from statuteqa.analyzer import Analyzer
from statuteqa.bm25 import BM25Params, build_index, retrieve_topk
from statuteqa.corpus import load_corpus, load_questions
from statuteqa.eval import recall_at_k

FIXTURES = Path(__file__).resolve().parents[1] / "tests" / "fixtures"

corpus = load_corpus(FIXTURES / "corpus.json")
index = build_index(corpus, Analyzer(), BM25Params(k1=1.2, b=0.75))
print(f"indexed {index.doc_count} docs, {len(index.postings)} terms, avg length {index.avg_doc_length:.1f}")

query = "Thẻ hướng dẫn viên du lịch có thời hạn bao lâu?"
print(f"\nquery: {query}")
for candidate in retrieve_topk(index, query, k=3):
    print(f"  {candidate.w_bm25_raw:6.3f}  Điều {candidate.article_id} {candidate.law_id}")

# recall@k on the labeled questions: non-decreasing in k by construction,
# and the depth where it saturates is the candidate-pool size worth feeding
# to the (expensive) semantic scorer
questions = [q for q in load_questions(FIXTURES / "questions.json") if q.gold_relevant]
sweep = recall_at_k(index, questions, ks=[1, 2, 3, 5, 9])
print("\nrecall@k over", len(questions), "questions:")
for k, value in sweep.items():
    print(f"  top-{k:<3d} {value:.2%}")
