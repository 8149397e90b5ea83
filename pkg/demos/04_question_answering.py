#!/usr/bin/env python3
# The three answer-decision procedures: extractive spans for factoid
# questions, clause matching + pair classification for yes/no, and the
# threshold rules for multiple choice (including special options).

from pathlib import Path

from statuteqa.corpus import load_corpus, load_questions
from statuteqa.eval import score_answers
from statuteqa.qa import answer_question, match_passage, segment_clauses
from statuteqa.scorer import BaselineScorer

FIXTURES = Path(__file__).resolve().parents[1] / "tests" / "fixtures"

corpus = load_corpus(FIXTURES / "corpus.json")
questions = load_questions(FIXTURES / "questions.json")
backend = BaselineScorer()

# statute articles split into enumerated clauses; yes/no and MC matching
# works at clause level to avoid bias from unrelated passages
article = corpus.get("Bộ luật Dân sự", "21")
print("clauses of Điều 21 Bộ luật Dân sự:")
for clause in segment_clauses(article):
    print(f"  [{clause.clause_id}] {clause.text[:60]}")

q3 = next(q for q in questions if q.question_id == "q3")
print(f"\n{q3.question_id}: {q3.text}")
print("matched clause:", match_passage(q3, article).clause_id)

# dispatch every fixture question from its gold article
answers = {}
for q in questions:
    gold_article = corpus.get(*sorted(q.gold_relevant)[0])
    answer = answer_question(q, gold_article, backend)
    answers[q.question_id] = answer.render()
    print(f"{q.question_id} [{q.qtype.value:<15}] -> {answer.render()!r}  (gold {q.gold_answer!r})")

accuracy = score_answers(answers, questions)
print(f"\naccuracy with the overlap baseline: {accuracy:.2%}")
print("(the neural sidecar slots in behind the same scorer protocol)")
