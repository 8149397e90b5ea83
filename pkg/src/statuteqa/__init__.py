"""Statute retrieval and legal question answering toolkit.

A lexical-first pipeline for low-resource statute QA: an Okapi BM25 index
over article text (with the article index prepended), a pluggable semantic
scorer, min-max normalized score fusion with grid-searched acceptance
thresholds, decision rules for factoid / yes-no / multiple-choice questions,
data-enrichment utilities for crawled Q&A dumps, and an evaluation harness
(F2-macro, accuracy, recall@k).
"""

from statuteqa.analyzer import Analyzer, TokenStream
from statuteqa.corpus import Article, Corpus, Question, QuestionType, load_corpus, load_questions
from statuteqa.bm25 import InvertedIndex, build_index
from statuteqa.ensemble import EnsembleParams, ScoredCandidate

__all__ = [
    "Analyzer",
    "TokenStream",
    "Article",
    "Corpus",
    "Question",
    "QuestionType",
    "load_corpus",
    "load_questions",
    "InvertedIndex",
    "build_index",
    "EnsembleParams",
    "ScoredCandidate",
]

__version__ = "0.1.0"
