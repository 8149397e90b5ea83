import json
from pathlib import Path

import pytest

from statuteqa.analyzer import Analyzer
from statuteqa.bm25 import BM25Params, build_index
from statuteqa.corpus import load_corpus, load_questions

FIXTURES = Path(__file__).parent / "fixtures"


@pytest.fixture(scope="session")
def fixtures_dir() -> Path:
    return FIXTURES


@pytest.fixture(scope="session")
def analyzer() -> Analyzer:
    return Analyzer()


@pytest.fixture(scope="session")
def corpus():
    return load_corpus(FIXTURES / "corpus.json")


@pytest.fixture(scope="session")
def questions():
    return load_questions(FIXTURES / "questions.json")


@pytest.fixture(scope="session")
def index(corpus, analyzer):
    return build_index(corpus, analyzer, BM25Params())


@pytest.fixture()
def corpus_file(tmp_path) -> Path:
    """A writable copy of the corpus fixture."""
    src = (FIXTURES / "corpus.json").read_text(encoding="utf-8")
    path = tmp_path / "corpus.json"
    path.write_text(src, encoding="utf-8")
    return path


def write_json(path: Path, payload) -> Path:
    path.write_text(json.dumps(payload, ensure_ascii=False), encoding="utf-8")
    return path
