import pytest
import torch
from transformers import (
    BertConfig,
    BertForQuestionAnswering,
    BertForSequenceClassification,
    BertTokenizerFast,
)

# Small vocabulary mixing known Vietnamese syllables (multibyte UTF-8) with
# wordpiece continuations; anything else becomes [UNK] spanning the word.
VOCAB = (
    ["[PAD]", "[UNK]", "[CLS]", "[SEP]", "[MASK]"]
    + list("abcdefghijklmnopqrstuvwxyz0123456789")
    + [f"##{c}" for c in "abcdefghijklmnopqrstuvwxyz0123456789"]
    + [
        "thanh", "niên", "luật", "điều", "tài", "sản", "công", "dân", "việt", "nam",
        "tuổi", "thẻ", "hướng", "dẫn", "viên", "du", "lịch", "thời", "hạn", "năm",
        "người", "thành", "là", "từ", "đủ", "một", "hai", "ba", "của", "và", "gì",
        "cỡ", "ảnh", "chân", "dung", "màu", "hồ", "sơ", "bao", "gồm", "3cm", "4cm",
    ]
)


def build_checkpoint(directory, num_labels=2):
    torch.manual_seed(1234)
    vocab_file = directory / "vocab.txt"
    vocab_file.write_text("\n".join(VOCAB), encoding="utf-8")
    tokenizer = BertTokenizerFast(
        vocab_file=str(vocab_file), do_lower_case=True, strip_accents=False
    )
    config = BertConfig(
        vocab_size=len(VOCAB),
        hidden_size=32,
        num_hidden_layers=2,
        num_attention_heads=2,
        intermediate_size=64,
        max_position_embeddings=512,
        num_labels=num_labels,
    )
    pair_dir = directory / "pair"
    span_dir = directory / "span"
    pair = BertForSequenceClassification(config)
    pair.save_pretrained(pair_dir)
    tokenizer.save_pretrained(pair_dir)
    span = BertForQuestionAnswering(config)
    span.save_pretrained(span_dir)
    tokenizer.save_pretrained(span_dir)
    return pair_dir, span_dir


@pytest.fixture(scope="session")
def checkpoint_dirs(tmp_path_factory):
    directory = tmp_path_factory.mktemp("tiny-checkpoint")
    return build_checkpoint(directory)


@pytest.fixture(scope="session")
def sidecar_config(checkpoint_dirs):
    from statuteqa_sidecar.models import SidecarConfig

    pair_dir, span_dir = checkpoint_dirs
    return SidecarConfig(pair_model=str(pair_dir), span_model=str(span_dir), max_batch=16)


@pytest.fixture(scope="session")
def app(sidecar_config):
    from statuteqa_sidecar.app import create_app

    return create_app(sidecar_config)


@pytest.fixture(scope="session")
def client(app):
    from fastapi.testclient import TestClient

    return TestClient(app)
