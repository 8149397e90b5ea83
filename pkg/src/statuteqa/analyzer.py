"""Deterministic text normalization and tokenization.

Every component that counts, indexes, or matches words goes through this
module so that lengths and term statistics agree across the pipeline.
Tokenization is syllable-level: NFC-normalize, case-fold, split on
whitespace and punctuation boundaries. No stemming, no diacritic
stripping, no compound-word segmentation.
"""

from __future__ import annotations

import re
import unicodedata
from dataclasses import dataclass, field

# Bumped whenever tokenization rules change; persisted indexes record it
# and refuse to load under a different tokenizer.
TOKENIZER_VERSION = "nfc-casefold-ws-1"

# Maximal runs of alphanumeric characters (unicode-aware, underscore excluded).
_TOKEN_RE = re.compile(r"[^\W_]+", re.UNICODE)


@dataclass(frozen=True)
class TokenStream:
    """Tokens plus byte offsets back into the (NFC-normalized) source text."""

    tokens: list[str]
    source_offsets: list[tuple[int, int]]

    def __len__(self) -> int:
        return len(self.tokens)

    def __iter__(self):
        return iter(self.tokens)


@dataclass(frozen=True)
class Analyzer:
    """Tokenizer with an optional stop-word hook (default: keep everything).

    Offsets index into the NFC form of the input; corpus text is
    NFC-normalized on ingest, so for pipeline text the two coincide.
    """

    stopwords: frozenset[str] = field(default_factory=frozenset)
    version: str = TOKENIZER_VERSION

    def analyze(self, text: str) -> TokenStream:
        normalized = unicodedata.normalize("NFC", text)
        byte_pos = _byte_positions(normalized)
        tokens: list[str] = []
        offsets: list[tuple[int, int]] = []
        for m in _TOKEN_RE.finditer(normalized):
            token = m.group(0).casefold()
            if token in self.stopwords:
                continue
            tokens.append(token)
            offsets.append((byte_pos[m.start()], byte_pos[m.end()]))
        return TokenStream(tokens=tokens, source_offsets=offsets)

    def tokens(self, text: str) -> list[str]:
        return self.analyze(text).tokens

    def word_count(self, text: str) -> int:
        """Token count after normalization; all length filters use this."""
        return len(self.analyze(text).tokens)


def _byte_positions(text: str) -> list[int]:
    """UTF-8 byte offset of each character boundary (len = len(text) + 1)."""
    positions = [0]
    total = 0
    for ch in text:
        total += len(ch.encode("utf-8"))
        positions.append(total)
    return positions
