"""Text normalization and the whitespace tokenizer used for synthetic corpora.

Real corpora can plug in a subword tokenizer implementing the same protocol.
"""

from __future__ import annotations

import re
from typing import Protocol

_PUNCT = re.compile(r"[^\w\s]", re.UNICODE)
_WS = re.compile(r"\s+")


def normalize(text: str) -> str:
    """Lowercase, strip punctuation, collapse whitespace."""
    text = _PUNCT.sub(" ", text.lower())
    return _WS.sub(" ", text).strip()


class Tokenizer(Protocol):
    def tokenize(self, text: str) -> list[str]: ...


class WhitespaceTokenizer:
    """Word tokenizer: normalize then split on whitespace."""

    def __init__(self, lowercase: bool = True):
        self.lowercase = lowercase

    def tokenize(self, text: str) -> list[str]:
        if self.lowercase:
            text = normalize(text)
        return text.split()


DEFAULT_TOKENIZER = WhitespaceTokenizer()


def tokens_of(text: str) -> tuple[str, ...]:
    return tuple(DEFAULT_TOKENIZER.tokenize(text))
