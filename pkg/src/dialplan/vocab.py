"""Token vocabulary with reserved special tokens.

Vocab files are one token per line; the line number is the id.
"""

from __future__ import annotations

import hashlib
from pathlib import Path
from typing import Iterable

PAD = "[PAD]"
BOS = "[BOS]"
EOS = "[EOS]"
SEP = "[SEP]"
ACTION_MARK = "[A]"
TOPIC_MARK = "[T]"
KNOW_MARK = "[K]"
HIST_MARK = "[H]"
PLAN_MARK = "[P]"
USER_MARK = "[USR]"
SYSTEM_MARK = "[SYS]"
GO = "[GO]"

SPECIALS = (
    PAD, BOS, EOS, SEP,
    ACTION_MARK, TOPIC_MARK,
    KNOW_MARK, HIST_MARK, PLAN_MARK,
    USER_MARK, SYSTEM_MARK, GO,
)

# Reserved literal topic for pairs with no grounded topic. A normal vocab
# word, but never counted as a knowledge hit.
NULL_TOPIC = "NULL"

# Tokens that may not appear inside action/topic values.
MARKER_TOKENS = frozenset({ACTION_MARK, TOPIC_MARK, EOS, PAD, BOS, SEP})


class Vocab:
    """Bidirectional token <-> id map. Ids are dense, specials first."""

    def __init__(self, tokens: Iterable[str] = (), add_specials: bool = True):
        self._tokens: list[str] = []
        self._ids: dict[str, int] = {}
        if add_specials:
            for tok in SPECIALS:
                self.add(tok)
        for tok in tokens:
            self.add(tok)

    def add(self, token: str) -> int:
        if token not in self._ids:
            self._ids[token] = len(self._tokens)
            self._tokens.append(token)
        return self._ids[token]

    def __len__(self) -> int:
        return len(self._tokens)

    def __contains__(self, token: str) -> bool:
        return token in self._ids

    def id(self, token: str) -> int:
        try:
            return self._ids[token]
        except KeyError:
            raise KeyError(f"token not in vocabulary: {token!r}") from None

    def token(self, idx: int) -> str:
        return self._tokens[idx]

    def encode(self, tokens: Iterable[str]) -> list[int]:
        return [self.id(t) for t in tokens]

    def decode(self, ids: Iterable[int]) -> list[str]:
        return [self._tokens[i] for i in ids]

    @property
    def tokens(self) -> tuple[str, ...]:
        return tuple(self._tokens)

    @property
    def pad_id(self) -> int:
        return self._ids[PAD]

    @property
    def bos_id(self) -> int:
        return self._ids[BOS]

    @property
    def eos_id(self) -> int:
        return self._ids[EOS]

    def save(self, path: str | Path) -> None:
        Path(path).write_text("\n".join(self._tokens) + "\n", encoding="utf-8")

    @classmethod
    def load(cls, path: str | Path) -> "Vocab":
        lines = Path(path).read_text(encoding="utf-8").splitlines()
        vocab = cls(add_specials=False)
        for tok in lines:
            vocab.add(tok)
        return vocab

    def content_hash(self) -> str:
        digest = hashlib.sha256("\n".join(self._tokens).encode("utf-8"))
        return digest.hexdigest()
