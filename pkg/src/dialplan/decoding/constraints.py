"""Contiguous-phrase constraint matching for constrained beam search.

The matcher is a KMP-style automaton over the constraint token sequence:
`matched` is the length of the longest suffix of the hypothesis that is a
prefix of the constraint. The constraint is satisfied exactly while the
hypothesis currently ends with the full phrase.
"""

from __future__ import annotations

from dataclasses import dataclass, field


def _failure(tokens: tuple[int, ...]) -> list[int]:
    fail = [0] * len(tokens)
    k = 0
    for i in range(1, len(tokens)):
        while k > 0 and tokens[i] != tokens[k]:
            k = fail[k - 1]
        if tokens[i] == tokens[k]:
            k += 1
        fail[i] = k
    return fail


def constraint_transition_table(tokens: tuple[int, ...]) -> list[dict[int, int]]:
    """transition[m][tok] = new matched length (0 when absent)."""
    length = len(tokens)
    fail = _failure(tokens)
    table: list[dict[int, int]] = []
    alphabet = set(tokens)
    for m in range(length + 1):
        row: dict[int, int] = {}
        for tok in alphabet:
            k = m if m < length else fail[length - 1]
            while k > 0 and tok != tokens[k]:
                k = fail[k - 1]
            if k < length and tok == tokens[k]:
                k += 1
            row[tok] = k
        table.append(row)
    return table


@dataclass
class ConstraintState:
    tokens: tuple[int, ...]
    matched: int = 0
    _table: list[dict[int, int]] = field(default_factory=list, repr=False)

    def __post_init__(self):
        if not self._table:
            self._table = constraint_transition_table(self.tokens)

    @property
    def satisfied(self) -> bool:
        return self.matched == len(self.tokens)

    def advance(self, token: int) -> "ConstraintState":
        new = self._table[self.matched].get(token, 0) if self.tokens else 0
        return ConstraintState(self.tokens, new, self._table)

    def remaining(self) -> tuple[int, ...]:
        return self.tokens[self.matched:]
