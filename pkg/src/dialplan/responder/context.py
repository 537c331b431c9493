"""Generation context assembly: knowledge, history, then the plan.

Truncation drops the oldest history turns first, then knowledge triples,
and never touches the plan section.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

from dialplan.corpus.paths import serialize_path
from dialplan.corpus.types import KnowledgeTriple, PlanPath, Turn, UserProfile
from dialplan.errors import ValidationError
from dialplan.vocab import (
    HIST_MARK,
    KNOW_MARK,
    PLAN_MARK,
    SEP,
    SYSTEM_MARK,
    USER_MARK,
)


@dataclass(frozen=True)
class GenerationContext:
    tokens: tuple[str, ...]
    truncated: bool
    plan_tokens: tuple[str, ...]


def build_context(
    knowledge: Iterable[KnowledgeTriple],
    history: Sequence[Turn],
    plan: PlanPath,
    profile: UserProfile | None = None,
    max_len: int = 512,
) -> GenerationContext:
    plan_tokens = serialize_path(plan.oriented("forward"))
    know_chunks: list[list[str]] = []
    if profile:
        know_chunks.append(
            [w for k, v in profile.attributes for w in (k + " " + v).split()]
        )
    for triple in sorted(knowledge, key=lambda t: t.as_list()):
        know_chunks.append((" ".join(triple.as_list())).split())
    hist_chunks = [
        [USER_MARK if t.speaker == "user" else SYSTEM_MARK, *t.utterance]
        for t in history
    ]

    def total(know: list[list[str]], hist: list[list[str]]) -> int:
        n = 3 + len(plan_tokens)  # [K] [H] [P] markers + plan
        n += sum(len(c) for c in know) + max(0, len(know) - 1)
        n += sum(len(c) for c in hist)
        return n

    truncated = False
    while total(know_chunks, hist_chunks) > max_len and hist_chunks:
        hist_chunks.pop(0)
        truncated = True
    while total(know_chunks, hist_chunks) > max_len and know_chunks:
        know_chunks.pop(0)
        truncated = True
    if total(know_chunks, hist_chunks) > max_len:
        raise ValidationError(f"plan section alone exceeds max context {max_len}")

    tokens: list[str] = [KNOW_MARK]
    for i, chunk in enumerate(know_chunks):
        if i:
            tokens.append(SEP)
        tokens.extend(chunk)
    tokens.append(HIST_MARK)
    for chunk in hist_chunks:
        tokens.extend(chunk)
    tokens.append(PLAN_MARK)
    tokens.extend(plan_tokens)
    return GenerationContext(tuple(tokens), truncated, tuple(plan_tokens))


def strip_plan_section(context: GenerationContext) -> tuple[str, ...]:
    """Context without its plan section, for the no-plan baseline."""
    tokens = list(context.tokens)
    cut = tokens.index(PLAN_MARK)
    return tuple(tokens[:cut])
