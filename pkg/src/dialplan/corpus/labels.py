"""Pseudo-labeling of knowledge entries evidenced in an utterance.

An entry string is labeled when it appears verbatim in the utterance
(normalized substring) or, for long-text objects, when the word-level
recall of its words against the utterance strictly exceeds the threshold.
"""

from __future__ import annotations

from typing import Iterable, Sequence

from dialplan.corpus.types import KnowledgeTriple
from dialplan.text import normalize
from dialplan.vocab import NULL_TOPIC

LONG_TEXT_MIN_WORDS = 4


def word_recall(entry: str, utterance_words: set[str]) -> float:
    words = normalize(entry).split()
    if not words:
        return 0.0
    hit = sum(1 for w in words if w in utterance_words)
    return hit / len(words)


def knowledge_pseudo_labels(
    utterance: Sequence[str],
    knowledge: Iterable[KnowledgeTriple],
    threshold: float = 0.55,
) -> set[str]:
    """Normalized entry strings from `knowledge` evidenced in `utterance`."""
    text = normalize(" ".join(utterance))
    padded = f" {text} "
    words = set(text.split())
    labels: set[str] = set()
    entries: set[str] = set()
    for triple in knowledge:
        entries.add(triple.subject)
        entries.add(triple.object)
    for entry in entries:
        entry_norm = normalize(entry)
        if not entry_norm or entry_norm == normalize(NULL_TOPIC):
            continue
        if f" {entry_norm} " in padded:
            labels.add(entry_norm)
        elif len(entry_norm.split()) >= LONG_TEXT_MIN_WORDS:
            if word_recall(entry, words) > threshold:
                labels.add(entry_norm)
    return labels
