"""Perturbed-path negatives for the contrastive target loss.

Each negative is the gold path with only the target pair's topic substituted
by a different topic drawn from the sample's knowledge set.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from typing import Iterable, Sequence

from dialplan.corpus.paths import parse_path, serialize_path
from dialplan.corpus.types import ActionTopicPair, KnowledgeTriple, PlanPath, Target
from dialplan.errors import ValidationError
from dialplan.vocab import NULL_TOPIC


@dataclass
class NegativeSet:
    sequences: list[list[str]]
    replacements: list[str]
    with_replacement: bool  # true when distinct candidate topics ran out


def candidate_topics(
    knowledge: Iterable[KnowledgeTriple],
    topic_vocab: Sequence[str] | None = None,
) -> list[str]:
    """Topic strings mentioned in the knowledge set, NULL excluded."""
    seen: set[str] = set()
    for triple in knowledge:
        seen.add(triple.subject)
        seen.add(triple.object)
    if topic_vocab is not None:
        allowed = set(topic_vocab)
        seen = {t for t in seen if t in allowed}
    seen.discard(NULL_TOPIC)
    return sorted(seen)


def sample_negatives(
    gold_path_tokens: list[str],
    target: Target,
    knowledge: Iterable[KnowledgeTriple],
    k_neg: int,
    seed: int,
    topic_vocab: Sequence[str] | None = None,
) -> NegativeSet:
    path = parse_path(gold_path_tokens)
    target_pair = (target.action, target.topic)
    if not any((p.action, p.topic) == target_pair for p in path.pairs):
        raise ValidationError(f"target pair {target_pair} not found in gold path")

    pool = [t for t in candidate_topics(knowledge, topic_vocab) if t != target.topic]
    if not pool:
        raise ValidationError("knowledge has no alternative topics for negatives")
    rng = random.Random(seed)
    with_replacement = len(pool) < k_neg
    if with_replacement:
        picks = [rng.choice(pool) for _ in range(k_neg)]
    else:
        picks = rng.sample(pool, k_neg)

    sequences = []
    for substitute in picks:
        pairs = tuple(
            ActionTopicPair(p.action, substitute)
            if (p.action, p.topic) == target_pair
            else p
            for p in path.pairs
        )
        sequences.append(serialize_path(PlanPath(pairs, path.direction)))
    return NegativeSet(sequences, picks, with_replacement)
