"""Planning metrics: micro F1 of the evaluating-turn action/topic, and the
neighbor-expanded (bigram) variant that credits predictions matching the
previous or following system turn as well."""

from __future__ import annotations

from typing import Sequence

from dialplan.corpus.types import ActionTopicPair


def _micro_f1(hits: int, n_pred: int, n_gold: int) -> float:
    if n_pred == 0 or n_gold == 0:
        return 0.0
    precision = hits / n_pred
    recall = hits / n_gold
    if precision + recall == 0:
        return 0.0
    return 2 * precision * recall / (precision + recall)


def action_topic_f1(
    pred: Sequence[ActionTopicPair | None],
    gold: Sequence[ActionTopicPair],
) -> tuple[float, float]:
    """Micro F1 of predicted vs gold action and topic at the evaluating turn.

    Missing predictions count as wrong.
    """
    if len(pred) != len(gold):
        raise ValueError(f"pred/gold length mismatch: {len(pred)} vs {len(gold)}")
    action_hits = sum(
        1 for p, g in zip(pred, gold) if p is not None and p.action == g.action
    )
    topic_hits = sum(
        1 for p, g in zip(pred, gold) if p is not None and p.topic == g.topic
    )
    n = len(gold)
    return _micro_f1(action_hits, n, n), _micro_f1(topic_hits, n, n)


def bigram_f1(
    pred: Sequence[ActionTopicPair | None],
    gold_with_neighbors: Sequence[Sequence[ActionTopicPair]],
) -> tuple[float, float]:
    """Micro F1 where a prediction hits if it matches the gold label of the
    previous, current, or next system turn."""
    if len(pred) != len(gold_with_neighbors):
        raise ValueError("pred/gold length mismatch")
    action_hits = topic_hits = 0
    for p, golds in zip(pred, gold_with_neighbors):
        if not golds:
            raise ValueError("each sample needs at least its own gold label")
        if p is None:
            continue
        if any(p.action == g.action for g in golds):
            action_hits += 1
        if any(p.topic == g.topic for g in golds):
            topic_hits += 1
    n = len(gold_with_neighbors)
    return _micro_f1(action_hits, n, n), _micro_f1(topic_hits, n, n)
