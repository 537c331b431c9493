"""Utterance-level metrics: word F1, BLEU, distinct-n, knowledge F1,
goal success rate, perplexity."""

from __future__ import annotations

import math
from collections import Counter
from typing import Iterable, Sequence

from dialplan.corpus.labels import knowledge_pseudo_labels
from dialplan.corpus.types import KnowledgeTriple
from dialplan.text import normalize


def word_f1(hyp: Sequence[str], ref: Sequence[str]) -> float:
    """Harmonic mean of multiset word precision/recall for one pair."""
    if not hyp or not ref:
        return 0.0
    hyp_counts = Counter(hyp)
    ref_counts = Counter(ref)
    overlap = sum((hyp_counts & ref_counts).values())
    if overlap == 0:
        return 0.0
    precision = overlap / len(hyp)
    recall = overlap / len(ref)
    return 2 * precision * recall / (precision + recall)


def corpus_word_f1(hyps: Sequence[Sequence[str]], refs: Sequence[Sequence[str]]) -> float:
    if len(hyps) != len(refs):
        raise ValueError("hyps/refs length mismatch")
    if not hyps:
        return 0.0
    return sum(word_f1(h, r) for h, r in zip(hyps, refs)) / len(hyps)


def _ngrams(tokens: Sequence[str], n: int) -> list[tuple[str, ...]]:
    return [tuple(tokens[i: i + n]) for i in range(len(tokens) - n + 1)]


def bleu_n(
    hyps: Sequence[Sequence[str]],
    refs: Sequence[Sequence[str]],
    n: int,
) -> float:
    """Corpus-level BLEU-n: geometric mean of clipped 1..n-gram precision
    with brevity penalty; zero counts get add-one smoothing."""
    if n not in (1, 2):
        raise ValueError("bleu_n supports n in {1, 2}")
    if len(hyps) != len(refs):
        raise ValueError("hyps/refs length mismatch")
    clipped = [0] * n
    totals = [0] * n
    hyp_len = ref_len = 0
    for hyp, ref in zip(hyps, refs):
        hyp_len += len(hyp)
        ref_len += len(ref)
        for order in range(1, n + 1):
            hyp_counts = Counter(_ngrams(hyp, order))
            ref_counts = Counter(_ngrams(ref, order))
            totals[order - 1] += sum(hyp_counts.values())
            clipped[order - 1] += sum(
                min(c, ref_counts[g]) for g, c in hyp_counts.items()
            )
    precisions = []
    for c, t in zip(clipped, totals):
        if t == 0:
            return 0.0
        if c == 0:
            c, t = c + 1, t + 1  # smoothing for tiny corpora
        precisions.append(c / t)
    log_mean = sum(math.log(p) for p in precisions) / n
    bp = 1.0 if hyp_len > ref_len else math.exp(1 - ref_len / max(1, hyp_len))
    return bp * math.exp(log_mean)


def dist_n(hyps: Sequence[Sequence[str]], n: int) -> float:
    """Distinct n-grams over total n-grams across the whole corpus."""
    total = 0
    distinct: set[tuple[str, ...]] = set()
    for hyp in hyps:
        grams = _ngrams(hyp, n)
        total += len(grams)
        distinct.update(grams)
    return len(distinct) / total if total else 0.0


def knowledge_f1(
    hyps: Sequence[Sequence[str]],
    gold_labels: Sequence[set[str]],
    knowledge_sets: Sequence[Iterable[KnowledgeTriple]],
    threshold: float = 0.55,
) -> float:
    """Micro F1 between knowledge entries evidenced in hypotheses and the
    pseudo labels precomputed on gold utterances."""
    if not (len(hyps) == len(gold_labels) == len(knowledge_sets)):
        raise ValueError("length mismatch")
    tp = fp = fn = 0
    for hyp, gold, knowledge in zip(hyps, gold_labels, knowledge_sets):
        hyp_labels = knowledge_pseudo_labels(hyp, knowledge, threshold)
        tp += len(hyp_labels & gold)
        fp += len(hyp_labels - gold)
        fn += len(gold - hyp_labels)
    if tp == 0:
        return 0.0
    precision = tp / (tp + fp)
    recall = tp / (tp + fn)
    return 2 * precision * recall / (precision + recall)


def goal_success(hyps: Sequence[Sequence[str]], target_topics: Sequence[str]) -> float:
    """Fraction of target-turn hypotheses containing the target topic verbatim."""
    if len(hyps) != len(target_topics):
        raise ValueError("length mismatch")
    if not hyps:
        return 0.0
    hits = 0
    for hyp, topic in zip(hyps, target_topics):
        text = f" {normalize(' '.join(hyp))} "
        if f" {normalize(topic)} " in text:
            hits += 1
    return hits / len(hyps)


def perplexity_from_nll(mean_nll: float) -> float:
    return math.exp(mean_nll)


def perplexity(lm, samples, vocab, cfg) -> float:
    """exp(mean token NLL) of reference utterances under the responder LM."""
    from dialplan.responder.training import mean_utterance_nll

    return perplexity_from_nll(mean_utterance_nll(lm, samples, vocab, cfg))
