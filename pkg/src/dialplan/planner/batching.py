"""Sample-to-tensor assembly for the planner.

Contexts render as:  [K] profile / knowledge triples ([SEP]-separated)
                     [H] speaker-marked history turns
Targets render as:   [A] action words [T] topic words
Overlength contexts drop oldest history turns first, then knowledge triples,
and the result is flagged.
"""

from __future__ import annotations

from dataclasses import dataclass

import torch
from torch import Tensor

from dialplan.corpus.paths import path_pair_spans, serialize_path
from dialplan.corpus.types import DialogueSample, Direction, Target
from dialplan.errors import ValidationError
from dialplan.vocab import (
    ACTION_MARK,
    HIST_MARK,
    KNOW_MARK,
    SEP,
    SYSTEM_MARK,
    TOPIC_MARK,
    USER_MARK,
    Vocab,
)


def build_planner_context(
    sample: DialogueSample, max_len: int
) -> tuple[list[str], bool]:
    """Context tokens [K; H] with separators; returns (tokens, truncated)."""
    know_chunks: list[list[str]] = []
    profile_words = [
        w for key, value in sample.profile.attributes for w in (key + " " + value).split()
    ]
    if profile_words:
        know_chunks.append(profile_words)
    for triple in sorted(sample.knowledge, key=lambda t: t.as_list()):
        know_chunks.append((" ".join(triple.as_list())).split())
    hist_chunks: list[list[str]] = []
    for turn in sample.history:
        mark = USER_MARK if turn.speaker == "user" else SYSTEM_MARK
        hist_chunks.append([mark, *turn.utterance])

    def total_len(know: list[list[str]], hist: list[list[str]]) -> int:
        n = 2  # [K] and [H] markers
        n += sum(len(c) for c in know) + max(0, len(know) - 1)  # [SEP] between
        n += sum(len(c) for c in hist)
        return n

    truncated = False
    while total_len(know_chunks, hist_chunks) > max_len and hist_chunks:
        hist_chunks.pop(0)  # oldest turn first
        truncated = True
    while total_len(know_chunks, hist_chunks) > max_len and know_chunks:
        know_chunks.pop(0)
        truncated = True

    tokens: list[str] = [KNOW_MARK]
    for i, chunk in enumerate(know_chunks):
        if i:
            tokens.append(SEP)
        tokens.extend(chunk)
    tokens.append(HIST_MARK)
    for chunk in hist_chunks:
        tokens.extend(chunk)
    return tokens[:max_len], truncated


def build_target_tokens(target: Target) -> list[str]:
    return [ACTION_MARK, *target.action.split(), TOPIC_MARK, *target.topic.split()]


def validate_target_tokens(tokens: list[str]) -> None:
    if not tokens or tokens[0] != ACTION_MARK:
        raise ValidationError(f"target tokens must start with {ACTION_MARK}")
    if tokens.count(TOPIC_MARK) != 1:
        raise ValidationError(f"target tokens must contain exactly one {TOPIC_MARK}")


def gold_path_tokens(sample: DialogueSample, direction: Direction) -> list[str]:
    tokens = serialize_path(sample.gold_path.oriented(direction))
    if direction == "backward":
        head = build_target_tokens(sample.target)
        if tokens[: len(head)] != head:
            raise ValidationError(
                "backward serialization must start with the target pair", sample.id
            )
    return tokens


def target_span(tokens: list[str], direction: Direction) -> tuple[int, int]:
    """Token span of the target pair inside a serialized path."""
    spans = path_pair_spans(tokens)
    if not spans:
        raise ValidationError("no pair spans in path tokens")
    return spans[0] if direction == "backward" else spans[-1]


def pad_batch(seqs: list[list[int]], pad_id: int) -> Tensor:
    width = max(len(s) for s in seqs)
    out = torch.full((len(seqs), width), pad_id, dtype=torch.long)
    for i, seq in enumerate(seqs):
        out[i, : len(seq)] = torch.tensor(seq, dtype=torch.long)
    return out


@dataclass
class DecoderBatch:
    """Teacher-forcing tensors for one direction."""

    input_ids: Tensor  # [B,T] = [BOS] + tokens[:-1]
    target_ids: Tensor  # [B,T] = tokens (ends with EOS), pad-filled
    token_mask: Tensor  # [B,T] True at consumed real-token positions (per input row)
    span_mask: Tensor  # [B,T] True at target-pair positions (input-aligned)


def decoder_batch(
    token_seqs: list[list[str]],
    spans: list[tuple[int, int]],
    vocab: Vocab,
) -> DecoderBatch:
    inputs, targets, token_masks, span_masks = [], [], [], []
    for tokens, (s, e) in zip(token_seqs, spans):
        ids = vocab.encode(tokens)
        inputs.append([vocab.bos_id] + ids[:-1])
        targets.append(ids)
        # input position j >= 1 holds token ids[j-1]
        length = len(ids)
        token_masks.append([False] + [True] * (length - 1))
        span_masks.append(
            [False] + [s <= j < e for j in range(length - 1)]
        )
    input_ids = pad_batch(inputs, vocab.pad_id)
    target_ids = pad_batch(targets, vocab.pad_id)
    width = input_ids.shape[1]

    def to_mask(rows: list[list[bool]]) -> Tensor:
        out = torch.zeros((len(rows), width), dtype=torch.bool)
        for i, row in enumerate(rows):
            out[i, : len(row)] = torch.tensor(row)
        return out

    return DecoderBatch(input_ids, target_ids, to_mask(token_masks), to_mask(span_masks))


@dataclass
class PlannerBatch:
    sample_ids: list[str]
    context_ids: Tensor
    context_pad: Tensor
    target_ids: Tensor
    target_pad: Tensor
    backward: DecoderBatch
    forward: DecoderBatch
    truncated: bool


def encode_sample_inputs(
    sample: DialogueSample, vocab: Vocab, max_context_len: int
) -> tuple[list[int], list[int], bool]:
    context_tokens, truncated = build_planner_context(sample, max_context_len)
    target_tokens = build_target_tokens(sample.target)
    validate_target_tokens(target_tokens)
    return vocab.encode(context_tokens), vocab.encode(target_tokens), truncated


def make_planner_batch(
    samples: list[DialogueSample], vocab: Vocab, max_context_len: int
) -> PlannerBatch:
    contexts, targets = [], []
    truncated = False
    bwd_seqs, bwd_spans, fwd_seqs, fwd_spans = [], [], [], []
    for sample in samples:
        ctx, tgt, trunc = encode_sample_inputs(sample, vocab, max_context_len)
        truncated = truncated or trunc
        contexts.append(ctx)
        targets.append(tgt)
        fwd = gold_path_tokens(sample, "forward")
        bwd = gold_path_tokens(sample, "backward")
        fwd_seqs.append(fwd)
        fwd_spans.append(target_span(fwd, "forward"))
        bwd_seqs.append(bwd)
        bwd_spans.append(target_span(bwd, "backward"))
    context_ids = pad_batch(contexts, vocab.pad_id)
    target_ids = pad_batch(targets, vocab.pad_id)
    return PlannerBatch(
        sample_ids=[s.id for s in samples],
        context_ids=context_ids,
        context_pad=context_ids != vocab.pad_id,
        target_ids=target_ids,
        target_pad=target_ids != vocab.pad_id,
        backward=decoder_batch(bwd_seqs, bwd_spans, vocab),
        forward=decoder_batch(fwd_seqs, fwd_spans, vocab),
        truncated=truncated,
    )
