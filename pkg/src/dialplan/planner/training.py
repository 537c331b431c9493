"""Planner training loop, checkpointing, and the per-step loss computation."""

from __future__ import annotations

import json
import random
from pathlib import Path

import torch
from torch import Tensor
from torch.optim.lr_scheduler import LambdaLR

from dialplan.corpus.io import CorpusVocabs
from dialplan.corpus.types import DialogueSample, Direction
from dialplan.errors import ValidationError
from dialplan.planner.batching import (
    DecoderBatch,
    decoder_batch,
    gold_path_tokens,
    make_planner_batch,
    target_span,
)
from dialplan.planner.config import ModelConfig, TrainConfig
from dialplan.planner.losses import LossBundle, contrastive_loss, gap_loss, nll_loss
from dialplan.planner.model import BidirectionalPlanner, EncoderStates
from dialplan.planner.negatives import sample_negatives


def _negative_batch(
    samples: list[DialogueSample],
    direction: Direction,
    k_neg: int,
    seed: int,
    topic_vocab: tuple[str, ...],
    vocab,
) -> DecoderBatch:
    seqs, spans = [], []
    for i, sample in enumerate(samples):
        gold = gold_path_tokens(sample, direction)
        negs = sample_negatives(
            gold, sample.target, sample.knowledge, k_neg,
            seed=seed * 10007 + i, topic_vocab=topic_vocab,
        )
        for neg in negs.sequences:
            seqs.append(neg)
            spans.append(target_span(neg, direction))
    return decoder_batch(seqs, spans, vocab)


def _direction_terms(
    model: BidirectionalPlanner,
    direction: Direction,
    batch: DecoderBatch,
    states: EncoderStates,
    neg: DecoderBatch,
    k_neg: int,
) -> tuple[Tensor, Tensor, Tensor, Tensor]:
    """(nll, path_repr [B,d], pos_repr [B,d], neg_reprs [B,K,d])."""
    out = model.decode(direction, batch.input_ids, states)
    nll = nll_loss(out.logits, batch.target_ids, model.vocab.pad_id)
    h_path = model.path_repr(out.hidden, batch.token_mask)
    h_pos = model.path_repr(out.hidden, batch.span_mask)

    b = batch.input_ids.shape[0]
    expand = torch.arange(b, device=states.memory.device).repeat_interleave(k_neg)
    neg_states = EncoderStates(
        memory=states.memory.index_select(0, expand),
        memory_pad=states.memory_pad.index_select(0, expand),
        target_states=states.target_states.index_select(0, expand),
        target_pad=states.target_pad.index_select(0, expand),
        context_length=states.context_length,
        target_length=states.target_length,
    )
    neg_out = model.decode(direction, neg.input_ids, neg_states)
    h_neg = model.path_repr(neg_out.hidden, neg.span_mask)
    return nll, h_path, h_pos, h_neg.view(b, k_neg, -1)


def compute_losses(
    model: BidirectionalPlanner,
    samples: list[DialogueSample],
    vocabs: CorpusVocabs,
    seed: int,
) -> tuple[Tensor, LossBundle]:
    cfg = model.config
    batch = make_planner_batch(samples, model.vocab, cfg.max_context_len)
    states = model.encode(
        batch.context_ids, batch.target_ids, batch.context_pad, batch.target_pad
    )
    h_enc = model.encoder_target_repr(states)
    topic_vocab = vocabs.topics.tokens

    zero = torch.zeros((), device=states.memory.device)
    nll_b = nll_f = zero
    cl_terms: list[Tensor] = []
    h_path_b = h_path_f = None
    if cfg.use_backward:
        neg_b = _negative_batch(
            samples, "backward", cfg.num_negatives, seed, topic_vocab, model.vocab
        )
        nll_b, h_path_b, h_pos_b, h_negs_b = _direction_terms(
            model, "backward", batch.backward, states, neg_b, cfg.num_negatives
        )
        cl_terms.append(contrastive_loss(h_enc, h_pos_b, h_negs_b, cfg.temperature))
    if cfg.use_forward:
        neg_f = _negative_batch(
            samples, "forward", cfg.num_negatives, seed + 1, topic_vocab, model.vocab
        )
        nll_f, h_path_f, h_pos_f, h_negs_f = _direction_terms(
            model, "forward", batch.forward, states, neg_f, cfg.num_negatives
        )
        cl_terms.append(contrastive_loss(h_enc, h_pos_f, h_negs_f, cfg.temperature))

    gap = (
        gap_loss(h_path_b, h_path_f)
        if (h_path_b is not None and h_path_f is not None)
        else zero
    )
    cl = torch.stack(cl_terms).mean() if cl_terms else zero
    total = nll_b + nll_f + cfg.gap_weight * gap + cfg.contrastive_weight * cl
    bundle = LossBundle(
        nll_backward=float(nll_b.detach()),
        nll_forward=float(nll_f.detach()),
        gap=float(gap.detach()),
        contrastive=float(cl.detach()),
        gap_weight=cfg.gap_weight,
        contrastive_weight=cfg.contrastive_weight,
    )
    return total, bundle


def training_step(
    model: BidirectionalPlanner,
    samples: list[DialogueSample],
    vocabs: CorpusVocabs,
    optimizer: torch.optim.Optimizer,
    scheduler,
    seed: int,
) -> LossBundle:
    model.train()
    total, bundle = compute_losses(model, samples, vocabs, seed)
    if not torch.isfinite(total):
        raise RuntimeError(
            f"non-finite loss {float(total)} on batch {[s.id for s in samples]}"
        )
    optimizer.zero_grad()
    total.backward()
    optimizer.step()
    if scheduler is not None:
        scheduler.step()
    bundle.check_identity()
    return bundle


def warmup_linear(optimizer, warmup_steps: int, total_steps: int) -> LambdaLR:
    def factor(step: int) -> float:
        s = step + 1
        if s <= warmup_steps:
            return s / max(1, warmup_steps)
        return max(0.0, (total_steps - s) / max(1, total_steps - warmup_steps))

    return LambdaLR(optimizer, factor)


def train_planner(
    samples: list[DialogueSample],
    vocabs: CorpusVocabs,
    model_cfg: ModelConfig,
    train_cfg: TrainConfig,
    log_path: str | Path | None = None,
) -> tuple[BidirectionalPlanner, list[LossBundle]]:
    train_cfg.validate()
    torch.manual_seed(train_cfg.seed)
    model = BidirectionalPlanner(model_cfg, vocabs.words)
    optimizer = torch.optim.Adam(model.parameters(), lr=train_cfg.lr)
    scheduler = warmup_linear(optimizer, train_cfg.warmup_steps, train_cfg.train_steps)
    rng = random.Random(train_cfg.seed)

    order: list[int] = []
    history: list[LossBundle] = []
    log_fh = open(log_path, "w", encoding="utf-8") if log_path else None
    try:
        for step in range(train_cfg.train_steps):
            if len(order) < train_cfg.batch_size:
                fresh = list(range(len(samples)))
                rng.shuffle(fresh)
                order.extend(fresh)
            picks = [samples[order.pop()] for _ in range(train_cfg.batch_size)]
            neg_seed = (
                train_cfg.seed * 65537 + step
                if train_cfg.resample_negatives
                else train_cfg.seed
            )
            bundle = training_step(model, picks, vocabs, optimizer, scheduler, neg_seed)
            history.append(bundle)
            if log_fh and (step % train_cfg.log_every == 0 or step == train_cfg.train_steps - 1):
                log_fh.write(json.dumps({"step": step, **bundle.as_dict()}) + "\n")
    finally:
        if log_fh:
            log_fh.close()
    model.eval()
    return model, history


def save_planner(
    model: BidirectionalPlanner,
    vocabs: CorpusVocabs,
    out_dir: str | Path,
    step: int,
) -> Path:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    torch.save(model.state_dict(), out_dir / "weights.pt")
    model.config.save(out_dir / "config.json")
    meta = {
        "step": step,
        "vocab_hashes": {
            "words": vocabs.words.content_hash(),
            "actions": vocabs.actions.content_hash(),
            "topics": vocabs.topics.content_hash(),
        },
    }
    (out_dir / "meta.json").write_text(json.dumps(meta, indent=1), encoding="utf-8")
    return out_dir


def load_planner(
    ckpt_dir: str | Path, vocabs: CorpusVocabs
) -> tuple[BidirectionalPlanner, int]:
    ckpt_dir = Path(ckpt_dir)
    meta = json.loads((ckpt_dir / "meta.json").read_text(encoding="utf-8"))
    hashes = meta["vocab_hashes"]
    current = {
        "words": vocabs.words.content_hash(),
        "actions": vocabs.actions.content_hash(),
        "topics": vocabs.topics.content_hash(),
    }
    if hashes != current:
        raise ValidationError("checkpoint vocabulary hashes do not match loaded vocabs")
    config = ModelConfig.load(ckpt_dir / "config.json")
    model = BidirectionalPlanner(config, vocabs.words)
    state = torch.load(ckpt_dir / "weights.pt", map_location="cpu", weights_only=True)
    model.load_state_dict(state)
    model.eval()
    return model, meta["step"]
