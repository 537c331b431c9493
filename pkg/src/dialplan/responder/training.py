"""Joint training of the responder LM and the plan re-scorer."""

from __future__ import annotations

import json
import random
from pathlib import Path

import torch
from torch import Tensor

from dialplan.corpus.io import CorpusVocabs
from dialplan.corpus.types import DialogueSample
from dialplan.errors import ValidationError
from dialplan.planner.batching import pad_batch
from dialplan.planner.config import TrainConfig
from dialplan.planner.training import warmup_linear
from dialplan.responder.config import ResponderConfig
from dialplan.responder.context import build_context, strip_plan_section
from dialplan.responder.lm import ResponderLM
from dialplan.responder.plan_model import PlanModel
from dialplan.vocab import GO, Vocab


def sample_sequence(
    sample: DialogueSample, vocab: Vocab, cfg: ResponderConfig
) -> tuple[list[int], int, list[int]]:
    """(token ids, utterance start offset, plan ids) for one training row."""
    context = build_context(
        sample.knowledge,
        sample.history,
        sample.gold_path,
        sample.profile,
        cfg.max_context_len,
    )
    ctx_tokens = (
        list(context.tokens) if cfg.use_plan_section else list(strip_plan_section(context))
    )
    ids = vocab.encode(ctx_tokens) + [vocab.id(GO)]
    start = len(ids)
    ids += vocab.encode(list(sample.gold_utterance)) + [vocab.eos_id]
    plan_ids = vocab.encode(list(context.plan_tokens))
    return ids, start, plan_ids


def _batch_tensors(
    samples: list[DialogueSample], vocab: Vocab, cfg: ResponderConfig
) -> tuple[Tensor, Tensor, Tensor, Tensor]:
    rows, starts, plans = [], [], []
    for s in samples:
        ids, start, plan_ids = sample_sequence(s, vocab, cfg)
        rows.append(ids)
        starts.append(start)
        plans.append(plan_ids)
    tokens = pad_batch(rows, vocab.pad_id)
    loss_mask = torch.zeros_like(tokens, dtype=torch.bool)
    for i, (ids, start) in enumerate(zip(rows, starts)):
        loss_mask[i, start: len(ids)] = True
    plan_tokens = pad_batch(plans, vocab.pad_id)
    real_mask = tokens != vocab.pad_id
    return tokens, loss_mask, plan_tokens, real_mask


def train_responder(
    samples: list[DialogueSample],
    vocabs: CorpusVocabs,
    cfg: ResponderConfig,
    train_cfg: TrainConfig,
    log_path: str | Path | None = None,
) -> tuple[ResponderLM, PlanModel | None, list[dict]]:
    """Fine-tune the LM on gold utterances given gold plans; jointly train the
    plan model to re-generate the plan from LM hidden vectors.

    With cfg.use_plan_section=False this trains the no-plan baseline (and no
    plan model).
    """
    train_cfg.validate()
    torch.manual_seed(train_cfg.seed)
    vocab = vocabs.words
    lm = ResponderLM(cfg, vocab)
    plan_model = PlanModel(cfg, vocab, lm) if cfg.use_plan_section else None
    params = list(lm.parameters()) + (
        list(plan_model.parameters()) if plan_model else []
    )
    optimizer = torch.optim.Adam(params, lr=train_cfg.lr)
    scheduler = warmup_linear(optimizer, train_cfg.warmup_steps, train_cfg.train_steps)
    rng = random.Random(train_cfg.seed)

    lm.train()
    if plan_model:
        plan_model.train()
    order: list[int] = []
    history: list[dict] = []
    log_fh = open(log_path, "w", encoding="utf-8") if log_path else None
    try:
        for step in range(train_cfg.train_steps):
            if len(order) < train_cfg.batch_size:
                fresh = list(range(len(samples)))
                rng.shuffle(fresh)
                order.extend(fresh)
            picks = [samples[order.pop()] for _ in range(train_cfg.batch_size)]
            tokens, loss_mask, plan_tokens, real_mask = _batch_tensors(
                picks, vocab, cfg
            )
            hidden, logits = lm(tokens)
            logp = torch.log_softmax(logits[:, :-1, :], dim=-1)
            picked = logp.gather(-1, tokens[:, 1:].unsqueeze(-1)).squeeze(-1)
            mask = loss_mask[:, 1:].to(picked.dtype)
            lm_nll = -(picked * mask).sum() / mask.sum().clamp(min=1.0)
            total = lm_nll
            plan_nll_val = 0.0
            if plan_model is not None:
                plan_nll = plan_model.nll(plan_tokens, hidden, real_mask, vocab.pad_id)
                total = lm_nll + plan_nll
                plan_nll_val = float(plan_nll.detach())
            if not torch.isfinite(total):
                raise RuntimeError(
                    f"non-finite loss on batch {[s.id for s in picks]}"
                )
            optimizer.zero_grad()
            total.backward()
            optimizer.step()
            scheduler.step()
            entry = {
                "step": step,
                "lm_nll": float(lm_nll.detach()),
                "plan_nll": plan_nll_val,
                "total": float(total.detach()),
            }
            history.append(entry)
            if log_fh and (step % train_cfg.log_every == 0 or step == train_cfg.train_steps - 1):
                log_fh.write(json.dumps(entry) + "\n")
    finally:
        if log_fh:
            log_fh.close()
    lm.eval()
    if plan_model:
        plan_model.eval()
    return lm, plan_model, history


@torch.no_grad()
def mean_utterance_nll(
    lm: ResponderLM,
    samples: list[DialogueSample],
    vocab: Vocab,
    cfg: ResponderConfig,
    batch_size: int = 16,
) -> float:
    """Mean per-token NLL of gold utterances given their contexts."""
    lm.eval()
    total, count = 0.0, 0
    for i in range(0, len(samples), batch_size):
        chunk = samples[i: i + batch_size]
        tokens, loss_mask, _, _ = _batch_tensors(chunk, vocab, cfg)
        _, logits = lm(tokens)
        logp = torch.log_softmax(logits[:, :-1, :], dim=-1)
        picked = logp.gather(-1, tokens[:, 1:].unsqueeze(-1)).squeeze(-1)
        mask = loss_mask[:, 1:]
        total += float(-(picked * mask).sum())
        count += int(mask.sum())
    return total / max(1, count)


def save_responder(
    lm: ResponderLM,
    plan_model: PlanModel | None,
    vocabs: CorpusVocabs,
    out_dir: str | Path,
    step: int,
) -> Path:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    torch.save(lm.state_dict(), out_dir / "lm.pt")
    if plan_model is not None:
        torch.save(plan_model.state_dict(), out_dir / "plan_model.pt")
    lm.config.save(out_dir / "config.json")
    meta = {
        "step": step,
        "has_plan_model": plan_model is not None,
        "vocab_hashes": {"words": vocabs.words.content_hash()},
    }
    (out_dir / "meta.json").write_text(json.dumps(meta, indent=1), encoding="utf-8")
    return out_dir


def load_responder(
    ckpt_dir: str | Path, vocabs: CorpusVocabs
) -> tuple[ResponderLM, PlanModel | None]:
    ckpt_dir = Path(ckpt_dir)
    meta = json.loads((ckpt_dir / "meta.json").read_text(encoding="utf-8"))
    if meta["vocab_hashes"]["words"] != vocabs.words.content_hash():
        raise ValidationError("checkpoint vocabulary hash does not match loaded vocab")
    cfg = ResponderConfig.load(ckpt_dir / "config.json")
    lm = ResponderLM(cfg, vocabs.words)
    lm.load_state_dict(
        torch.load(ckpt_dir / "lm.pt", map_location="cpu", weights_only=True)
    )
    lm.eval()
    plan_model = None
    if meta.get("has_plan_model"):
        plan_model = PlanModel(cfg, vocabs.words)
        plan_model.load_state_dict(
            torch.load(ckpt_dir / "plan_model.pt", map_location="cpu", weights_only=True)
        )
        plan_model.eval()
    return lm, plan_model
