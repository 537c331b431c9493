"""Prompted and plan-controlled greedy generation.

Controlled generation runs a three-step loop per token: an unmodified
forward pass, a backward pass nudging the cached key/value states along the
normalized gradient of the plan model's log-likelihood, and a recompute of
the perturbed hidden state that emits the next token. The perturbed cache
carries forward into subsequent steps.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import torch
from torch import Tensor

from dialplan.planner.nn import DecoderCache, LayerCache
from dialplan.responder.config import ResponderConfig
from dialplan.responder.context import GenerationContext
from dialplan.responder.lm import ResponderLM
from dialplan.responder.plan_model import PlanModel, plan_model_loglik
from dialplan.vocab import GO


@dataclass
class GenerationResult:
    tokens: list[str]
    flags: dict = field(default_factory=dict)


def _flat_cache(cache: DecoderCache) -> list[Tensor]:
    out: list[Tensor] = []
    for lc in cache.layers:
        out.extend((lc.self_k, lc.self_v))
    return out


def _with_delta(cache: DecoderCache, deltas: list[Tensor]) -> DecoderCache:
    it = iter(deltas)
    layers = [
        LayerCache(lc.self_k + next(it), lc.self_v + next(it)) for lc in cache.layers
    ]
    return DecoderCache(layers, cache.length)


def _global_norm(tensors: list[Tensor]) -> float:
    return float(torch.sqrt(sum(t.pow(2).sum() for t in tensors)))


def _normalized_step(
    deltas: list[Tensor], grads: list[Tensor], alpha: float
) -> tuple[list[Tensor], bool]:
    """delta + alpha * grad / ||grad|| under the global norm; no-op on zeros."""
    norm = _global_norm(grads)
    if alpha == 0.0 or norm == 0.0:
        return [d.detach() for d in deltas], False
    scale = alpha / norm
    return [(d + scale * g).detach() for d, g in zip(deltas, grads)], True


def perturb_cache(
    cache: DecoderCache, grads: list[Tensor], alpha: float
) -> tuple[DecoderCache, bool]:
    """One normalized-gradient cache update from zero: H + alpha * g / ||g||.

    Returns (cache, applied); zero step size or zero-norm gradient leaves
    the cache untouched with applied=False.
    """
    zeros = [torch.zeros_like(t) for t in _flat_cache(cache)]
    deltas, applied = _normalized_step(zeros, grads, alpha)
    if not applied:
        return cache, False
    return _with_delta(cache, deltas), True


@torch.no_grad()
def generate_prompted(context: GenerationContext, lm: ResponderLM) -> GenerationResult:
    """Greedy decoding from the prompt, stopping at the end token or cap."""
    lm.eval()
    vocab = lm.vocab
    ids = torch.tensor(
        [vocab.encode(list(context.tokens)) + [vocab.id(GO)]], dtype=torch.long
    )
    _, logits, cache = lm.prefill(ids)
    last = logits[:, -1, :].argmax(dim=-1)
    out_ids: list[int] = []
    for _ in range(lm.config.max_gen_len):
        token = int(last[0])
        if token == vocab.eos_id:
            break
        out_ids.append(token)
        _, step_logits, cache = lm.step(last, cache)
        last = step_logits.argmax(dim=-1)
    return GenerationResult(vocab.decode(out_ids))


def generate_controlled(
    context: GenerationContext,
    plan_tokens: list[str],
    lm: ResponderLM,
    plan_model: PlanModel,
    cfg: ResponderConfig | None = None,
) -> GenerationResult:
    """Greedy decoding with per-token cache perturbation toward the plan."""
    cfg = cfg or lm.config
    lm.eval()
    plan_model.eval()
    vocab = lm.vocab
    plan_ids = torch.tensor(vocab.encode(plan_tokens), dtype=torch.long)
    prompt = torch.tensor(
        [vocab.encode(list(context.tokens)) + [vocab.id(GO)]], dtype=torch.long
    )
    with torch.no_grad():
        hiddens, logits, cache = lm.prefill(prompt)
    memory_vecs = hiddens[0]  # [T,d] LM hidden vectors consumed so far
    last = logits[:, -1, :].argmax(dim=-1)

    out_ids: list[int] = []
    flags = {"noop_steps": 0, "fallback_steps": 0}
    for _ in range(cfg.max_gen_len):
        token = int(last[0])
        if token == vocab.eos_id:
            break
        out_ids.append(token)

        # step 1: unmodified pass (fallback logits and cache)
        with torch.no_grad():
            unpert_hid, unpert_logits, unpert_cache = lm.step(last, cache)

        # step 2: accumulate normalized-gradient updates on the cache
        deltas = [torch.zeros_like(t) for t in _flat_cache(cache)]
        applied_any = False
        for _ in range(cfg.updates_per_token):
            for d in deltas:
                d.requires_grad_(True)
            hid, _, _ = lm.step(last, _with_delta(cache, deltas))
            loglik = plan_model_loglik(
                plan_ids, torch.cat([memory_vecs, hid], dim=0), plan_model
            )
            grads = list(torch.autograd.grad(loglik, deltas))
            deltas, applied = _normalized_step(deltas, grads, cfg.step_size)
            if applied:
                applied_any = True
            else:
                flags["noop_steps"] += 1

        # step 3: recompute from the perturbed cache and emit greedily
        with torch.no_grad():
            if applied_any:
                hid, pert_logits, new_cache = lm.step(last, _with_delta(cache, deltas))
                if not torch.isfinite(pert_logits).all():
                    flags["fallback_steps"] += 1
                    hid, pert_logits, new_cache = unpert_hid, unpert_logits, unpert_cache
            else:
                hid, pert_logits, new_cache = unpert_hid, unpert_logits, unpert_cache
            memory_vecs = torch.cat([memory_vecs, hid], dim=0)
            cache = new_cache
            last = pert_logits.argmax(dim=-1)

    return GenerationResult(vocab.decode(out_ids), flags)
