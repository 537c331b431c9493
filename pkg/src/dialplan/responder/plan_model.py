"""Generative plan re-scorer conditioned on LM hidden vectors.

A lightweight decoder cross-attends to the language model's hidden states
and re-generates the serialized plan; its teacher-forced log-likelihood is
the control signal steering generation toward the plan.
"""

from __future__ import annotations

import torch
import torch.nn.functional as F
from torch import Tensor, nn

from dialplan.planner.nn import TransformerDecoder
from dialplan.responder.config import ResponderConfig
from dialplan.responder.lm import ResponderLM
from dialplan.vocab import Vocab


class PlanModel(nn.Module):
    def __init__(self, config: ResponderConfig, vocab: Vocab, lm: ResponderLM | None = None):
        super().__init__()
        self.config = config
        self.vocab = vocab
        self.decoder = TransformerDecoder(
            vocab_size=config.vocab_size or len(vocab),
            d=config.hidden_size,
            layers=config.plan_layers,
            heads=config.plan_heads,
            ffn=config.ffn_size,
            max_pos=config.max_plan_len,
            dropout=config.dropout,
            pad_id=vocab.pad_id,
            cross_attention=True,
        )
        if lm is not None:
            # warm-start from the LM's token embeddings (copied, not tied)
            self.decoder.tok.weight.data.copy_(lm.embedding.weight.data)

    def forward(
        self, plan_inputs: Tensor, memory: Tensor, memory_mask: Tensor
    ) -> Tensor:
        _, logits, _ = self.decoder(plan_inputs, memory=memory, memory_pad=memory_mask)
        return logits

    def nll(
        self,
        plan_tokens: Tensor,
        memory: Tensor,
        memory_mask: Tensor,
        pad_id: int,
    ) -> Tensor:
        """Mean teacher-forced NLL of the plan tokens."""
        bos = torch.full(
            (plan_tokens.shape[0], 1), self.vocab.bos_id, dtype=torch.long,
            device=plan_tokens.device,
        )
        inputs = torch.cat([bos, plan_tokens[:, :-1]], dim=1)
        logits = self.forward(inputs, memory, memory_mask)
        logp = F.log_softmax(logits, dim=-1)
        picked = logp.gather(-1, plan_tokens.unsqueeze(-1)).squeeze(-1)
        mask = (plan_tokens != pad_id).to(picked.dtype)
        return -(picked * mask).sum() / mask.sum().clamp(min=1.0)


def plan_model_loglik(
    plan_ids: Tensor,
    memory_vectors: Tensor,
    plan_model: PlanModel,
    memory_mask: Tensor | None = None,
) -> Tensor:
    """Summed log-likelihood of re-generating the plan given LM hiddens.

    plan_ids [L]; memory_vectors [T,d] or [1,T,d]; memory_mask [T] selects
    the conditioning vectors (extra masked vectors never change the value).
    """
    if memory_vectors.dim() == 2:
        memory_vectors = memory_vectors.unsqueeze(0)
    if memory_mask is None:
        memory_mask = torch.ones(
            memory_vectors.shape[1], dtype=torch.bool, device=memory_vectors.device
        )
    bos = torch.tensor([plan_model.vocab.bos_id], device=plan_ids.device)
    inputs = torch.cat([bos, plan_ids[:-1]]).unsqueeze(0)
    logits = plan_model(inputs, memory_vectors, memory_mask.unsqueeze(0))
    logp = F.log_softmax(logits[0], dim=-1)
    return logp.gather(-1, plan_ids.unsqueeze(-1)).sum()
