"""Decoder-only language model with an incremental attention cache."""

from __future__ import annotations

import torch
from torch import Tensor, nn

from dialplan.planner.nn import DecoderCache, TransformerDecoder
from dialplan.responder.config import ResponderConfig
from dialplan.vocab import Vocab


class ResponderLM(nn.Module):
    def __init__(self, config: ResponderConfig, vocab: Vocab):
        super().__init__()
        config.validate()
        if config.vocab_size == 0:
            config.vocab_size = len(vocab)
        self.config = config
        self.vocab = vocab
        self.decoder = TransformerDecoder(
            vocab_size=config.vocab_size,
            d=config.hidden_size,
            layers=config.lm_layers,
            heads=config.lm_heads,
            ffn=config.ffn_size,
            max_pos=config.max_context_len + config.max_gen_len + 2,
            dropout=config.dropout,
            pad_id=vocab.pad_id,
            cross_attention=False,
        )

    @property
    def embedding(self) -> nn.Embedding:
        return self.decoder.tok

    def forward(self, tokens: Tensor) -> tuple[Tensor, Tensor]:
        """Full teacher-forced pass: (hidden [B,T,d], logits [B,T,V])."""
        hidden, logits, _ = self.decoder(tokens)
        return hidden, logits

    def prefill(self, tokens: Tensor) -> tuple[Tensor, Tensor, DecoderCache]:
        """Consume a prompt and return hidden states plus the cache."""
        hidden, logits, cache = self.decoder(tokens, use_cache=True)
        return hidden, logits, cache

    def step(
        self, last_tokens: Tensor, cache: DecoderCache | None
    ) -> tuple[Tensor, Tensor, DecoderCache]:
        """One-token step: (hidden [B,d], logits [B,V], new cache)."""
        if last_tokens.dim() == 1:
            last_tokens = last_tokens.unsqueeze(1)
        hidden, logits, new_cache = self.decoder(
            last_tokens, cache=cache, use_cache=True
        )
        return hidden[:, -1, :], logits[:, -1, :], new_cache

    def token_nll(self, tokens: Tensor, loss_mask: Tensor) -> Tensor:
        """Mean NLL over positions where loss_mask is True (next-token)."""
        _, logits = self.forward(tokens)
        logp = torch.log_softmax(logits[:, :-1, :], dim=-1)
        targets = tokens[:, 1:]
        picked = logp.gather(-1, targets.unsqueeze(-1)).squeeze(-1)
        mask = loss_mask[:, 1:].to(picked.dtype)
        return -(picked * mask).sum() / mask.sum().clamp(min=1.0)
