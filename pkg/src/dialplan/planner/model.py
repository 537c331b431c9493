"""The bidirectional path planner network.

Two encoders (context, target) feed a concatenated memory to two path
decoders (backward: target-to-present, forward: present-to-target). A shared
ReLU projection + masked average pooling turns hidden states into fixed-size
path representations used by the gap loss, the contrastive loss, and the
decoding-time agreement reward.
"""

from __future__ import annotations

from dataclasses import dataclass

import torch
import torch.nn.functional as F
from torch import Tensor, nn

from dialplan.corpus.types import Direction
from dialplan.errors import ValidationError
from dialplan.planner.config import ModelConfig
from dialplan.planner.nn import DecoderCache, TransformerDecoder, TransformerEncoder
from dialplan.vocab import ACTION_MARK, TOPIC_MARK, Vocab


@dataclass
class EncoderStates:
    """Concatenated [context; target] token representations."""

    memory: Tensor  # [B, Lc+Lt, d]
    memory_pad: Tensor  # [B, Lc+Lt] True = real token
    target_states: Tensor  # [B, Lt, d]
    target_pad: Tensor  # [B, Lt]
    context_length: int
    target_length: int


@dataclass
class DecoderOutput:
    hidden: Tensor  # [B, T, d] input-aligned states
    logits: Tensor  # [B, T, V] predicting the next token at each position
    direction: Direction
    cache: DecoderCache | None = None


class BidirectionalPlanner(nn.Module):
    def __init__(self, config: ModelConfig, vocab: Vocab):
        super().__init__()
        config.validate()
        if config.vocab_size == 0:
            config.vocab_size = len(vocab)
        if config.vocab_size != len(vocab):
            raise ValidationError(
                f"config vocab_size {config.vocab_size} != vocabulary {len(vocab)}"
            )
        self.config = config
        self.vocab = vocab
        d = config.hidden_size
        enc_args = dict(
            vocab_size=config.vocab_size,
            d=d,
            layers=config.encoder_layers,
            heads=config.encoder_heads,
            ffn=config.ffn_size,
            dropout=config.dropout,
            pad_id=vocab.pad_id,
        )
        self.context_encoder = TransformerEncoder(
            max_pos=config.max_context_len, **enc_args
        )
        self.target_encoder = TransformerEncoder(
            max_pos=config.max_target_len, **enc_args
        )
        tied_rows = (vocab.id(ACTION_MARK), vocab.id(TOPIC_MARK))
        dec_args = dict(
            vocab_size=config.vocab_size,
            d=d,
            layers=config.decoder_layers,
            heads=config.decoder_heads,
            ffn=config.ffn_size,
            max_pos=config.max_path_len,
            dropout=config.dropout,
            pad_id=vocab.pad_id,
            cross_attention=True,
            tied_rows=tied_rows,
            tied_source=self.target_encoder.tok,
        )
        self.decoder_backward = (
            TransformerDecoder(**dec_args) if config.use_backward else None
        )
        self.decoder_forward = (
            TransformerDecoder(**dec_args) if config.use_forward else None
        )
        # one initial draw for every token table: encoders and decoders
        # start in an aligned embedding space (and diverge freely), which
        # lets pointer-style copying of target/knowledge tokens form early
        with torch.no_grad():
            seed_table = self.target_encoder.tok.weight
            self.context_encoder.tok.weight.copy_(seed_table)
            for dec in (self.decoder_backward, self.decoder_forward):
                if dec is not None:
                    dec.tok.weight.copy_(seed_table)
        # shared projection for all path/target representations (gap loss
        # and agreement compare representations in one space)
        self.repr_proj = nn.Linear(d, d)
        if config.pretrained_encoder_path:
            self.load_pretrained_encoders(config.pretrained_encoder_path)

    # -- encoding --

    def encode(
        self,
        context_ids: Tensor,
        target_ids: Tensor,
        context_pad: Tensor | None = None,
        target_pad: Tensor | None = None,
    ) -> EncoderStates:
        if context_ids.dim() == 1:
            context_ids = context_ids.unsqueeze(0)
            target_ids = target_ids.unsqueeze(0)
        pad_id = self.vocab.pad_id
        if context_pad is None:
            context_pad = context_ids != pad_id
        if target_pad is None:
            target_pad = target_ids != pad_id
        h_context = self.context_encoder(context_ids, context_pad)
        h_target = self.target_encoder(target_ids, target_pad)
        memory = torch.cat([h_context, h_target], dim=1)
        memory_pad = torch.cat([context_pad, target_pad], dim=1)
        return EncoderStates(
            memory=memory,
            memory_pad=memory_pad,
            target_states=h_target,
            target_pad=target_pad,
            context_length=context_ids.shape[1],
            target_length=target_ids.shape[1],
        )

    # -- decoding --

    def decoder(self, direction: Direction) -> TransformerDecoder:
        if direction not in ("backward", "forward"):
            raise ValidationError(f"unknown direction {direction!r}")
        dec = (
            self.decoder_backward if direction == "backward" else self.decoder_forward
        )
        if dec is None:
            raise ValidationError(f"{direction} decoder is disabled in this model")
        return dec

    def decode(
        self,
        direction: Direction,
        input_ids: Tensor,
        states: EncoderStates,
        cache: DecoderCache | None = None,
        use_cache: bool = False,
    ) -> DecoderOutput:
        """Teacher-forced pass (or incremental step when cache is used)."""
        if input_ids.dim() == 1:
            input_ids = input_ids.unsqueeze(0)
        hidden, logits, new_cache = self.decoder(direction)(
            input_ids,
            memory=states.memory,
            memory_pad=states.memory_pad,
            cache=cache,
            use_cache=use_cache,
        )
        return DecoderOutput(hidden, logits, direction, new_cache)

    # -- representations --

    def path_repr(self, hidden: Tensor, mask: Tensor | None = None) -> Tensor:
        """Masked average of ReLU(W1 h + b1) over positions.

        hidden [B,T,d] (or [T,d]); mask [B,T] True = pooled position.
        """
        squeeze = hidden.dim() == 2
        if squeeze:
            hidden = hidden.unsqueeze(0)
            mask = mask.unsqueeze(0) if mask is not None else None
        v = F.relu(self.repr_proj(hidden))
        if mask is None:
            pooled = v.mean(dim=1)
        else:
            weights = mask.to(v.dtype)
            denom = weights.sum(dim=1, keepdim=True).clamp(min=1.0)
            pooled = (v * weights.unsqueeze(-1)).sum(dim=1) / denom
        return pooled.squeeze(0) if squeeze else pooled

    def encoder_target_repr(self, states: EncoderStates) -> Tensor:
        """Pooled representation of the whole encoded target sequence."""
        return self.path_repr(states.target_states, states.target_pad)

    def load_pretrained_encoders(self, path: str) -> None:
        payload = torch.load(path, map_location="cpu", weights_only=True)
        self.context_encoder.load_state_dict(payload["context_encoder"])
        self.target_encoder.load_state_dict(payload["target_encoder"])
