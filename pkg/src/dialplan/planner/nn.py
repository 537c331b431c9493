"""Transformer building blocks with incremental decoding caches.

Pre-norm layers throughout. The decoder supports both full teacher-forced
passes and single-step expansion against a per-layer key/value cache, which
the beam searches and the responder's cache perturbation rely on.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import torch
import torch.nn.functional as F
from torch import Tensor, nn


def _attend(q: Tensor, k: Tensor, v: Tensor, mask: Tensor | None, dropout_p: float, training: bool) -> Tensor:
    return F.scaled_dot_product_attention(
        q, k, v, attn_mask=mask, dropout_p=dropout_p if training else 0.0
    )


class MultiHeadAttention(nn.Module):
    def __init__(self, d: int, heads: int, dropout: float = 0.0):
        super().__init__()
        if d % heads != 0:
            raise ValueError(f"hidden size {d} not divisible by heads {heads}")
        self.heads = heads
        self.head_dim = d // heads
        self.q_proj = nn.Linear(d, d)
        self.k_proj = nn.Linear(d, d)
        self.v_proj = nn.Linear(d, d)
        self.out_proj = nn.Linear(d, d)
        self.dropout = dropout

    def _split(self, x: Tensor) -> Tensor:
        b, t, _ = x.shape
        return x.view(b, t, self.heads, self.head_dim).transpose(1, 2)

    def _merge(self, x: Tensor) -> Tensor:
        b, h, t, hd = x.shape
        return x.transpose(1, 2).reshape(b, t, h * hd)

    def project_kv(self, key_value: Tensor) -> tuple[Tensor, Tensor]:
        return self._split(self.k_proj(key_value)), self._split(self.v_proj(key_value))

    def forward(
        self,
        query: Tensor,
        k: Tensor,
        v: Tensor,
        mask: Tensor | None = None,
    ) -> Tensor:
        """query [B,Tq,d]; k/v [B,H,Tk,hd]; mask bool [B|1, 1, Tq, Tk], True=attend."""
        q = self._split(self.q_proj(query))
        out = _attend(q, k, v, mask, self.dropout, self.training)
        return self.out_proj(self._merge(out))


class FeedForward(nn.Module):
    def __init__(self, d: int, hidden: int, dropout: float):
        super().__init__()
        self.net = nn.Sequential(
            nn.Linear(d, hidden),
            nn.GELU(),
            nn.Dropout(dropout),
            nn.Linear(hidden, d),
        )

    def forward(self, x: Tensor) -> Tensor:
        return self.net(x)


def causal_mask(t_query: int, t_key: int, device: torch.device) -> Tensor:
    """[1,1,Tq,Tk] bool mask; query i attends keys <= (offset + i)."""
    offset = t_key - t_query
    idx_q = torch.arange(t_query, device=device).unsqueeze(1)
    idx_k = torch.arange(t_key, device=device).unsqueeze(0)
    return (idx_k <= idx_q + offset).unsqueeze(0).unsqueeze(0)


def padding_mask(pad: Tensor) -> Tensor:
    """pad [B,Tk] bool (True = real token) -> [B,1,1,Tk] attend mask."""
    return pad.unsqueeze(1).unsqueeze(2)


class EncoderLayer(nn.Module):
    def __init__(self, d: int, heads: int, ffn: int, dropout: float):
        super().__init__()
        self.attn = MultiHeadAttention(d, heads, dropout)
        self.ffn = FeedForward(d, ffn, dropout)
        self.norm1 = nn.LayerNorm(d)
        self.norm2 = nn.LayerNorm(d)
        self.drop = nn.Dropout(dropout)

    def forward(self, x: Tensor, mask: Tensor | None) -> Tensor:
        h = self.norm1(x)
        k, v = self.attn.project_kv(h)
        x = x + self.drop(self.attn(h, k, v, mask))
        x = x + self.drop(self.ffn(self.norm2(x)))
        return x


class TransformerEncoder(nn.Module):
    """Bidirectional self-attention stack over token + position embeddings."""

    def __init__(
        self,
        vocab_size: int,
        d: int,
        layers: int,
        heads: int,
        ffn: int,
        max_pos: int,
        dropout: float,
        pad_id: int,
    ):
        super().__init__()
        self.tok = nn.Embedding(vocab_size, d)
        self.pos = nn.Embedding(max_pos, d)
        self.layers = nn.ModuleList(
            EncoderLayer(d, heads, ffn, dropout) for _ in range(layers)
        )
        self.norm = nn.LayerNorm(d)
        self.drop = nn.Dropout(dropout)
        self.pad_id = pad_id
        self.max_pos = max_pos
        nn.init.normal_(self.tok.weight, std=0.02)
        nn.init.normal_(self.pos.weight, std=0.02)

    def forward(self, tokens: Tensor, pad: Tensor | None = None) -> Tensor:
        b, t = tokens.shape
        if t > self.max_pos:
            raise ValueError(f"sequence length {t} exceeds maximum {self.max_pos}")
        if pad is None:
            pad = tokens != self.pad_id
        x = self.tok(tokens) + self.pos(torch.arange(t, device=tokens.device))
        x = self.drop(x)
        mask = padding_mask(pad)
        # let pad positions attend themselves so their rows stay finite
        eye = torch.eye(t, dtype=torch.bool, device=tokens.device).view(1, 1, t, t)
        mask = mask | eye
        for layer in self.layers:
            x = layer(x, mask)
        return self.norm(x)


@dataclass
class LayerCache:
    self_k: Tensor
    self_v: Tensor
    cross_k: Tensor | None = None
    cross_v: Tensor | None = None


@dataclass
class DecoderCache:
    layers: list[LayerCache] = field(default_factory=list)
    length: int = 0

    def reorder(self, index: Tensor) -> "DecoderCache":
        """Select/duplicate batch rows, e.g. after beam reranking."""
        new_layers = [
            LayerCache(
                lc.self_k.index_select(0, index),
                lc.self_v.index_select(0, index),
                None if lc.cross_k is None else lc.cross_k.index_select(0, index),
                None if lc.cross_v is None else lc.cross_v.index_select(0, index),
            )
            for lc in self.layers
        ]
        return DecoderCache(new_layers, self.length)


class DecoderLayer(nn.Module):
    def __init__(self, d: int, heads: int, ffn: int, dropout: float, cross: bool):
        super().__init__()
        self.self_attn = MultiHeadAttention(d, heads, dropout)
        self.cross_attn = MultiHeadAttention(d, heads, dropout) if cross else None
        self.ffn = FeedForward(d, ffn, dropout)
        self.norm1 = nn.LayerNorm(d)
        self.norm2 = nn.LayerNorm(d) if cross else None
        self.norm3 = nn.LayerNorm(d)
        self.drop = nn.Dropout(dropout)


class TransformerDecoder(nn.Module):
    """Causal decoder, optionally cross-attending to an encoder memory.

    The embedding table may tie individual rows (e.g. path markers) to an
    external embedding; the output projection shares the effective table.
    """

    def __init__(
        self,
        vocab_size: int,
        d: int,
        layers: int,
        heads: int,
        ffn: int,
        max_pos: int,
        dropout: float,
        pad_id: int,
        cross_attention: bool = True,
        tied_rows: tuple[int, ...] = (),
        tied_source: nn.Embedding | None = None,
    ):
        super().__init__()
        self.tok = nn.Embedding(vocab_size, d)
        self.pos = nn.Embedding(max_pos, d)
        self.layers = nn.ModuleList(
            DecoderLayer(d, heads, ffn, dropout, cross_attention)
            for _ in range(layers)
        )
        self.norm = nn.LayerNorm(d)
        self.drop = nn.Dropout(dropout)
        self.out_bias = nn.Parameter(torch.zeros(vocab_size))
        self.pad_id = pad_id
        self.max_pos = max_pos
        self.cross_attention = cross_attention
        self.tied_source = tied_source
        if tied_rows and tied_source is None:
            raise ValueError("tied_rows requires tied_source")
        self.register_buffer(
            "tied_rows", torch.tensor(tied_rows, dtype=torch.long), persistent=False
        )
        nn.init.normal_(self.tok.weight, std=0.02)
        nn.init.normal_(self.pos.weight, std=0.02)

    def effective_embedding(self) -> Tensor:
        if self.tied_source is None or self.tied_rows.numel() == 0:
            return self.tok.weight
        weight = self.tok.weight.clone()
        weight[self.tied_rows] = self.tied_source.weight[self.tied_rows]
        return weight

    def forward(
        self,
        tokens: Tensor,
        memory: Tensor | None = None,
        memory_pad: Tensor | None = None,
        cache: DecoderCache | None = None,
        use_cache: bool = False,
    ) -> tuple[Tensor, Tensor, DecoderCache | None]:
        """Returns (hidden [B,T,d], logits [B,T,V], cache).

        With `cache`, tokens are the new positions only and attend to all
        cached positions plus themselves.
        """
        b, t = tokens.shape
        offset = cache.length if cache is not None else 0
        if offset + t > self.max_pos:
            raise ValueError(f"sequence length {offset + t} exceeds {self.max_pos}")
        emb = self.effective_embedding()
        x = F.embedding(tokens, emb) + self.pos(
            torch.arange(offset, offset + t, device=tokens.device)
        )
        x = self.drop(x)

        cross_mask = None
        if memory is not None and memory_pad is not None:
            cross_mask = padding_mask(memory_pad)

        new_cache = DecoderCache(length=offset + t) if (use_cache or cache) else None
        for i, layer in enumerate(self.layers):
            h = layer.norm1(x)
            k_new, v_new = layer.self_attn.project_kv(h)
            if cache is not None:
                k_full = torch.cat([cache.layers[i].self_k, k_new], dim=2)
                v_full = torch.cat([cache.layers[i].self_v, v_new], dim=2)
            else:
                k_full, v_full = k_new, v_new
            mask = causal_mask(t, k_full.shape[2], tokens.device)
            x = x + layer.drop(layer.self_attn(h, k_full, v_full, mask))

            cross_k = cross_v = None
            if layer.cross_attn is not None and memory is not None:
                h2 = layer.norm2(x)
                if cache is not None and cache.layers[i].cross_k is not None:
                    cross_k = cache.layers[i].cross_k
                    cross_v = cache.layers[i].cross_v
                else:
                    cross_k, cross_v = layer.cross_attn.project_kv(memory)
                x = x + layer.drop(layer.cross_attn(h2, cross_k, cross_v, cross_mask))

            x = x + layer.drop(layer.ffn(layer.norm3(x)))
            if new_cache is not None:
                new_cache.layers.append(LayerCache(k_full, v_full, cross_k, cross_v))

        hidden = self.norm(x)
        logits = F.linear(hidden, emb, self.out_bias)
        return hidden, logits, new_cache
