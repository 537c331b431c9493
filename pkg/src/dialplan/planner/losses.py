"""Training losses: token NLL, path-gap distance, contrastive target loss."""

from __future__ import annotations

from dataclasses import dataclass

import torch
import torch.nn.functional as F
from torch import Tensor

COSINE_EPS = 1e-8


def nll_loss(logits: Tensor, targets: Tensor, pad_id: int) -> Tensor:
    """Mean token-level negative log likelihood, padding excluded.

    logits [B,T,V] or [T,V]; targets [B,T] or [T].
    """
    if logits.dim() == 2:
        logits, targets = logits.unsqueeze(0), targets.unsqueeze(0)
    logp = F.log_softmax(logits, dim=-1)
    picked = logp.gather(-1, targets.unsqueeze(-1)).squeeze(-1)
    mask = targets != pad_id
    count = mask.sum().clamp(min=1)
    return -(picked * mask).sum() / count


def gap_loss(h_backward: Tensor, h_forward: Tensor) -> Tensor:
    """Euclidean distance between pooled path representations.

    [d] -> scalar; [B,d] -> batch mean of per-sample distances.
    """
    if h_backward.shape != h_forward.shape:
        raise ValueError(
            f"shape mismatch: {tuple(h_backward.shape)} vs {tuple(h_forward.shape)}"
        )
    diff = h_backward - h_forward
    if diff.dim() == 1:
        return torch.linalg.vector_norm(diff)
    return torch.linalg.vector_norm(diff, dim=-1).mean()


def cosine_similarity(a: Tensor, b: Tensor) -> Tensor:
    """Cosine similarity along the last dim; zero-norm vectors score 0."""
    denom = (
        torch.linalg.vector_norm(a, dim=-1) * torch.linalg.vector_norm(b, dim=-1)
    ).clamp(min=COSINE_EPS)
    return (a * b).sum(dim=-1) / denom


def contrastive_loss(
    h_enc: Tensor,
    h_pos: Tensor,
    h_negs: Tensor,
    temperature: float,
) -> Tensor:
    """-log softmax of the positive pair among positive + negatives.

    h_enc/h_pos [d] or [B,d]; h_negs [K,d] or [B,K,d]. Returns the batch-mean
    scalar for one decoder direction.
    """
    if temperature <= 0:
        raise ValueError("temperature must be positive")
    if h_enc.dim() == 1:
        h_enc, h_pos, h_negs = h_enc.unsqueeze(0), h_pos.unsqueeze(0), h_negs.unsqueeze(0)
    sim_pos = cosine_similarity(h_enc, h_pos) / temperature  # [B]
    sim_neg = cosine_similarity(h_enc.unsqueeze(1), h_negs) / temperature  # [B,K]
    logits = torch.cat([sim_pos.unsqueeze(1), sim_neg], dim=1)
    return -F.log_softmax(logits, dim=1)[:, 0].mean()


@dataclass
class LossBundle:
    """Per-step loss components as float64 Python floats.

    total is recomputed from the components so the composition identity
    holds to floating-point exactness.
    """

    nll_backward: float
    nll_forward: float
    gap: float
    contrastive: float
    gap_weight: float
    contrastive_weight: float

    @property
    def total(self) -> float:
        return (
            self.nll_backward
            + self.nll_forward
            + self.gap_weight * self.gap
            + self.contrastive_weight * self.contrastive
        )

    def check_identity(self, tol: float = 1e-6) -> None:
        recomposed = (
            self.nll_backward
            + self.nll_forward
            + self.gap_weight * self.gap
            + self.contrastive_weight * self.contrastive
        )
        if abs(self.total - recomposed) > tol:
            raise AssertionError(
                f"loss composition identity violated: {self.total} vs {recomposed}"
            )

    def as_dict(self) -> dict[str, float]:
        return {
            "nll_backward": self.nll_backward,
            "nll_forward": self.nll_forward,
            "gap": self.gap,
            "contrastive": self.contrastive,
            "total": self.total,
        }
