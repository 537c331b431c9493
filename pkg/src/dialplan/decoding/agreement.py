"""Candidate rescoring by cross-direction agreement.

A backward candidate's score is its length-normalized log-likelihood plus a
reward proportional to the negative mean L2 distance between its pooled path
representation and those of the forward candidates. Each candidate is
re-encoded through its own decoder (teacher-forced) to obtain the hidden
states behind the representation.
"""

from __future__ import annotations

import torch

from dialplan.decoding.beam import BeamCandidate
from dialplan.planner.losses import gap_loss
from dialplan.planner.model import BidirectionalPlanner, EncoderStates


@torch.no_grad()
def candidate_repr(
    model: BidirectionalPlanner,
    direction: str,
    token_ids: list[int],
    states: EncoderStates,
) -> torch.Tensor:
    """Pooled path representation of a candidate token sequence."""
    device = states.memory.device
    ids = torch.tensor(token_ids, dtype=torch.long, device=device)
    input_ids = torch.cat(
        [torch.tensor([model.vocab.bos_id], device=device), ids[:-1]]
    ).unsqueeze(0)
    out = model.decode(direction, input_ids, states)
    mask = torch.zeros_like(input_ids, dtype=torch.bool)
    mask[0, 1:] = True  # consumed real tokens; BOS state and EOS excluded
    return model.path_repr(out.hidden, mask)[0]


def agreement_scores(
    primary_reprs: list[torch.Tensor],
    other_reprs: list[torch.Tensor],
    primary_logliks: list[float],
    agreement_weight: float,
) -> list[dict[str, float]]:
    """Per-candidate {loglik, agreement, total} for the rescoring objective."""
    scores = []
    for loglik, h in zip(primary_logliks, primary_reprs):
        if other_reprs:
            dist = sum(float(gap_loss(h, h2)) for h2 in other_reprs) / len(other_reprs)
        else:
            dist = 0.0
        reward = -dist
        scores.append(
            {
                "loglik": loglik,
                "agreement": reward,
                "total": loglik + agreement_weight * reward,
            }
        )
    return scores


def agreement_select(
    backward_cands: list[BeamCandidate],
    forward_cands: list[BeamCandidate],
    model: BidirectionalPlanner,
    states: EncoderStates,
    agreement_weight: float,
    select_side: str = "backward",
) -> tuple[int, list[dict[str, float]]]:
    """Index of the best candidate on `select_side` plus per-candidate scores.

    Ties break toward the lower candidate index (higher beam rank).
    """
    if select_side == "backward":
        primary, other = backward_cands, forward_cands
        primary_dir, other_dir = "backward", "forward"
    else:
        primary, other = forward_cands, backward_cands
        primary_dir, other_dir = "forward", "backward"
    if not primary:
        raise ValueError("no candidates to select from")

    primary_reprs = [
        candidate_repr(model, primary_dir, c.tokens, states) for c in primary
    ]
    other_reprs = [
        candidate_repr(model, other_dir, c.tokens, states) for c in other
    ]
    logliks = [c.normalized_log_prob() for c in primary]
    scores = agreement_scores(primary_reprs, other_reprs, logliks, agreement_weight)
    best = max(range(len(scores)), key=lambda i: (scores[i]["total"], -i))
    return best, scores
