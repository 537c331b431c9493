"""End-to-end path planning for one sample.

Runs the constrained searches on both decoders, rescores with the agreement
reward, parses the winning token sequence, and returns the plan in
present-to-target orientation with full diagnostics.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from dialplan.corpus.paths import parse_path, serialize_path
from dialplan.corpus.types import DialogueSample, PlanPath
from dialplan.decoding.agreement import agreement_select
from dialplan.decoding.beam import (
    BeamCandidate,
    DecodeConfig,
    PlannerStepDecoder,
    dba_beam_search,
    prefix_beam_search,
)
from dialplan.errors import ParseError
from dialplan.planner.batching import build_target_tokens, encode_sample_inputs
from dialplan.planner.model import BidirectionalPlanner

import torch


@dataclass
class PlanResult:
    sample_id: str
    path: PlanPath  # forward orientation (present to target)
    forced: bool
    fallback_minimal: bool = False
    chosen_side: str = "backward"
    chosen_index: int = 0
    diagnostics: dict = field(default_factory=dict)

    def as_record(self) -> dict:
        scores = self.diagnostics.get("scores", [])
        chosen = scores[self.chosen_index] if scores else {}
        return {
            "sample_id": self.sample_id,
            "plan": [[p.action, p.topic] for p in self.path.pairs],
            "scores": {
                "loglik": chosen.get("loglik", 0.0),
                "agreement": chosen.get("agreement", 0.0),
                "total": chosen.get("total", 0.0),
            },
            "forced": self.forced,
        }


def _cand_summary(cands: list[BeamCandidate], model: BidirectionalPlanner) -> list[dict]:
    return [
        {
            "tokens": model.vocab.decode(c.tokens),
            "log_prob": c.log_prob,
            "normalized": c.normalized_log_prob(),
            "forced": c.forced,
        }
        for c in cands
    ]


@torch.no_grad()
def plan(
    sample: DialogueSample,
    model: BidirectionalPlanner,
    cfg: DecodeConfig,
) -> PlanResult:
    model.eval()
    vocab = model.vocab
    context_ids, target_ids, truncated = encode_sample_inputs(
        sample, vocab, model.config.max_context_len
    )
    states = model.encode(
        torch.tensor([context_ids], dtype=torch.long),
        torch.tensor([target_ids], dtype=torch.long),
    )
    constraint = tuple(vocab.encode(build_target_tokens(sample.target)))

    has_backward = model.config.use_backward
    has_forward = model.config.use_forward
    backward_cands: list[BeamCandidate] = []
    forward_cands: list[BeamCandidate] = []

    if has_backward:
        dec_b = PlannerStepDecoder(model, "backward", states)
        if cfg.use_constraints:
            backward_cands = prefix_beam_search(dec_b, constraint, cfg)
        else:
            backward_cands = dba_beam_search(dec_b, (), cfg)
    if has_forward:
        dec_f = PlannerStepDecoder(model, "forward", states)
        forward_cands = dba_beam_search(
            dec_f, constraint if cfg.use_constraints else (), cfg
        )

    select_side = cfg.select_side
    if select_side == "backward" and not has_backward:
        select_side = "forward"
    if select_side == "forward" and not has_forward:
        select_side = "backward"
    primary = backward_cands if select_side == "backward" else forward_cands
    other = forward_cands if select_side == "backward" else backward_cands

    use_agreement = cfg.use_agreement and has_backward and has_forward and other
    diagnostics: dict = {
        "backward_candidates": _cand_summary(backward_cands, model),
        "forward_candidates": _cand_summary(forward_cands, model),
        "truncated_context": truncated,
        "select_side": select_side,
    }
    if use_agreement:
        chosen, scores = agreement_select(
            backward_cands,
            forward_cands,
            model,
            states,
            cfg.agreement_weight,
            select_side,
        )
        diagnostics["scores"] = scores
    else:
        logliks = [c.normalized_log_prob() for c in primary]
        chosen = max(range(len(logliks)), key=lambda i: (logliks[i], -i))
        diagnostics["scores"] = [
            {"loglik": ll, "total": ll} for ll in logliks
        ]

    # parse the winner; fall back through the remaining candidates by rank
    target_pair = (sample.target.action, sample.target.topic)
    order = [chosen] + [i for i in range(len(primary)) if i != chosen]
    for idx in order:
        cand = primary[idx]
        try:
            parsed = parse_path(vocab.decode(cand.tokens), direction=select_side)
        except ParseError:
            continue
        if cfg.use_constraints:
            anchor = parsed.pairs[0] if select_side == "backward" else parsed.pairs[-1]
            if (anchor.action, anchor.topic) != target_pair:
                continue  # free continuation bled into the forced pair
        path = parsed.oriented("forward")
        return PlanResult(
            sample_id=sample.id,
            path=path,
            forced=cand.forced,
            chosen_side=select_side,
            chosen_index=idx,
            diagnostics=diagnostics,
        )

    # nothing parseable: minimal plan holding only the target pair
    minimal = PlanPath((sample.target.as_pair(),), "forward")
    diagnostics["fallback"] = "minimal"
    return PlanResult(
        sample_id=sample.id,
        path=minimal,
        forced=True,
        fallback_minimal=True,
        chosen_side=select_side,
        chosen_index=0,
        diagnostics=diagnostics,
    )
