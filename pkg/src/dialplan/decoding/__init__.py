"""Target-constrained inference: banked beam search, prefix forcing, agreement."""

from dialplan.decoding.constraints import ConstraintState, constraint_transition_table
from dialplan.decoding.beam import (
    BeamCandidate,
    DecodeConfig,
    dba_beam_search,
    prefix_beam_search,
)
from dialplan.decoding.agreement import agreement_scores, agreement_select
from dialplan.decoding.plan import PlanResult, plan

__all__ = [
    "BeamCandidate",
    "ConstraintState",
    "DecodeConfig",
    "PlanResult",
    "agreement_scores",
    "agreement_select",
    "constraint_transition_table",
    "dba_beam_search",
    "plan",
    "prefix_beam_search",
]
