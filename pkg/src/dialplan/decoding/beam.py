"""Beam searches: banked lexically-constrained (forward) and prefix-forced
(backward), plus the vanilla search both reduce to.

Bank policy for the constrained search: beam slots are divided over banks
indexed by matched constraint tokens, floor(k / (C+1)) each with the
remainder to the highest bank; banks short of candidates donate their slots
to the nearest lower bank first, then the nearest higher. With the end
token gated on full constraint match, every finished hypothesis carries the
constraint immediately before the end token, and hypotheses that never get
there are force-completed and flagged.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Protocol

import torch
import torch.nn.functional as F
from torch import Tensor

from dialplan.decoding.constraints import ConstraintState, constraint_transition_table
from dialplan.errors import ConfigError
from dialplan.planner.model import BidirectionalPlanner, EncoderStates
from dialplan.planner.nn import DecoderCache


@dataclass
class DecodeConfig:
    beam_size: int = 3
    max_length: int = 80
    agreement_weight: float = 1.0  # reward scale in candidate rescoring
    use_constraints: bool = True
    use_agreement: bool = True
    select_side: str = "backward"
    expand_all: bool = True  # score the full vocabulary at each expansion
    # rank finished candidates by mean per-token log-prob; raw cumulative
    # sums favor degenerate short paths
    length_normalize: bool = True

    def validate(self, constraint_len: int = 0) -> None:
        if self.beam_size < 1:
            raise ConfigError("beam_size must be >= 1")
        if self.max_length < constraint_len + 2:
            raise ConfigError(
                f"max_length {self.max_length} < constraint length {constraint_len} + 2"
            )
        if self.select_side not in ("backward", "forward"):
            raise ConfigError(f"bad select_side {self.select_side!r}")


@dataclass
class BeamCandidate:
    tokens: list[int]  # generated ids, end token last when finished
    log_prob: float  # cumulative log-likelihood of scored (non-forced-prefix) tokens
    matched: int = 0
    finished: bool = False
    forced: bool = False
    prefix_len: int = 0  # leading tokens that were forced, excluded from log_prob

    @property
    def generated_len(self) -> int:
        return len(self.tokens) - self.prefix_len

    def normalized_log_prob(self) -> float:
        return self.log_prob / max(1, self.generated_len)


class StepDecoder(Protocol):
    """Incremental next-token distribution provider for one sample."""

    vocab_size: int
    eos_id: int
    bos_id: int
    pad_id: int

    def start(self, batch_size: int): ...

    def step(self, last_tokens: Tensor, state) -> tuple[Tensor, object]:
        """last_tokens [B] -> (log-probs [B,V], new state)."""

    def reorder(self, state, index: Tensor): ...


class PlannerStepDecoder:
    """StepDecoder over one sample's encoder states and one path decoder."""

    def __init__(self, model: BidirectionalPlanner, direction: str, states: EncoderStates):
        if states.memory.shape[0] != 1:
            raise ValueError("decoding operates on a single sample")
        self.model = model
        self.direction = direction
        self.states = states
        self.vocab_size = model.config.vocab_size
        self.eos_id = model.vocab.eos_id
        self.bos_id = model.vocab.bos_id
        self.pad_id = model.vocab.pad_id

    def _states_for(self, batch_size: int) -> EncoderStates:
        s = self.states
        return EncoderStates(
            memory=s.memory.expand(batch_size, -1, -1),
            memory_pad=s.memory_pad.expand(batch_size, -1),
            target_states=s.target_states,
            target_pad=s.target_pad,
            context_length=s.context_length,
            target_length=s.target_length,
        )

    def start(self, batch_size: int) -> DecoderCache | None:
        return None

    @torch.no_grad()
    def step(self, last_tokens: Tensor, state: DecoderCache | None):
        b = last_tokens.shape[0]
        out = self.model.decode(
            self.direction,
            last_tokens.view(b, 1),
            self._states_for(b),
            cache=state,
            use_cache=True,
        )
        logprobs = F.log_softmax(out.logits[:, -1, :], dim=-1)
        return logprobs, out.cache

    def reorder(self, state: DecoderCache | None, index: Tensor):
        return None if state is None else state.reorder(index)


@dataclass
class _Hyp:
    tokens: list[int]
    log_prob: float
    matched: int


def _allocate_banks(counts: list[int], quotas: list[int]) -> list[int]:
    """Slots per bank after donation; never exceeds availability.

    Donated slots spread one at a time over banks that still have
    candidates, nearest lower bank first, so no populated bank is fully
    crowded out while constraint progress keeps its reserved share.
    """
    n = len(counts)
    alloc = [min(q, c) for q, c in zip(quotas, counts)]
    leftover = sum(quotas) - sum(alloc)
    while leftover > 0:
        gave = False
        for b in range(n - 1, -1, -1):
            if leftover <= 0:
                break
            if counts[b] > alloc[b]:
                alloc[b] += 1
                leftover -= 1
                gave = True
        if not gave:
            break
    return alloc


def _rank_score(cand: BeamCandidate, normalize: bool) -> float:
    return cand.normalized_log_prob() if normalize else cand.log_prob


def dba_beam_search(
    decoder: StepDecoder,
    constraint_ids: tuple[int, ...],
    cfg: DecodeConfig,
) -> list[BeamCandidate]:
    """Constrained (or vanilla, when unconstrained) beam search.

    Finished candidates end with the end token; with constraints active the
    full constraint phrase sits immediately before it.
    """
    constrained = cfg.use_constraints and len(constraint_ids) > 0
    cfg.validate(len(constraint_ids) if constrained else 0)
    k = cfg.beam_size
    table = constraint_transition_table(constraint_ids) if constrained else None
    c_len = len(constraint_ids)

    alive = [_Hyp([], 0.0, 0)]
    state = decoder.start(1)
    finished: list[BeamCandidate] = []

    for _ in range(cfg.max_length):
        if not alive:
            break
        last = torch.tensor(
            [h.tokens[-1] if h.tokens else decoder.bos_id for h in alive],
            dtype=torch.long,
        )
        logprobs, state = decoder.step(last, state)
        logprobs = logprobs.clone()
        logprobs[:, decoder.pad_id] = float("-inf")
        logprobs[:, decoder.bos_id] = float("-inf")
        if constrained:
            for row, hyp in enumerate(alive):
                if hyp.matched < c_len:
                    logprobs[row, decoder.eos_id] = float("-inf")

        scores = torch.tensor([h.log_prob for h in alive]).unsqueeze(1) + logprobs
        flat = scores.flatten()
        vocab = decoder.vocab_size

        # candidate (hyp, token) pairs grouped by bank of the NEW matched count
        banked: list[list[tuple[float, int, int]]] = [
            [] for _ in range(c_len + 1 if constrained else 1)
        ]
        order = torch.argsort(flat, descending=True, stable=True)
        budget = (len(alive) * vocab) if cfg.expand_all else min(len(flat), 4 * k * 2)
        eos_rows: list[tuple[float, int]] = []
        for flat_idx in order[:budget].tolist():
            score = float(flat[flat_idx])
            if score == float("-inf"):
                break
            row, tok = divmod(flat_idx, vocab)
            if tok == decoder.eos_id:
                eos_rows.append((score, row))
                continue
            if constrained:
                bank = table[alive[row].matched].get(tok, 0)
            else:
                bank = 0
            banked[bank].append((score, row, tok))

        for score, row in eos_rows:
            hyp = alive[row]
            finished.append(
                BeamCandidate(
                    tokens=hyp.tokens + [decoder.eos_id],
                    log_prob=score,
                    matched=hyp.matched,
                    finished=True,
                )
            )

        counts = [len(b) for b in banked]
        if constrained:
            quotas = [k // (c_len + 1)] * (c_len + 1)
            quotas[-1] += k - sum(quotas)
            alloc = _allocate_banks(counts, quotas)
        else:
            alloc = [min(k, counts[0])]

        picked: list[tuple[float, int, int, int]] = []
        for bank, take in enumerate(alloc):
            picked.extend((s, r, t, bank) for s, r, t in banked[bank][:take])
        picked.sort(key=lambda item: -item[0])
        if not picked:
            break
        rows = torch.tensor([r for _, r, _, _ in picked], dtype=torch.long)
        state = decoder.reorder(state, rows)
        alive = [
            _Hyp(alive[r].tokens + [t], s, bank)
            for (s, r, t, bank) in picked
        ]
        # sound early stop: future tokens cost <= 0 each, so a hypothesis's
        # raw score can only fall and its normalized score stays below
        # log_prob / max_length; stop when the top-k finished are out of reach
        if len(finished) >= k:
            kth = sorted(_rank_score(c, cfg.length_normalize) for c in finished)[-k]
            if cfg.length_normalize:
                reachable = max(h.log_prob / cfg.max_length for h in alive)
            else:
                reachable = max(h.log_prob for h in alive)
            if kth >= reachable:
                break

    if constrained and not finished and alive:
        # error path: nothing satisfied the constraint within max_length
        finished.extend(_force_complete(decoder, alive, state, constraint_ids, table))
    finished.sort(key=lambda c: -_rank_score(c, cfg.length_normalize))
    return finished[:k]


def _force_complete(
    decoder: StepDecoder,
    alive: list[_Hyp],
    state,
    constraint_ids: tuple[int, ...],
    table,
) -> list[BeamCandidate]:
    """Append each hypothesis's remaining constraint tokens plus the end token.

    Scores stay honest: forced tokens contribute their model log-probs.
    """
    out: list[BeamCandidate] = []
    hyps = [_Hyp(h.tokens[:], h.log_prob, h.matched) for h in alive]
    pending = [list(constraint_ids[h.matched:]) + [decoder.eos_id] for h in hyps]
    for _ in range(max(len(p) for p in pending)):
        last = torch.tensor(
            [h.tokens[-1] if h.tokens else decoder.bos_id for h in hyps],
            dtype=torch.long,
        )
        logprobs, state = decoder.step(last, state)
        for row, hyp in enumerate(hyps):
            if not pending[row]:
                continue
            tok = pending[row].pop(0)
            hyp.tokens.append(tok)
            hyp.log_prob += float(logprobs[row, tok])
            if not pending[row]:
                out.append(
                    BeamCandidate(
                        tokens=hyp.tokens[:],
                        log_prob=hyp.log_prob,
                        matched=len(constraint_ids),
                        finished=True,
                        forced=True,
                    )
                )
    return out


def prefix_beam_search(
    decoder: StepDecoder,
    prefix_ids: tuple[int, ...],
    cfg: DecodeConfig,
) -> list[BeamCandidate]:
    """Vanilla beam search continuing a forced prefix.

    All candidates share the prefix verbatim; log_prob covers only the
    freely generated positions.
    """
    cfg.validate(len(prefix_ids))
    k = cfg.beam_size
    state = decoder.start(1)
    # teacher-force the prefix, one token at a time
    inputs = [decoder.bos_id, *prefix_ids[:-1]]
    for tok in inputs:
        _, state = decoder.step(torch.tensor([tok], dtype=torch.long), state)

    alive = [_Hyp(list(prefix_ids), 0.0, 0)]
    finished: list[BeamCandidate] = []
    budget = cfg.max_length - len(prefix_ids)
    for step in range(max(0, budget)):
        if not alive:
            break
        last = torch.tensor([h.tokens[-1] for h in alive], dtype=torch.long)
        logprobs, state = decoder.step(last, state)
        logprobs = logprobs.clone()
        logprobs[:, decoder.pad_id] = float("-inf")
        logprobs[:, decoder.bos_id] = float("-inf")
        scores = torch.tensor([h.log_prob for h in alive]).unsqueeze(1) + logprobs
        flat = scores.flatten()
        order = torch.argsort(flat, descending=True, stable=True)
        picked: list[tuple[float, int, int]] = []
        for flat_idx in order.tolist():
            score = float(flat[flat_idx])
            if score == float("-inf") or len(picked) >= k:
                break
            row, tok = divmod(flat_idx, decoder.vocab_size)
            if tok == decoder.eos_id:
                hyp = alive[row]
                finished.append(
                    BeamCandidate(
                        tokens=hyp.tokens + [decoder.eos_id],
                        log_prob=score,
                        finished=True,
                        prefix_len=len(prefix_ids),
                    )
                )
                continue
            picked.append((score, row, tok))
        if not picked:
            break
        rows = torch.tensor([r for _, r, _ in picked], dtype=torch.long)
        state = decoder.reorder(state, rows)
        alive = [_Hyp(alive[r].tokens + [t], s, 0) for s, r, t in picked]
        if len(finished) >= k:
            kth = sorted(_rank_score(c, cfg.length_normalize) for c in finished)[-k]
            if cfg.length_normalize:
                reachable = max(h.log_prob / max(1, budget) for h in alive)
            else:
                reachable = max(h.log_prob for h in alive)
            if kth >= reachable:
                alive = []
                break

    if len(finished) < k and alive:
        # out of length budget: close the best hypotheses with a scored end token
        last = torch.tensor([h.tokens[-1] for h in alive], dtype=torch.long)
        logprobs, state = decoder.step(last, state)
        for row, hyp in enumerate(alive):
            finished.append(
                BeamCandidate(
                    tokens=hyp.tokens + [decoder.eos_id],
                    log_prob=hyp.log_prob + float(logprobs[row, decoder.eos_id]),
                    finished=True,
                    forced=True,
                    prefix_len=len(prefix_ids),
                )
            )
    finished.sort(key=lambda c: -_rank_score(c, cfg.length_normalize))
    return finished[:k]
