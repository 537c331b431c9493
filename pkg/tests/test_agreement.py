from __future__ import annotations

import math

import pytest
import torch

import dialplan.decoding.agreement as agreement_mod
from dialplan.decoding.agreement import agreement_scores, agreement_select
from dialplan.decoding.beam import BeamCandidate


def cand(tokens, log_prob, prefix_len=0):
    return BeamCandidate(tokens=tokens, log_prob=log_prob, prefix_len=prefix_len, finished=True)


class TestAgreementScores:
    def test_hand_computed_three_by_three(self):
        # backward representations
        hb = [torch.tensor([0.0, 0.0]), torch.tensor([1.0, 0.0]), torch.tensor([0.0, 2.0])]
        # forward representations
        hf = [torch.tensor([0.0, 0.0]), torch.tensor([3.0, 4.0]), torch.tensor([1.0, 1.0])]
        logliks = [-0.5, -0.6, -0.7]
        lam = 1.0

        # spreadsheet-style evaluation: mean L2 distance to the forward set
        def dist(a, b):
            return math.sqrt((a[0] - b[0]) ** 2 + (a[1] - b[1]) ** 2)

        expected_rewards = []
        for b in hb:
            ds = [dist(b.tolist(), f.tolist()) for f in hf]
            expected_rewards.append(-sum(ds) / len(ds))

        scores = agreement_scores(hb, hf, logliks, lam)
        for s, ll, reward in zip(scores, logliks, expected_rewards):
            assert s["loglik"] == pytest.approx(ll, abs=1e-9)
            assert s["agreement"] == pytest.approx(reward, abs=1e-6)
            assert s["total"] == pytest.approx(ll + lam * reward, abs=1e-6)

    def test_lambda_zero_scores_equal_loglik(self):
        hb = [torch.randn(4) for _ in range(3)]
        hf = [torch.randn(4) for _ in range(3)]
        logliks = [-1.0, -2.0, -0.5]
        scores = agreement_scores(hb, hf, logliks, 0.0)
        assert [s["total"] for s in scores] == logliks


class TestAgreementSelect:
    @pytest.fixture
    def patched(self, monkeypatch):
        reprs = {
            ("b", (10,)): torch.tensor([0.0, 0.0]),
            ("b", (11,)): torch.tensor([5.0, 5.0]),
            ("b", (12,)): torch.tensor([1.0, 1.0]),
            ("f", (20,)): torch.tensor([1.0, 1.0]),
            ("f", (21,)): torch.tensor([1.2, 1.0]),
        }

        def fake_repr(model, direction, token_ids, states):
            return reprs[(direction[0], tuple(token_ids))]

        monkeypatch.setattr(agreement_mod, "candidate_repr", fake_repr)
        backward = [cand([10], -0.10), cand([11], -0.12), cand([12], -0.15)]
        forward = [cand([20], -0.3), cand([21], -0.4)]
        return backward, forward

    def test_agreement_flips_likelihood_ranking(self, patched):
        backward, forward = patched
        # candidate 12 is nearest the forward cluster; with a large enough
        # reward weight it beats the higher-likelihood candidate 10
        best, scores = agreement_select(backward, forward, None, None, 1.0)
        assert best == 2
        assert scores[2]["total"] > scores[0]["total"]

    def test_lambda_zero_equals_likelihood_argmax(self, patched):
        backward, forward = patched
        best, scores = agreement_select(backward, forward, None, None, 0.0)
        likelihood_best = max(
            range(len(backward)),
            key=lambda i: (backward[i].normalized_log_prob(), -i),
        )
        assert best == likelihood_best == 0
        for c, s in zip(backward, scores):
            assert s["total"] == c.normalized_log_prob()

    def test_tie_breaks_toward_lower_index(self):
        backward = [cand([10], -1.0), cand([11], -1.0)]
        scores_input = [torch.tensor([0.0]), torch.tensor([0.0])]

        def fake_repr(model, direction, token_ids, states):
            return torch.tensor([0.0])

        import dialplan.decoding.agreement as mod

        original = mod.candidate_repr
        mod.candidate_repr = fake_repr
        try:
            best, _ = agreement_select(backward, [], None, None, 1.0)
        finally:
            mod.candidate_repr = original
        assert best == 0

    def test_single_candidate_each_side(self, patched):
        backward, forward = patched
        best, _ = agreement_select(backward[:1], forward[:1], None, None, 5.0)
        assert best == 0
