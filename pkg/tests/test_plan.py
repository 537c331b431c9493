from __future__ import annotations

import dataclasses

import pytest
import torch

from dialplan.corpus.io import build_vocabs
from dialplan.decoding import DecodeConfig
from dialplan.decoding.plan import plan
from dialplan.planner.config import ModelConfig
from dialplan.planner.model import BidirectionalPlanner
from tests.conftest import make_sample

torch.manual_seed(7)


def tiny_model(vocabs, **kw):
    base = dict(
        hidden_size=32, encoder_layers=1, encoder_heads=2,
        decoder_layers=1, decoder_heads=2, ffn_size=64,
        max_context_len=128, max_target_len=16, max_path_len=96, dropout=0.0,
    )
    base.update(kw)
    model = BidirectionalPlanner(ModelConfig(**base), vocabs.words)
    model.eval()
    return model


@pytest.fixture(scope="module")
def setup():
    samples = [
        make_sample(f"d{i:04d}-t00", topic=t)
        for i, t in enumerate(["amber atlas", "cedar grove", "ember dune"])
    ]
    vocabs = build_vocabs(samples)
    return samples, vocabs, tiny_model(vocabs)


class TestPlanOperation:
    def test_constraint_guarantee_holds_even_untrained(self, setup):
        samples, vocabs, model = setup
        cfg = DecodeConfig(beam_size=2, max_length=30)
        for sample in samples:
            result = plan(sample, model, cfg)
            last = result.path.pairs[-1]
            assert (last.action, last.topic) == (
                sample.target.action, sample.target.topic,
            )
            assert result.path.direction == "forward"

    def test_deterministic_plans(self, setup):
        samples, vocabs, model = setup
        cfg = DecodeConfig(beam_size=2, max_length=30)
        one = plan(samples[0], model, cfg)
        two = plan(samples[0], model, cfg)
        assert one.path == two.path
        assert one.diagnostics["scores"] == two.diagnostics["scores"]

    def test_lambda_zero_matches_likelihood_argmax(self, setup):
        samples, vocabs, model = setup
        base = DecodeConfig(beam_size=3, max_length=30, agreement_weight=0.0)
        off = DecodeConfig(beam_size=3, max_length=30, use_agreement=False)
        for sample in samples:
            with_zero = plan(sample, model, base)
            without = plan(sample, model, off)
            assert with_zero.chosen_index == without.chosen_index
            assert with_zero.path == without.path

    def test_no_agreement_keeps_backward_candidates_identical(self, setup):
        samples, vocabs, model = setup
        full_cfg = DecodeConfig(beam_size=3, max_length=30)
        ablated = DecodeConfig(beam_size=3, max_length=30, use_agreement=False)
        r_full = plan(samples[0], model, full_cfg)
        r_ablate = plan(samples[0], model, ablated)
        assert (
            r_full.diagnostics["backward_candidates"]
            == r_ablate.diagnostics["backward_candidates"]
        )
        assert "agreement" not in r_ablate.diagnostics["scores"][0]
        assert "agreement" in r_full.diagnostics["scores"][0]

    def test_single_decoder_models_plan(self, setup):
        samples, vocabs, _ = setup
        cfg = DecodeConfig(
            beam_size=2, max_length=30, use_constraints=False, use_agreement=False
        )
        fwd_only = tiny_model(vocabs, use_backward=False)
        result = plan(samples[0], fwd_only, cfg)
        assert result.chosen_side == "forward"
        bwd_only = tiny_model(vocabs, use_forward=False)
        result = plan(samples[0], bwd_only, cfg)
        assert result.chosen_side == "backward"

    def test_plan_record_schema(self, setup):
        samples, vocabs, model = setup
        record = plan(samples[0], model, DecodeConfig(beam_size=2, max_length=30)).as_record()
        assert set(record) == {"sample_id", "plan", "scores", "forced"}
        assert set(record["scores"]) == {"loglik", "agreement", "total"}
        assert all(len(pair) == 2 for pair in record["plan"])
