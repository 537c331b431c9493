from __future__ import annotations

import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dialplan.corpus.types import ActionTopicPair, KnowledgeTriple
from dialplan.metrics import (
    action_topic_f1,
    bigram_f1,
    bleu_n,
    dist_n,
    fleiss_kappa,
    goal_success,
    knowledge_f1,
    perplexity_from_nll,
    word_f1,
)

P = ActionTopicPair


class TestActionTopicF1:
    def test_all_correct(self):
        gold = [P("a", "t"), P("b", "u")]
        assert action_topic_f1(gold, gold) == (1.0, 1.0)

    def test_hand_counted_case(self):
        # 3 samples: 2 correct actions, 1 correct topic
        gold = [P("a", "t1"), P("b", "t2"), P("c", "t3")]
        pred = [P("a", "t1"), P("b", "x"), P("x", "x")]
        action_f1, topic_f1 = action_topic_f1(pred, gold)
        assert action_f1 == pytest.approx(2 / 3, abs=1e-9)
        assert topic_f1 == pytest.approx(1 / 3, abs=1e-9)

    def test_missing_prediction_counts_wrong(self):
        gold = [P("a", "t"), P("b", "u")]
        pred = [P("a", "t"), None]
        action_f1, topic_f1 = action_topic_f1(pred, gold)
        assert action_f1 == pytest.approx(0.5, abs=1e-9)
        assert topic_f1 == pytest.approx(0.5, abs=1e-9)

    def test_total_mismatch_is_zero(self):
        assert action_topic_f1([P("x", "y")], [P("a", "t")]) == (0.0, 0.0)


class TestBigramF1:
    def test_next_turn_match_counts(self):
        pred = [P("a", "next topic")]
        expanded = [[P("a", "cur"), P("a", "next topic")]]
        _, topic = bigram_f1(pred, expanded)
        assert topic == 1.0

    def test_bigram_geq_plain(self):
        gold = [P("a", "t1"), P("b", "t2"), P("c", "t3")]
        pred = [P("a", "t2"), P("b", "t3"), P("x", "zz")]
        expanded = [
            [gold[0], gold[1]],
            [gold[0], gold[1], gold[2]],
            [gold[1], gold[2]],
        ]
        plain = action_topic_f1(pred, gold)
        bi = bigram_f1(pred, expanded)
        assert bi[0] >= plain[0]
        assert bi[1] >= plain[1]


class TestWordF1:
    def test_identity(self):
        assert word_f1(("a", "b"), ("a", "b")) == 1.0

    def test_half_overlap_hand_case(self):
        # hyp shares 2 of 4 ref tokens, |hyp| = 4: P = R = 0.5
        hyp = ("a", "b", "x", "y")
        ref = ("a", "b", "c", "d")
        assert word_f1(hyp, ref) == pytest.approx(0.5, abs=1e-9)

    def test_disjoint_zero(self):
        assert word_f1(("a",), ("b",)) == 0.0

    def test_empty_hyp_zero(self):
        assert word_f1((), ("a",)) == 0.0


class TestBleu:
    def test_identical_corpus(self):
        hyps = [("a", "b", "c"), ("d", "e")]
        assert bleu_n(hyps, hyps, 1) == pytest.approx(1.0, abs=1e-9)
        assert bleu_n(hyps, hyps, 2) == pytest.approx(1.0, abs=1e-9)

    def test_hand_computed_two_pairs(self):
        # pair 1: hyp (a b c) vs ref (a b d): clipped unigrams 2/3
        # pair 2: hyp (x y) vs ref (x y):     clipped unigrams 2/2
        # corpus p1 = 4/5; lengths equal so BP = 1
        hyps = [("a", "b", "c"), ("x", "y")]
        refs = [("a", "b", "d"), ("x", "y")]
        assert bleu_n(hyps, refs, 1) == pytest.approx(4 / 5, abs=1e-9)
        # bigrams: pair 1 clipped 1/2 (ab yes, bc no); pair 2 1/1 -> p2 = 2/3
        expected = math.sqrt((4 / 5) * (2 / 3))
        assert bleu_n(hyps, refs, 2) == pytest.approx(expected, abs=1e-9)

    def test_brevity_penalty(self):
        hyps = [("a",)]
        refs = [("a", "b", "c")]
        expected = math.exp(1 - 3 / 1) * 1.0
        assert bleu_n(hyps, refs, 1) == pytest.approx(expected, abs=1e-9)


class TestDist:
    def test_all_unique(self):
        assert dist_n([("a", "b"), ("c", "d")], 1) == 1.0

    def test_repeated_token(self):
        assert dist_n([("w",) * 10], 1) == pytest.approx(0.1, abs=1e-9)

    def test_empty_zero(self):
        assert dist_n([], 1) == 0.0

    @settings(max_examples=50)
    @given(st.lists(st.lists(st.sampled_from("abcd"), min_size=1, max_size=5),
                    min_size=1, max_size=5))
    def test_duplicating_hyp_never_increases(self, hyps):
        hyps = [tuple(h) for h in hyps]
        base = dist_n(hyps, 1)
        doubled = dist_n(hyps + [hyps[0]], 1)
        assert doubled <= base + 1e-12


class TestKnowledgeF1:
    KNOW = [frozenset({
        KnowledgeTriple("amber atlas", "genre", "drama"),
        KnowledgeTriple("cedar grove", "genre", "folk"),
    })]

    def test_hyp_equals_gold_is_one(self):
        gold_utt = ("amber", "atlas", "is", "drama")
        from dialplan.corpus.labels import knowledge_pseudo_labels

        labels = [knowledge_pseudo_labels(gold_utt, self.KNOW[0])]
        assert knowledge_f1([gold_utt], labels, self.KNOW) == 1.0

    def test_hand_case_half(self):
        # gold labels two entries; hyp hits one and asserts one extra
        gold_labels = [{"amber atlas", "drama"}]
        hyp = ("amber", "atlas", "is", "folk")  # hits amber atlas + wrong folk
        assert knowledge_f1([hyp], gold_labels, self.KNOW) == pytest.approx(0.5, abs=1e-9)


class TestGoalSuccess:
    def test_all_contain_topic(self):
        hyps = [("i", "recommend", "amber", "atlas")]
        assert goal_success(hyps, ["amber atlas"]) == 1.0

    def test_paraphrase_near_miss(self):
        hyps = [("i", "recommend", "the", "amber", "one")]
        assert goal_success(hyps, ["amber atlas"]) == 0.0


class TestPerplexity:
    def test_perfect_model(self):
        assert perplexity_from_nll(0.0) == 1.0

    def test_uniform_100(self):
        assert perplexity_from_nll(math.log(100)) == pytest.approx(100.0, abs=1e-9)


class TestFleissKappa:
    def test_perfect_agreement(self):
        matrix = [[2, 2, 2], [0, 0, 0], [1, 1, 1]]
        assert fleiss_kappa(matrix) == pytest.approx(1.0, abs=1e-9)

    def test_textbook_hand_case(self):
        # 4 items x 3 raters; worked by hand:
        # counts per item over categories {0,1,2}:
        #   (3,0,0) (2,1,0) (0,3,0) (0,1,2)
        # P_i = (sum n^2 - n) / (n(n-1)) with n=3: 1, 1/3, 1, 1/3
        # P_bar = (1 + 1/3 + 1 + 1/3)/4 = 2/3
        # totals: cat0 = 5, cat1 = 5, cat2 = 2, grand = 12
        # P_e = (5/12)^2 + (5/12)^2 + (2/12)^2 = 54/144 = 3/8
        # kappa = (2/3 - 3/8) / (1 - 3/8) = (7/24) / (5/8) = 7/15
        matrix = [
            [0, 0, 0],
            [0, 0, 1],
            [1, 1, 1],
            [2, 2, 1],
        ]
        assert fleiss_kappa(matrix) == pytest.approx(7 / 15, abs=1e-9)

    def test_degenerate_single_category(self):
        matrix = [[1, 1, 1], [1, 1, 1]]
        assert fleiss_kappa(matrix) == 1.0

    def test_requires_two_raters(self):
        with pytest.raises(ValueError):
            fleiss_kappa([[1]])
