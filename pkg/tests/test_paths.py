from __future__ import annotations

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dialplan.corpus.paths import parse_path, path_pair_spans, serialize_path
from dialplan.corpus.types import ActionTopicPair, PlanPath
from dialplan.errors import ParseError

WORDS = ["amber", "atlas", "cedar", "grove", "chitchat", "recommend", "media", "x1"]


def test_single_pair_serialization():
    path = PlanPath((ActionTopicPair("greeting", "NULL"),), "forward")
    assert serialize_path(path) == ["[A]", "greeting", "[T]", "NULL", "[EOS]"]


def test_target_pair_serialized_last():
    path = PlanPath(
        (
            ActionTopicPair("chitchat", "cedar grove"),
            ActionTopicPair("movie recommendation", "dearest"),
        ),
        "forward",
    )
    tokens = serialize_path(path)
    assert tokens[-6:] == ["[A]", "movie", "recommendation", "[T]", "dearest", "[EOS]"]


def test_parse_single_pair():
    path = parse_path(["[A]", "a", "[T]", "t", "[EOS]"])
    assert path.pairs == (ActionTopicPair("a", "t"),)
    assert not path.truncated


def test_parse_two_pairs_in_order():
    path = parse_path(["[A]", "a", "[T]", "t", "[A]", "b", "[T]", "u", "[EOS]"])
    assert [p.action for p in path.pairs] == ["a", "b"]
    assert [p.topic for p in path.pairs] == ["t", "u"]


def test_parse_ignores_tokens_after_eos():
    path = parse_path(["[A]", "a", "[T]", "t", "[EOS]", "junk", "[A]"])
    assert len(path.pairs) == 1


def test_parse_missing_eos_sets_truncated():
    path = parse_path(["[A]", "a", "[T]", "t"])
    assert path.truncated
    assert path.pairs == (ActionTopicPair("a", "t"),)


def test_parse_requires_leading_action_marker():
    with pytest.raises(ParseError):
        parse_path(["a", "[T]", "t", "[EOS]"])
    with pytest.raises(ParseError):
        parse_path(["[T]", "t", "[A]", "a", "[EOS]"])


@st.composite
def plan_paths(draw) -> PlanPath:
    n = draw(st.integers(min_value=1, max_value=5))
    pairs = []
    for _ in range(n):
        action = " ".join(draw(st.lists(st.sampled_from(WORDS), min_size=1, max_size=3)))
        topic = " ".join(draw(st.lists(st.sampled_from(WORDS), min_size=1, max_size=3)))
        pairs.append(ActionTopicPair(action, topic))
    direction = draw(st.sampled_from(["forward", "backward"]))
    return PlanPath(tuple(pairs), direction)


@settings(max_examples=200)
@given(plan_paths())
def test_round_trip(path: PlanPath):
    assert parse_path(serialize_path(path), path.direction) == path


@settings(max_examples=300)
@given(st.lists(st.sampled_from(WORDS + ["[A]", "[T]", "[EOS]"]), max_size=12))
def test_fuzz_never_crashes(tokens):
    try:
        path = parse_path(tokens)
    except ParseError:
        return
    assert len(path.pairs) >= 1


def test_reverse_round_trip():
    path = PlanPath(
        (ActionTopicPair("a", "t"), ActionTopicPair("b", "u")), "forward"
    )
    assert path.reversed().reversed() == path
    assert path.reversed().direction == "backward"
    assert path.reversed().pairs == tuple(reversed(path.pairs))


def test_pair_spans():
    tokens = ["[A]", "a", "[T]", "t", "[A]", "b", "c", "[T]", "u", "[EOS]"]
    assert path_pair_spans(tokens) == [(0, 4), (4, 9)]
