from __future__ import annotations

import pytest

from dialplan.corpus.types import (
    ActionTopicPair,
    DialogueSample,
    KnowledgeTriple,
    PlanPath,
    Target,
    Turn,
    UserProfile,
)


def make_sample(
    sample_id: str = "d0001-t00",
    topic: str = "amber atlas",
    action: str = "recommend media",
    pairs: list[tuple[str, str]] | None = None,
    knowledge: list[tuple[str, str, str]] | None = None,
) -> DialogueSample:
    if pairs is None:
        pairs = [
            ("greeting", "NULL"),
            ("chitchat", "cedar grove"),
            (action, topic),
        ]
    if knowledge is None:
        knowledge = [
            ("cedar grove", "linked", topic),
            (topic, "genre", "drama"),
            ("cedar grove", "genre", "folk"),
        ]
    return DialogueSample(
        id=sample_id,
        knowledge=frozenset(KnowledgeTriple(*k) for k in knowledge),
        profile=UserProfile.from_dict({"likes": "media"}),
        history=(
            Turn("system", ("hello", "there"), 0),
            Turn("user", ("hi",), 1),
        ),
        gold_path=PlanPath(tuple(ActionTopicPair(a, t) for a, t in pairs), "forward"),
        target=Target(action, topic),
        gold_utterance=("i", "recommend", *topic.split(), "for", "you"),
    )


@pytest.fixture
def sample() -> DialogueSample:
    return make_sample()
