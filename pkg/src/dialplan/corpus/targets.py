"""Target derivation from fully annotated dialogues.

The target is the last recommendation topic the user accepted, paired with
the system action of the turn that introduced it. Dialogues that never get
a recommendation accepted raise NotRecommendable and are filtered out.
"""

from __future__ import annotations

from typing import Callable

from dialplan.corpus.types import FullDialogue, Target
from dialplan.errors import NotRecommendable
from dialplan.text import normalize
from dialplan.vocab import NULL_TOPIC


def is_recommendation_action(action: str) -> bool:
    return "recommend" in action.lower()


def derive_target(
    dialogue: FullDialogue,
    recommendation_predicate: Callable[[str], bool] = is_recommendation_action,
) -> Target:
    """Last user-accepted recommended topic + the action that introduced it.

    A recommendation counts as accepted when any later user turn mentions the
    topic (normalized substring match).
    """
    accepted: tuple[str, str] | None = None
    turns = dialogue.turns
    for i, turn in enumerate(turns):
        if turn.speaker != "system" or turn.pair is None:
            continue
        action, topic = turn.pair.action, turn.pair.topic
        if topic == NULL_TOPIC or not recommendation_predicate(action):
            continue
        topic_norm = normalize(topic)
        for later in turns[i + 1:]:
            if later.speaker != "user":
                continue
            if topic_norm in normalize(" ".join(later.utterance)):
                accepted = (action, topic)
                break
    if accepted is None:
        raise NotRecommendable(
            f"dialogue {dialogue.id}: no recommendation topic accepted"
        )
    return Target(accepted[0], accepted[1])
