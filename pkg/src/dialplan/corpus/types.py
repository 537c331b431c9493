"""Domain types for target-oriented dialogue corpora."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Literal

from dialplan.errors import ValidationError
from dialplan.vocab import MARKER_TOKENS, NULL_TOPIC

Direction = Literal["forward", "backward"]
Speaker = Literal["user", "system"]


def _check_value(kind: str, value: str) -> str:
    value = value.strip()
    if not value:
        raise ValidationError(f"empty {kind}")
    bad = MARKER_TOKENS.intersection(value.split())
    if bad:
        raise ValidationError(f"{kind} contains reserved marker tokens: {sorted(bad)}")
    return value


@dataclass(frozen=True)
class KnowledgeTriple:
    """One <subject, relation, object> domain fact."""

    subject: str
    relation: str
    object: str

    def __post_init__(self):
        object.__setattr__(self, "subject", _check_value("subject", self.subject))
        object.__setattr__(self, "relation", _check_value("relation", self.relation))
        object.__setattr__(self, "object", _check_value("object", self.object))

    def as_list(self) -> list[str]:
        return [self.subject, self.relation, self.object]


@dataclass(frozen=True)
class UserProfile:
    """Optional per-dialogue user attributes."""

    attributes: tuple[tuple[str, str], ...] = ()

    @classmethod
    def from_dict(cls, data: dict[str, str]) -> "UserProfile":
        return cls(tuple(sorted(data.items())))

    def as_dict(self) -> dict[str, str]:
        return dict(self.attributes)

    def __bool__(self) -> bool:
        return bool(self.attributes)


@dataclass(frozen=True)
class Turn:
    speaker: Speaker
    utterance: tuple[str, ...]
    turn_index: int

    def __post_init__(self):
        if self.speaker not in ("user", "system"):
            raise ValidationError(f"bad speaker {self.speaker!r}")
        if self.turn_index < 0:
            raise ValidationError("turn_index must be non-negative")


@dataclass(frozen=True)
class ActionTopicPair:
    """One step of a dialogue path: a dialogue move plus its subject topic."""

    action: str
    topic: str

    def __post_init__(self):
        object.__setattr__(self, "action", _check_value("action", self.action))
        object.__setattr__(self, "topic", _check_value("topic", self.topic))


@dataclass(frozen=True)
class Target(ActionTopicPair):
    """The pre-determined action-topic goal of a dialogue."""

    def __post_init__(self):
        super().__post_init__()
        if self.topic == NULL_TOPIC:
            raise ValidationError("target topic may not be NULL")

    def as_pair(self) -> ActionTopicPair:
        return ActionTopicPair(self.action, self.topic)


@dataclass(frozen=True)
class PlanPath:
    """Ordered action-topic pairs with a direction tag.

    Forward paths run present-to-target (target pair last); backward paths
    run target-to-present (target pair first). `truncated` marks paths
    recovered from token sequences missing their end marker.
    """

    pairs: tuple[ActionTopicPair, ...]
    direction: Direction = "forward"
    truncated: bool = False

    def __post_init__(self):
        if not self.pairs:
            raise ValidationError("plan path must be non-empty")
        if self.direction not in ("forward", "backward"):
            raise ValidationError(f"bad direction {self.direction!r}")

    def reversed(self) -> "PlanPath":
        flipped = "backward" if self.direction == "forward" else "forward"
        return PlanPath(tuple(reversed(self.pairs)), flipped, self.truncated)

    def oriented(self, direction: Direction) -> "PlanPath":
        return self if self.direction == direction else self.reversed()

    @property
    def target_pair(self) -> ActionTopicPair:
        return self.pairs[-1] if self.direction == "forward" else self.pairs[0]

    @property
    def first_forward_pair(self) -> ActionTopicPair:
        """The pair for the turn being planned (present end of the path)."""
        return self.pairs[0] if self.direction == "forward" else self.pairs[-1]

    def __len__(self) -> int:
        return len(self.pairs)


@dataclass(frozen=True)
class DialogueSample:
    """One training/eval unit: plan the path from the current turn to the target."""

    id: str
    knowledge: frozenset[KnowledgeTriple]
    profile: UserProfile
    history: tuple[Turn, ...]
    gold_path: PlanPath
    target: Target
    gold_utterance: tuple[str, ...]

    def validate(self) -> None:
        if not self.knowledge:
            raise ValidationError("knowledge set is empty", self.id)
        if self.gold_path.direction != "forward":
            raise ValidationError("gold path must be forward-oriented", self.id)
        terminal = self.gold_path.target_pair
        if (terminal.action, terminal.topic) != (self.target.action, self.target.topic):
            raise ValidationError(
                f"gold path terminal pair {terminal} does not match target {self.target}",
                self.id,
            )
        grounded = any(
            self.target.topic in (t.subject, t.object) for t in self.knowledge
        )
        if not grounded:
            raise ValidationError(
                f"target topic {self.target.topic!r} not grounded in knowledge", self.id
            )
        last_index = -1
        last_speaker = None
        for turn in self.history:
            if turn.turn_index <= last_index:
                raise ValidationError("turn indices must strictly increase", self.id)
            if last_speaker is not None and turn.speaker == last_speaker:
                raise ValidationError("speakers must alternate", self.id)
            last_index = turn.turn_index
            last_speaker = turn.speaker

    @property
    def dialogue_id(self) -> str:
        """Grouping key: samples from one dialogue share 'dlg-tNN' id prefixes."""
        base, sep, tail = self.id.rpartition("-t")
        if sep and tail.isdigit():
            return base
        return self.id


@dataclass(frozen=True)
class AnnotatedTurn:
    """A turn of a full dialogue, with the path pair realized by system turns."""

    speaker: Speaker
    utterance: tuple[str, ...]
    turn_index: int
    pair: ActionTopicPair | None = None


@dataclass(frozen=True)
class FullDialogue:
    """A complete annotated dialogue, before per-turn sample extraction."""

    id: str
    turns: tuple[AnnotatedTurn, ...]
    knowledge: frozenset[KnowledgeTriple]
    profile: UserProfile = UserProfile()

    def system_turns(self) -> list[AnnotatedTurn]:
        return [t for t in self.turns if t.speaker == "system"]


@dataclass
class SplitSpec:
    """Disjoint sample-id lists; OOD target topics never appear as train targets."""

    train: list[str] = field(default_factory=list)
    dev: list[str] = field(default_factory=list)
    test_id: list[str] = field(default_factory=list)
    test_ood: list[str] = field(default_factory=list)

    def all_ids(self) -> list[str]:
        return self.train + self.dev + self.test_id + self.test_ood

    def split_of(self, sample_id: str) -> str | None:
        for name in ("train", "dev", "test_id", "test_ood"):
            if sample_id in set(getattr(self, name)):
                return name
        return None

    def validate(self, samples_by_id: dict[str, DialogueSample] | None = None) -> None:
        seen: set[str] = set()
        for name in ("train", "dev", "test_id", "test_ood"):
            ids = getattr(self, name)
            overlap = seen.intersection(ids)
            if overlap:
                raise ValidationError(f"ids in multiple splits: {sorted(overlap)[:3]}")
            seen.update(ids)
        if samples_by_id is not None:
            train_topics = {samples_by_id[i].target.topic for i in self.train}
            ood_topics = {samples_by_id[i].target.topic for i in self.test_ood}
            shared = train_topics & ood_topics
            if shared:
                raise ValidationError(
                    f"OOD target topics present in train: {sorted(shared)[:3]}"
                )
