"""Synthetic target-oriented dialogue corpus generator.

Dialogues walk a branching topic graph from a context topic to a planted
target topic; gold paths are the deterministic shortest route, so the next
correct topic at any turn depends on where the dialogue is heading. Topic
names are two-token compositions so held-out (OOD) targets share surface
vocabulary with training data, as subword tokenizers provide on real corpora.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from pathlib import Path

from dialplan.corpus.enrich import TripleGraph
from dialplan.corpus.io import build_vocabs, save_graph, save_vocabs, write_samples
from dialplan.corpus.targets import derive_target
from dialplan.corpus.types import (
    ActionTopicPair,
    AnnotatedTurn,
    DialogueSample,
    FullDialogue,
    KnowledgeTriple,
    PlanPath,
    Turn,
    UserProfile,
)
from dialplan.errors import ConfigError
from dialplan.text import tokens_of
from dialplan.vocab import NULL_TOPIC

ACTION_POOL = (
    "greeting",
    "chitchat",
    "elicit topic",
    "recommend media",
    "discuss attribute",
    "ask preference",
    "recommend place",
    "farewell",
)

TOPIC_FIRST = (
    "amber", "basalt", "cedar", "delta", "ember", "fjord",
    "garnet", "harbor", "indigo", "juniper", "krona", "lumen",
)
TOPIC_SECOND = (
    "atlas", "beacon", "cinder", "dune", "echo",
    "flare", "grove", "haven", "isle", "jetty",
)

GENRES = ("drama", "comedy", "thriller", "ballad", "folk", "jazz", "scenic", "historic")
BLURB_ADJ = ("quiet", "vivid", "famous", "hidden", "modern", "classic")
BLURB_NOUN = ("gem", "tale", "spot", "piece", "journey", "story")
BLURB_GROUP = ("locals", "critics", "travelers", "fans", "students")

SYSTEM_TEMPLATES = {
    "greeting": (
        "hello there nice to meet you",
        "hi friend how are you today",
    ),
    "chitchat": (
        "lately i keep thinking about {t}",
        "i really enjoy {t} these days",
    ),
    "elicit topic": (
        "speaking of that have you heard about {t}",
        "that reminds me of {t} somehow",
    ),
    "discuss attribute": (
        "did you know {t} is {attr}",
        "people say {t} is quite {attr}",
    ),
    "ask preference": (
        "what kind of things do you like",
    ),
    "recommend media": (
        "i recommend {t} for you",
        "you should really try {t} next",
    ),
    "recommend place": (
        "i recommend {t} for you",
        "you should really visit {t} soon",
    ),
    "farewell": (
        "goodbye and take care",
    ),
}

USER_TEMPLATES = (
    "tell me more",
    "sounds interesting go on",
    "oh i see",
    "that sounds nice",
)
USER_ACCEPT_TEMPLATES = (
    "great i will check {t} out",
    "wonderful {t} sounds perfect",
)


@dataclass
class SyntheticConfig:
    n_dialogues: int = 500
    n_topics: int = 60
    n_actions: int = 8
    graph_branching: int = 3
    max_turns: int = 12
    seed: int = 13

    def validate(self) -> None:
        if self.n_topics < 10:
            raise ConfigError(f"n_topics must be >= 10, got {self.n_topics}")
        if self.n_actions < 4:
            raise ConfigError(f"n_actions must be >= 4, got {self.n_actions}")
        if self.n_actions > len(ACTION_POOL):
            raise ConfigError(f"n_actions must be <= {len(ACTION_POOL)}")
        if self.n_topics > len(TOPIC_FIRST) * len(TOPIC_SECOND):
            raise ConfigError(
                f"n_topics must be <= {len(TOPIC_FIRST) * len(TOPIC_SECOND)}"
            )
        if self.n_dialogues < 1:
            raise ConfigError("n_dialogues must be positive")
        if self.max_turns < 6:
            raise ConfigError("max_turns must be >= 6")
        if self.graph_branching < 2:
            raise ConfigError("graph_branching must be >= 2")


@dataclass
class SynthResult:
    dialogues_path: Path
    samples_path: Path
    graph_path: Path
    n_dialogues: int
    n_samples: int
    mean_path_len: float


def topic_names(n: int) -> list[str]:
    """Two-token compound names: out-of-domain targets are novel pairings of
    name parts seen in training, the way subword tokenizers expose unseen
    topic strings on real corpora."""
    names = []
    for i in range(n):
        first = TOPIC_FIRST[i % len(TOPIC_FIRST)]
        second = TOPIC_SECOND[i // len(TOPIC_FIRST)]
        names.append(f"{first} {second}")
    return names


def topic_category(index: int) -> str:
    return "media" if index % 2 == 0 else "place"


def build_graph(topics: list[str], branching: int, rng: random.Random) -> list[KnowledgeTriple]:
    """Connected topic graph with cycles plus per-topic attribute triples."""
    triples: list[KnowledgeTriple] = []
    order = topics[:]
    rng.shuffle(order)
    edges: set[tuple[str, str]] = set()

    def add_edge(a: str, b: str) -> None:
        if a != b:
            edges.add((min(a, b), max(a, b)))

    for i in range(1, len(order)):
        add_edge(order[i], rng.choice(order[:i]))
    want = max(len(topics) - 1, round(len(topics) * branching / 2))
    attempts = 0
    while len(edges) < want and attempts < 50 * want:
        add_edge(rng.choice(topics), rng.choice(topics))
        attempts += 1
    for a, b in sorted(edges):
        triples.append(KnowledgeTriple(a, "linked", b))

    for i, topic in enumerate(topics):
        genre = GENRES[(i * 7) % len(GENRES)]
        blurb = (
            f"a {rng.choice(BLURB_ADJ)} {rng.choice(BLURB_NOUN)} "
            f"for {rng.choice(BLURB_GROUP)}"
        )
        triples.append(KnowledgeTriple(topic, "genre", genre))
        triples.append(KnowledgeTriple(topic, "blurb", blurb))
        if i % 5 == 0:
            triples.append(
                KnowledgeTriple(topic, "user_review", "great pacing but uneven ending")
            )
    return triples


def _fill(template: str, topic: str = "", attr: str = "") -> tuple[str, ...]:
    return tokens_of(template.format(t=topic, attr=attr))


def _build_pairs(
    path_topics: list[str],
    topics: list[str],
    actions: list[str],
    with_filler: bool,
) -> list[ActionTopicPair]:
    """Deterministic pair sequence for a route; every choice is readable
    from the sample context so planning stays learnable."""
    target_topic = path_topics[-1]
    category = topic_category(topics.index(target_topic))
    if "recommend place" in actions and category == "place":
        rec_action = "recommend place"
    else:
        rec_action = "recommend media"
    interiors = [a for a in ("elicit topic", "discuss attribute") if a in actions]
    pairs = [ActionTopicPair("greeting", NULL_TOPIC)]
    if with_filler and "ask preference" in actions:
        pairs.append(ActionTopicPair("ask preference", NULL_TOPIC))
    pairs.append(ActionTopicPair("chitchat", path_topics[0]))
    for i, topic in enumerate(path_topics[1:-1]):
        pairs.append(ActionTopicPair(interiors[i % len(interiors)], topic))
    pairs.append(ActionTopicPair(rec_action, target_topic))
    return pairs


def _grounded_view(
    graph: TripleGraph,
    start: str,
    target: str,
    rng: random.Random,
    noise_triples: int = 6,
) -> set[KnowledgeTriple]:
    """The dialogue's knowledge view: a start-to-target route, per-topic
    attributes, and sampled near-target noise. The gold route is recomputed
    inside this view, so planning is fully determined by what a sample sees."""
    view: set[KnowledgeTriple] = set()
    route = graph.shortest_path(start, target) or [start, target]
    for a, b in zip(route, route[1:]):
        view.add(KnowledgeTriple(min(a, b), "linked", max(a, b)))
    # near-target attribute noise, as knowledge enrichment would add; link
    # edges stay out so the view's route chain remains unambiguous
    ball = graph.nodes_within(target, 2)
    pool = [
        t
        for node in sorted(ball)
        for t in graph.by_subject.get(node, [])
        if t.relation in ("genre", "blurb") and t not in view
    ]
    if pool:
        view.update(rng.sample(pool, min(noise_triples, len(pool))))
    for topic in route:
        for triple in graph.by_subject.get(topic, []):
            if triple.relation in ("genre", "blurb"):
                view.add(triple)
    return view


def _realize_dialogue(
    did: str,
    pairs: list[ActionTopicPair],
    knowledge: set[KnowledgeTriple],
    graph: TripleGraph,
    profile: UserProfile,
    rng: random.Random,
) -> FullDialogue:
    target_topic = pairs[-1].topic
    turns: list[AnnotatedTurn] = []
    for pair in pairs:
        attr = ""
        if pair.action == "discuss attribute":
            genre = [
                t.object
                for t in graph.by_subject.get(pair.topic, [])
                if t.relation == "genre"
            ]
            attr = genre[0] if genre else "popular"
        template = rng.choice(SYSTEM_TEMPLATES[pair.action])
        sys_utt = _fill(template, topic=pair.topic, attr=attr)
        turns.append(AnnotatedTurn("system", sys_utt, len(turns), pair))
        if pair is pairs[-1]:
            user_utt = _fill(rng.choice(USER_ACCEPT_TEMPLATES), topic=target_topic)
        else:
            user_utt = tokens_of(rng.choice(USER_TEMPLATES))
        turns.append(AnnotatedTurn("user", user_utt, len(turns)))

    # attributes of every realized path topic stay in the view
    full_knowledge = set(knowledge)
    for pair in pairs:
        if pair.topic == NULL_TOPIC:
            continue
        for triple in graph.by_subject.get(pair.topic, []):
            if triple.relation in ("genre", "blurb"):
                full_knowledge.add(triple)

    return FullDialogue(did, tuple(turns), frozenset(full_knowledge), profile)


def dialogue_to_samples(dialogue: FullDialogue) -> list[DialogueSample]:
    """One sample per system turn: plan the remaining path, say the next line."""
    target = derive_target(dialogue)
    sys_turns = dialogue.system_turns()
    pairs = [t.pair for t in sys_turns]
    samples = []
    for j, turn in enumerate(sys_turns):
        history = tuple(
            Turn(t.speaker, t.utterance, t.turn_index)
            for t in dialogue.turns[: turn.turn_index]
        )
        samples.append(
            DialogueSample(
                id=f"{dialogue.id}-t{j:02d}",
                knowledge=dialogue.knowledge,
                profile=dialogue.profile,
                history=history,
                gold_path=PlanPath(tuple(pairs[j:]), "forward"),
                target=target,
                gold_utterance=turn.utterance,
            )
        )
    return samples


def generate_synthetic(config: SyntheticConfig, out_dir: str | Path) -> SynthResult:
    """Write dialogues.jsonl, samples.jsonl, graph.jsonl and vocab files."""
    config.validate()
    rng = random.Random(config.seed)
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    topics = topic_names(config.n_topics)
    actions = list(ACTION_POOL[: config.n_actions])
    graph_triples = build_graph(topics, config.graph_branching, rng)
    graph = TripleGraph(graph_triples)

    dist_from: dict[str, dict[str, int]] = {}
    for topic in topics:
        dist_from[topic] = {}
        for hops in (1, 2, 3):
            for node in graph.nodes_within(topic, hops):
                dist_from[topic].setdefault(node, hops if node != topic else 0)

    max_dist = max(1, min(2, config.max_turns // 2 - 2))
    dist_weights = [(1, 0.15), (2, 0.85)]
    dist_weights = [(d, w) for d, w in dist_weights if d <= max_dist]

    dialogues: list[FullDialogue] = []
    for i in range(config.n_dialogues):
        target_topic = topics[rng.randrange(len(topics))]
        dist = rng.choices(
            [d for d, _ in dist_weights], weights=[w for _, w in dist_weights]
        )[0]
        candidates = sorted(
            n for n, d in dist_from[target_topic].items() if d == dist
        )
        while not candidates and dist > 1:
            dist -= 1
            candidates = sorted(
                n for n, d in dist_from[target_topic].items() if d == dist
            )
        if not candidates:
            continue
        start = rng.choice(candidates)
        view = _grounded_view(graph, start, target_topic, rng)
        # the gold route lives inside the dialogue's own knowledge view
        view_graph = TripleGraph(sorted(view, key=lambda t: t.as_list()))
        route = view_graph.shortest_path(start, target_topic)
        if route is None or len(route) < 2:
            continue
        # the profile always names the user's current interest (the route
        # start); the preference question appears exactly when their taste
        # is unknown, so path shape stays readable from context
        attrs = {"interest": start}
        if rng.random() < 0.5:
            attrs["likes"] = topic_category(rng.randrange(2))
        profile = UserProfile.from_dict(attrs)
        with_filler = "likes" not in attrs
        pairs = _build_pairs(route, topics, actions, with_filler)
        if 2 * len(pairs) > config.max_turns and pairs[1].action == "ask preference":
            pairs = [pairs[0]] + pairs[2:]
        dialogues.append(
            _realize_dialogue(f"d{i:04d}", pairs, view, graph, profile, rng)
        )

    samples = [s for d in dialogues for s in dialogue_to_samples(d)]
    for s in samples:
        s.validate()

    _write_dialogues(dialogues, out_dir / "dialogues.jsonl")
    write_samples(samples, out_dir / "samples.jsonl")
    save_graph(graph_triples, out_dir / "graph.jsonl")
    save_vocabs(build_vocabs(samples), out_dir)

    mean_len = sum(len(d.system_turns()) for d in dialogues) / max(1, len(dialogues))
    return SynthResult(
        dialogues_path=out_dir / "dialogues.jsonl",
        samples_path=out_dir / "samples.jsonl",
        graph_path=out_dir / "graph.jsonl",
        n_dialogues=len(dialogues),
        n_samples=len(samples),
        mean_path_len=mean_len,
    )


def _write_dialogues(dialogues: list[FullDialogue], path: Path) -> None:
    import json

    with path.open("w", encoding="utf-8") as fh:
        for d in dialogues:
            record = {
                "id": d.id,
                "knowledge": sorted(t.as_list() for t in d.knowledge),
                "profile": d.profile.as_dict(),
                "turns": [
                    {
                        "speaker": t.speaker,
                        "utterance": " ".join(t.utterance),
                        "pair": [t.pair.action, t.pair.topic] if t.pair else None,
                    }
                    for t in d.turns
                ],
            }
            fh.write(json.dumps(record, sort_keys=True) + "\n")


def load_dialogues(path: str | Path) -> list[FullDialogue]:
    import json

    dialogues = []
    with Path(path).open(encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            rec = json.loads(line)
            turns = tuple(
                AnnotatedTurn(
                    t["speaker"],
                    tokens_of(t["utterance"]),
                    i,
                    ActionTopicPair(*t["pair"]) if t.get("pair") else None,
                )
                for i, t in enumerate(rec["turns"])
            )
            dialogues.append(
                FullDialogue(
                    rec["id"],
                    turns,
                    frozenset(KnowledgeTriple(s, r, o) for s, r, o in rec["knowledge"]),
                    UserProfile.from_dict(rec.get("profile") or {}),
                )
            )
    return dialogues
