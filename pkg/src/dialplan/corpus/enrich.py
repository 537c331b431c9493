"""Knowledge enrichment from a global triple store.

Samples get extra triples drawn uniformly without replacement from the
neighborhood within `hops` hops of their target topic. User-review triples
never enter the knowledge set.
"""

from __future__ import annotations

import random
from collections import defaultdict, deque
from dataclasses import replace
from typing import Iterable

from dialplan.corpus.types import DialogueSample, KnowledgeTriple
from dialplan.errors import EnrichmentError

REVIEW_RELATIONS = frozenset({"review", "user_review", "reviews"})


LINK_RELATIONS = frozenset({"linked", "linked_to", "related"})


class TripleGraph:
    """Adjacency view over a triple store.

    Nodes are subject/object strings. A triple induces an edge when its
    relation is a known linking relation or its object also appears as a
    subject (topic-to-topic facts in unlabeled data).
    """

    def __init__(self, triples: Iterable[KnowledgeTriple]):
        self.triples = list(triples)
        self.by_subject: dict[str, list[KnowledgeTriple]] = defaultdict(list)
        self._neighbors: dict[str, set[str]] = defaultdict(set)
        subjects = {t.subject for t in self.triples}
        for t in self.triples:
            self.by_subject[t.subject].append(t)
            if t.relation in LINK_RELATIONS or t.object in subjects:
                self._neighbors[t.subject].add(t.object)
                self._neighbors[t.object].add(t.subject)

    def __contains__(self, node: str) -> bool:
        return node in self.by_subject or node in self._neighbors

    def neighbors(self, node: str) -> list[str]:
        return sorted(self._neighbors[node])

    def nodes_within(self, start: str, hops: int) -> set[str]:
        """BFS ball of radius `hops` around `start` (inclusive)."""
        seen = {start}
        frontier = deque([(start, 0)])
        while frontier:
            node, dist = frontier.popleft()
            if dist == hops:
                continue
            for nxt in self.neighbors(node):
                if nxt not in seen:
                    seen.add(nxt)
                    frontier.append((nxt, dist + 1))
        return seen

    def shortest_path(self, start: str, goal: str) -> list[str] | None:
        """Deterministic BFS shortest path (lexicographic neighbor order)."""
        if start == goal:
            return [start]
        prev: dict[str, str] = {start: start}
        frontier = deque([start])
        while frontier:
            node = frontier.popleft()
            for nxt in self.neighbors(node):
                if nxt in prev:
                    continue
                prev[nxt] = node
                if nxt == goal:
                    path = [goal]
                    while path[-1] != start:
                        path.append(prev[path[-1]])
                    return list(reversed(path))
                frontier.append(nxt)
        return None


def enrich_knowledge(
    sample: DialogueSample,
    graph: TripleGraph,
    hops: int = 2,
    budget: int = 20,
    seed: int = 0,
) -> DialogueSample:
    """Superset the sample's knowledge with triples near its target topic.

    hops=0 is the identity. Candidate triples have their subject within
    `hops` hops of the target topic; review triples are excluded. At most
    `budget` new triples are added, sampled uniformly without replacement.
    """
    if hops == 0:
        return sample
    topic = sample.target.topic
    if topic not in graph:
        raise EnrichmentError(f"target topic {topic!r} absent from graph")
    ball = graph.nodes_within(topic, hops)
    candidates = [
        t
        for node in sorted(ball)
        for t in graph.by_subject.get(node, [])
        if t.relation not in REVIEW_RELATIONS and t not in sample.knowledge
    ]
    rng = random.Random(seed)
    take = candidates if len(candidates) <= budget else rng.sample(candidates, budget)
    return replace(sample, knowledge=sample.knowledge | frozenset(take))
