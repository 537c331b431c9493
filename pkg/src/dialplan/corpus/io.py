"""Corpus file ingestion and serialization.

Corpus files are UTF-8 JSON lines, one dialogue sample per line:
{id, knowledge: [[s,r,o],...], profile: {k:v}, history: [{speaker,utterance}],
 gold_path: [[action,topic],...], target: [action,topic], gold_utterance}
Unknown fields are ignored; field order is free.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable

from dialplan.corpus.types import (
    ActionTopicPair,
    DialogueSample,
    KnowledgeTriple,
    PlanPath,
    Target,
    Turn,
    UserProfile,
)
from dialplan.errors import ParseError, ValidationError
from dialplan.text import tokens_of
from dialplan.vocab import NULL_TOPIC, Vocab


@dataclass
class CorpusVocabs:
    actions: Vocab
    topics: Vocab
    words: Vocab


def sample_to_record(sample: DialogueSample) -> dict:
    return {
        "id": sample.id,
        "knowledge": sorted(t.as_list() for t in sample.knowledge),
        "profile": sample.profile.as_dict(),
        "history": [
            {"speaker": t.speaker, "utterance": " ".join(t.utterance)}
            for t in sample.history
        ],
        "gold_path": [[p.action, p.topic] for p in sample.gold_path.pairs],
        "target": [sample.target.action, sample.target.topic],
        "gold_utterance": " ".join(sample.gold_utterance),
    }


def record_to_sample(record: dict) -> DialogueSample:
    try:
        knowledge = frozenset(
            KnowledgeTriple(s, r, o) for s, r, o in record["knowledge"]
        )
        history = tuple(
            Turn(t["speaker"], tokens_of(t["utterance"]), i)
            for i, t in enumerate(record["history"])
        )
        pairs = tuple(ActionTopicPair(a, z) for a, z in record["gold_path"])
        target = Target(record["target"][0], record["target"][1])
        sample = DialogueSample(
            id=str(record["id"]),
            knowledge=knowledge,
            profile=UserProfile.from_dict(record.get("profile") or {}),
            history=history,
            gold_path=PlanPath(pairs, "forward"),
            target=target,
            gold_utterance=tokens_of(record["gold_utterance"]),
        )
    except KeyError as exc:
        raise ParseError(f"missing field {exc}") from exc
    except (TypeError, IndexError) as exc:
        raise ParseError(f"malformed record: {exc}") from exc
    return sample


def load_corpus(
    path: str | Path,
    vocabs: CorpusVocabs | None = None,
) -> list[DialogueSample]:
    """Parse a corpus file, validating every sample invariant.

    When `vocabs` is given, actions and topics are additionally validated
    against the closed vocabularies.
    """
    samples: list[DialogueSample] = []
    path = Path(path)
    with path.open(encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ParseError(f"invalid JSON: {exc.msg}", line=lineno) from exc
            try:
                sample = record_to_sample(record)
            except (ParseError, ValidationError) as exc:
                raise ParseError(f"{exc}", line=lineno) from exc
            sample.validate()
            if vocabs is not None:
                _validate_against_vocabs(sample, vocabs)
            samples.append(sample)
    return samples


def _validate_against_vocabs(sample: DialogueSample, vocabs: CorpusVocabs) -> None:
    for pair in sample.gold_path.pairs + (sample.target.as_pair(),):
        if pair.action not in vocabs.actions:
            raise ValidationError(f"action not in vocabulary: {pair.action!r}", sample.id)
        if pair.topic not in vocabs.topics:
            raise ValidationError(f"topic not in vocabulary: {pair.topic!r}", sample.id)


def write_samples(samples: Iterable[DialogueSample], path: str | Path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8") as fh:
        for sample in samples:
            fh.write(json.dumps(sample_to_record(sample), sort_keys=True) + "\n")


def build_vocabs(samples: Iterable[DialogueSample]) -> CorpusVocabs:
    """Build closed action/topic vocabularies and the word vocabulary."""
    actions: set[str] = set()
    topics: set[str] = {NULL_TOPIC}
    words: set[str] = set()
    for sample in samples:
        for pair in sample.gold_path.pairs:
            actions.add(pair.action)
            topics.add(pair.topic)
            words.update(pair.action.split())
            words.update(pair.topic.split())
        actions.add(sample.target.action)
        topics.add(sample.target.topic)
        words.update(sample.target.action.split())
        words.update(sample.target.topic.split())
        for turn in sample.history:
            words.update(turn.utterance)
        words.update(sample.gold_utterance)
        for triple in sample.knowledge:
            for text in triple.as_list():
                words.update(text.split())
        for key, value in sample.profile.attributes:
            words.update(key.split())
            words.update(value.split())
    return CorpusVocabs(
        actions=Vocab(sorted(actions), add_specials=False),
        topics=Vocab(sorted(topics), add_specials=False),
        words=Vocab(sorted(words)),
    )


def save_vocabs(vocabs: CorpusVocabs, directory: str | Path) -> None:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    vocabs.actions.save(directory / "actions.txt")
    vocabs.topics.save(directory / "topics.txt")
    vocabs.words.save(directory / "words.txt")


def load_vocabs(directory: str | Path) -> CorpusVocabs:
    directory = Path(directory)
    return CorpusVocabs(
        actions=Vocab.load(directory / "actions.txt"),
        topics=Vocab.load(directory / "topics.txt"),
        words=Vocab.load(directory / "words.txt"),
    )


def load_graph(path: str | Path) -> list[KnowledgeTriple]:
    """Line-delimited [s, r, o] triples."""
    triples: list[KnowledgeTriple] = []
    with Path(path).open(encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                s, r, o = json.loads(line)
            except (json.JSONDecodeError, ValueError) as exc:
                raise ParseError(f"bad graph triple: {exc}", line=lineno) from exc
            triples.append(KnowledgeTriple(s, r, o))
    return triples


def save_graph(triples: Iterable[KnowledgeTriple], path: str | Path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8") as fh:
        for triple in sorted(triples, key=lambda t: t.as_list()):
            fh.write(json.dumps(triple.as_list()) + "\n")
