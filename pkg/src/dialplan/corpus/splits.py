"""Train/dev/test-ID/test-OOD splitting with the OOD target-topic guarantee.

Samples are grouped by dialogue (shared id prefix) so one dialogue never
straddles splits. The OOD pool is formed by reserving whole target topics:
every dialogue whose target topic is reserved goes to test_ood, so train and
test_ood target-topic sets are disjoint by construction.
"""

from __future__ import annotations

import json
import random
from collections import defaultdict
from pathlib import Path
from typing import Sequence

from dialplan.corpus.types import DialogueSample, SplitSpec
from dialplan.errors import SplitError

DEFAULT_RATIOS = (0.7, 0.1, 0.1, 0.1)  # train, dev, test_id, test_ood


def make_splits(
    samples: Sequence[DialogueSample],
    ratios: Sequence[float] = DEFAULT_RATIOS,
    seed: int = 0,
) -> SplitSpec:
    if len(ratios) != 4 or abs(sum(ratios) - 1.0) > 1e-6:
        raise SplitError(f"ratios must be 4 fractions summing to 1, got {ratios}")
    if not samples:
        raise SplitError("no samples to split")

    by_dialogue: dict[str, list[DialogueSample]] = defaultdict(list)
    for sample in samples:
        by_dialogue[sample.dialogue_id].append(sample)
    dialogue_topic = {
        did: group[0].target.topic for did, group in by_dialogue.items()
    }
    by_topic: dict[str, list[str]] = defaultdict(list)
    for did in sorted(by_dialogue):
        by_topic[dialogue_topic[did]].append(did)

    if len(by_topic) < 2:
        raise SplitError(
            f"OOD split needs >=2 distinct target topics, corpus has {len(by_topic)}"
        )

    rng = random.Random(seed)
    n_dialogues = len(by_dialogue)
    ood_goal = max(1, round(ratios[3] * n_dialogues))

    # Reserve whole topics for OOD until the dialogue quota is covered,
    # always leaving at least one topic for training.
    topics = sorted(by_topic)
    rng.shuffle(topics)
    ood_topics: list[str] = []
    ood_dialogues: list[str] = []
    for topic in topics:
        if len(ood_dialogues) >= ood_goal:
            break
        if len(ood_topics) >= len(topics) - 1:
            break
        ood_topics.append(topic)
        ood_dialogues.extend(by_topic[topic])
    if not ood_dialogues:
        raise SplitError("could not reserve any target topic for the OOD split")

    remaining = sorted(set(by_dialogue) - set(ood_dialogues))
    if not remaining:
        raise SplitError("OOD reservation consumed every dialogue")
    rng.shuffle(remaining)
    rest = len(remaining)
    id_share = ratios[:3]
    id_total = sum(id_share)
    n_train = round(id_share[0] / id_total * rest)
    n_dev = round(id_share[1] / id_total * rest)
    n_train = max(1, min(n_train, rest - 2)) if rest >= 3 else max(1, rest - 2)
    n_dev = max(1, min(n_dev, rest - n_train - 1)) if rest - n_train >= 2 else 0

    groups = {
        "train": remaining[:n_train],
        "dev": remaining[n_train:n_train + n_dev],
        "test_id": remaining[n_train + n_dev:],
        "test_ood": ood_dialogues,
    }
    spec = SplitSpec()
    for name, dialogue_ids in groups.items():
        ids = [
            s.id
            for did in sorted(dialogue_ids)
            for s in sorted(by_dialogue[did], key=lambda s: s.id)
        ]
        setattr(spec, name, ids)

    spec.validate({s.id: s for s in samples})
    train_topics = {dialogue_topic[d] for d in groups["train"]}
    if train_topics & set(ood_topics):
        raise SplitError("internal error: OOD topics leaked into train")
    return spec


def save_splits(spec: SplitSpec, path: str | Path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    payload = {
        "train": spec.train,
        "dev": spec.dev,
        "test_id": spec.test_id,
        "test_ood": spec.test_ood,
    }
    path.write_text(json.dumps(payload, indent=1), encoding="utf-8")


def load_splits(path: str | Path) -> SplitSpec:
    data = json.loads(Path(path).read_text(encoding="utf-8"))
    return SplitSpec(
        train=list(data["train"]),
        dev=list(data["dev"]),
        test_id=list(data["test_id"]),
        test_ood=list(data["test_ood"]),
    )
