"""Token-level (de)serialization of plan paths.

A path renders one "[A] <action words> [T] <topic words>" span per pair, in
path order, terminated by a single [EOS]:

    [A] greeting [T] NULL [A] recommend media [T] amber atlas [EOS]
"""

from __future__ import annotations

from dialplan.corpus.types import ActionTopicPair, Direction, PlanPath
from dialplan.errors import ParseError
from dialplan.vocab import ACTION_MARK, EOS, TOPIC_MARK


def serialize_path(path: PlanPath) -> list[str]:
    tokens: list[str] = []
    for pair in path.pairs:
        tokens.append(ACTION_MARK)
        tokens.extend(pair.action.split())
        tokens.append(TOPIC_MARK)
        tokens.extend(pair.topic.split())
    tokens.append(EOS)
    return tokens


def parse_path(tokens: list[str], direction: Direction = "forward") -> PlanPath:
    """Inverse of serialize_path.

    Tokens after the first [EOS] are ignored; a missing [EOS] yields a path
    flagged as truncated. Raises ParseError when the sequence does not start
    with [A] or a [T] appears before any [A].
    """
    if not tokens or tokens[0] != ACTION_MARK:
        raise ParseError(f"path must start with {ACTION_MARK}, got {tokens[:1]}")
    pairs: list[ActionTopicPair] = []
    action_words: list[str] = []
    topic_words: list[str] = []
    in_topic = False
    truncated = True

    def flush() -> None:
        if not action_words or not topic_words:
            raise ParseError(
                f"incomplete pair: action={action_words} topic={topic_words}"
            )
        pairs.append(ActionTopicPair(" ".join(action_words), " ".join(topic_words)))
        action_words.clear()
        topic_words.clear()

    started = False
    for tok in tokens:
        if tok == ACTION_MARK:
            if started:
                flush()
            started = True
            in_topic = False
        elif tok == TOPIC_MARK:
            if not started:
                raise ParseError(f"{TOPIC_MARK} before any {ACTION_MARK}")
            if in_topic:
                raise ParseError(f"duplicate {TOPIC_MARK} in pair")
            in_topic = True
        elif tok == EOS:
            flush()
            truncated = False
            break
        else:
            (topic_words if in_topic else action_words).append(tok)
    else:
        # ran off the end without [EOS]; keep what we can
        if started and action_words and topic_words:
            flush()
    if not pairs:
        raise ParseError("no complete pairs in token sequence")
    return PlanPath(tuple(pairs), direction, truncated=truncated)


def path_pair_spans(tokens: list[str]) -> list[tuple[int, int]]:
    """Half-open token index ranges [start, end) of each pair span.

    A span starts at its [A] marker and ends before the next [A] or the
    [EOS]/sequence end. Used to align decoder hidden states to pairs.
    """
    spans: list[tuple[int, int]] = []
    start: int | None = None
    for i, tok in enumerate(tokens):
        if tok == ACTION_MARK:
            if start is not None:
                spans.append((start, i))
            start = i
        elif tok == EOS:
            if start is not None:
                spans.append((start, i))
                start = None
            break
    else:
        if start is not None:
            spans.append((start, len(tokens)))
    return spans
