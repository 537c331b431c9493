"""Corpus data model, ingestion, splitting, and synthetic generation."""

from dialplan.corpus.types import (
    ActionTopicPair,
    DialogueSample,
    FullDialogue,
    AnnotatedTurn,
    KnowledgeTriple,
    PlanPath,
    SplitSpec,
    Target,
    Turn,
    UserProfile,
)
from dialplan.corpus.paths import serialize_path, parse_path, path_pair_spans
from dialplan.corpus.io import (
    load_corpus,
    load_graph,
    save_graph,
    write_samples,
    build_vocabs,
    CorpusVocabs,
)
from dialplan.corpus.targets import derive_target
from dialplan.corpus.enrich import TripleGraph, enrich_knowledge
from dialplan.corpus.splits import make_splits
from dialplan.corpus.labels import knowledge_pseudo_labels
from dialplan.corpus.synthetic import SyntheticConfig, generate_synthetic

__all__ = [
    "ActionTopicPair",
    "AnnotatedTurn",
    "CorpusVocabs",
    "DialogueSample",
    "FullDialogue",
    "KnowledgeTriple",
    "PlanPath",
    "SplitSpec",
    "SyntheticConfig",
    "Target",
    "TripleGraph",
    "Turn",
    "UserProfile",
    "build_vocabs",
    "derive_target",
    "enrich_knowledge",
    "generate_synthetic",
    "knowledge_pseudo_labels",
    "load_corpus",
    "load_graph",
    "make_splits",
    "parse_path",
    "path_pair_spans",
    "save_graph",
    "serialize_path",
    "write_samples",
]
