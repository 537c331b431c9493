"""Bidirectional path planner: dual encoders, dual decoders, four losses."""

from dialplan.planner.config import ModelConfig, TrainConfig
from dialplan.planner.losses import (
    LossBundle,
    contrastive_loss,
    cosine_similarity,
    gap_loss,
    nll_loss,
)
from dialplan.planner.model import BidirectionalPlanner
from dialplan.planner.negatives import NegativeSet, sample_negatives
from dialplan.planner.training import train_planner, load_planner, save_planner

__all__ = [
    "BidirectionalPlanner",
    "LossBundle",
    "ModelConfig",
    "NegativeSet",
    "TrainConfig",
    "contrastive_loss",
    "cosine_similarity",
    "gap_loss",
    "load_planner",
    "nll_loss",
    "sample_negatives",
    "save_planner",
    "train_planner",
]
