"""Experiment orchestration: config, CLI, pipelines, HTTP session service."""

from dialplan.harness.config import AblationFlags, ExperimentConfig

__all__ = ["AblationFlags", "ExperimentConfig"]
