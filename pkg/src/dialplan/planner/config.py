"""Planner model and training configuration."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass
from pathlib import Path

from dialplan.errors import ConfigError


@dataclass
class ModelConfig:
    hidden_size: int = 768
    encoder_layers: int = 4
    encoder_heads: int = 8
    decoder_layers: int = 6
    decoder_heads: int = 8
    ffn_size: int = 0  # 0 -> 4 * hidden_size
    vocab_size: int = 0  # filled from the corpus vocabulary
    max_context_len: int = 512
    max_target_len: int = 32
    max_path_len: int = 96
    dropout: float = 0.1
    temperature: float = 0.1
    gap_weight: float = 0.1
    contrastive_weight: float = 1.0
    num_negatives: int = 3
    use_backward: bool = True
    use_forward: bool = True
    pretrained_encoder_path: str = ""  # optional externally supplied weights

    def __post_init__(self):
        if self.ffn_size == 0:
            self.ffn_size = 4 * self.hidden_size
        self.validate()

    def validate(self) -> None:
        if self.hidden_size % self.encoder_heads or self.hidden_size % self.decoder_heads:
            raise ConfigError("hidden_size must be divisible by head counts")
        if self.temperature <= 0:
            raise ConfigError("temperature must be positive")
        if self.num_negatives < 1:
            raise ConfigError("num_negatives must be >= 1")
        if not (self.use_backward or self.use_forward):
            raise ConfigError("at least one decoder direction must be enabled")

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=1, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "ModelConfig":
        return cls(**json.loads(text))

    def save(self, path: str | Path) -> None:
        Path(path).write_text(self.to_json(), encoding="utf-8")

    @classmethod
    def load(cls, path: str | Path) -> "ModelConfig":
        return cls.from_json(Path(path).read_text(encoding="utf-8"))


@dataclass
class TrainConfig:
    lr: float = 2e-5
    warmup_steps: int = 3000
    train_steps: int = 10000
    batch_size: int = 6
    seed: int = 13
    resample_negatives: bool = True  # fresh negatives each step vs frozen per sample
    log_every: int = 25

    def validate(self) -> None:
        if self.train_steps < 1 or self.batch_size < 1:
            raise ConfigError("train_steps and batch_size must be positive")
        if self.lr <= 0:
            raise ConfigError("lr must be positive")
