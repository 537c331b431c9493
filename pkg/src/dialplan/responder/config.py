"""Responder model and control configuration."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass
from pathlib import Path

from dialplan.errors import ConfigError


@dataclass
class ResponderConfig:
    hidden_size: int = 768
    lm_layers: int = 4
    lm_heads: int = 8
    plan_layers: int = 3
    plan_heads: int = 8
    ffn_size: int = 0  # 0 -> 4 * hidden_size
    vocab_size: int = 0
    max_context_len: int = 512
    max_gen_len: int = 100
    max_plan_len: int = 96
    dropout: float = 0.1
    step_size: float = 0.01  # cache perturbation step
    updates_per_token: int = 1
    use_full_plan: bool = True  # steer on the whole plan vs the remaining suffix
    use_plan_section: bool = True  # the no-plan baseline trains without [P]

    def __post_init__(self):
        if self.ffn_size == 0:
            self.ffn_size = 4 * self.hidden_size
        self.validate()

    def validate(self) -> None:
        if self.hidden_size % self.lm_heads or self.hidden_size % self.plan_heads:
            raise ConfigError("hidden_size must be divisible by head counts")
        if self.step_size < 0:
            raise ConfigError("step_size must be >= 0")
        if self.updates_per_token < 0:
            raise ConfigError("updates_per_token must be >= 0")
        if self.max_gen_len < 1:
            raise ConfigError("max_gen_len must be positive")

    def save(self, path: str | Path) -> None:
        Path(path).write_text(
            json.dumps(asdict(self), indent=1, sort_keys=True), encoding="utf-8"
        )

    @classmethod
    def load(cls, path: str | Path) -> "ResponderConfig":
        return cls(**json.loads(Path(path).read_text(encoding="utf-8")))
