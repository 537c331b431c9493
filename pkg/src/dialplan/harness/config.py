"""Experiment configuration.

Config files are flat key/value text with [sections] (INI). Any value can be
overridden by an environment variable named DIALPLAN_<SECTION>_<KEY> in
upper case, e.g. DIALPLAN_DECODE_BEAM_SIZE=5.
"""

from __future__ import annotations

import configparser
import os
from dataclasses import dataclass, field, fields
from pathlib import Path

from dialplan.corpus.synthetic import SyntheticConfig
from dialplan.decoding.beam import DecodeConfig
from dialplan.errors import ConfigError
from dialplan.planner.config import ModelConfig, TrainConfig
from dialplan.responder.config import ResponderConfig

ENV_PREFIX = "DIALPLAN"


@dataclass
class AblationFlags:
    no_forward_decoder: bool = False
    no_backward_decoder: bool = False
    no_gap_loss: bool = False
    no_contrastive: bool = False
    no_constraints: bool = False
    no_agreement: bool = False

    def validate(self) -> None:
        if self.no_forward_decoder and self.no_backward_decoder:
            raise ConfigError("cannot disable both decoders")
        if (self.no_forward_decoder or self.no_backward_decoder) and not self.no_agreement:
            raise ConfigError(
                "single-decoder ablations imply no_agreement (agreement needs both sides)"
            )

    def training_tag(self) -> str:
        """Suffix for checkpoints; only training-affecting flags matter."""
        parts = []
        if self.no_forward_decoder:
            parts.append("no_forward_decoder")
        if self.no_backward_decoder:
            parts.append("no_backward_decoder")
        if self.no_gap_loss:
            parts.append("no_gap_loss")
        if self.no_contrastive:
            parts.append("no_contrastive")
        return "-".join(parts)

    @classmethod
    def from_names(cls, names: list[str]) -> "AblationFlags":
        flags = cls()
        valid = {f.name for f in fields(cls)}
        for name in names:
            name = name.strip()
            if not name:
                continue
            if name not in valid:
                raise ConfigError(f"unknown ablation flag {name!r}; valid: {sorted(valid)}")
            setattr(flags, name, True)
        # single-decoder runs cannot use the agreement reward
        if flags.no_forward_decoder or flags.no_backward_decoder:
            flags.no_agreement = True
        flags.validate()
        return flags


@dataclass
class ServiceConfig:
    host: str = "127.0.0.1"
    port: int = 8321
    max_turns: int = 15
    targets_seed: int = 13


@dataclass
class ExperimentConfig:
    workdir: Path = Path("runs/default")
    seed: int = 13
    corpus: SyntheticConfig = field(default_factory=SyntheticConfig)
    enrich_hops: int = 2
    enrich_budget: int = 20
    split_ratios: tuple[float, float, float, float] = (0.7, 0.1, 0.1, 0.1)
    planner: ModelConfig = field(default_factory=ModelConfig)
    planner_train: TrainConfig = field(default_factory=TrainConfig)
    decode: DecodeConfig = field(default_factory=DecodeConfig)
    responder: ResponderConfig = field(default_factory=ResponderConfig)
    responder_train: TrainConfig = field(default_factory=TrainConfig)
    ablation: AblationFlags = field(default_factory=AblationFlags)
    service: ServiceConfig = field(default_factory=ServiceConfig)

    # -- derived paths --

    @property
    def data_dir(self) -> Path:
        return self.workdir / "data"

    @property
    def prepared_dir(self) -> Path:
        return self.workdir / "prepared"

    @property
    def checkpoints_dir(self) -> Path:
        return self.workdir / "checkpoints"

    @property
    def outputs_dir(self) -> Path:
        return self.workdir / "outputs"

    @property
    def sessions_dir(self) -> Path:
        return self.workdir / "sessions"

    def planner_ckpt_dir(self) -> Path:
        tag = self.ablation.training_tag()
        name = "planner" if not tag else f"planner-{tag}"
        return self.checkpoints_dir / name

    def responder_ckpt_dir(self, with_plans: bool = True) -> Path:
        return self.checkpoints_dir / ("responder" if with_plans else "responder-noplan")

    def effective_planner_config(self) -> ModelConfig:
        cfg = ModelConfig(**{f.name: getattr(self.planner, f.name) for f in fields(ModelConfig)})
        if self.ablation.no_forward_decoder:
            cfg.use_forward = False
        if self.ablation.no_backward_decoder:
            cfg.use_backward = False
        if self.ablation.no_gap_loss:
            cfg.gap_weight = 0.0
        if self.ablation.no_contrastive:
            cfg.contrastive_weight = 0.0
        cfg.validate()
        return cfg

    def effective_decode_config(self) -> DecodeConfig:
        cfg = DecodeConfig(**{f.name: getattr(self.decode, f.name) for f in fields(DecodeConfig)})
        if self.ablation.no_constraints:
            cfg.use_constraints = False
        if self.ablation.no_agreement:
            cfg.use_agreement = False
        return cfg


_SECTION_BUILDERS = {
    "corpus": ("corpus", SyntheticConfig),
    "planner": ("planner", ModelConfig),
    "planner_train": ("planner_train", TrainConfig),
    "decode": ("decode", DecodeConfig),
    "responder": ("responder", ResponderConfig),
    "responder_train": ("responder_train", TrainConfig),
    "service": ("service", ServiceConfig),
}


def _coerce(raw: str, target_type: type):
    if target_type is bool:
        lowered = raw.strip().lower()
        if lowered in ("1", "true", "yes", "on"):
            return True
        if lowered in ("0", "false", "no", "off"):
            return False
        raise ConfigError(f"bad boolean value {raw!r}")
    if target_type is int:
        return int(raw)
    if target_type is float:
        return float(raw)
    if target_type is Path:
        return Path(raw)
    return raw


def _env_override(section: str, key: str) -> str | None:
    return os.environ.get(f"{ENV_PREFIX}_{section.upper()}_{key.upper()}")


def _apply_section(obj, section: str, parser: configparser.ConfigParser) -> set[str]:
    """Apply file + env overrides to a config dataclass; returns keys set."""
    known = {f.name: f for f in fields(obj)}
    file_items = dict(parser.items(section)) if parser.has_section(section) else {}
    explicit: set[str] = set()
    for name in known:
        raw = _env_override(section, name)
        if raw is None:
            raw = file_items.get(name)
        if raw is None:
            continue
        current = getattr(obj, name)
        setattr(obj, name, _coerce(raw, type(current)))
        explicit.add(name)
    unknown = set(file_items) - set(known)
    if unknown:
        raise ConfigError(f"unknown keys in [{section}]: {sorted(unknown)}")
    return explicit


def load_experiment_config(path: str | Path | None = None) -> ExperimentConfig:
    parser = configparser.ConfigParser()
    if path is not None:
        text = Path(path).read_text(encoding="utf-8")
        parser.read_string(text)
    cfg = ExperimentConfig()

    exp_items = dict(parser.items("experiment")) if parser.has_section("experiment") else {}
    for key in ("workdir", "seed", "enrich_hops", "enrich_budget", "split_ratios"):
        raw = _env_override("experiment", key)
        if raw is None:
            raw = exp_items.get(key)
        if raw is None:
            continue
        if key == "workdir":
            cfg.workdir = Path(raw)
        elif key == "split_ratios":
            parts = [float(x) for x in raw.split(",")]
            if len(parts) != 4:
                raise ConfigError("split_ratios needs 4 comma-separated fractions")
            cfg.split_ratios = tuple(parts)  # type: ignore[assignment]
        else:
            setattr(cfg, key, int(raw))
    unknown = set(exp_items) - {"workdir", "seed", "enrich_hops", "enrich_budget", "split_ratios"}
    if unknown:
        raise ConfigError(f"unknown keys in [experiment]: {sorted(unknown)}")

    for section, (attr, _) in _SECTION_BUILDERS.items():
        explicit = _apply_section(getattr(cfg, attr), section, parser)
        target = getattr(cfg, attr)
        # keep the derived feed-forward width in step with an overridden
        # hidden size unless the section pinned it explicitly
        if "hidden_size" in explicit and "ffn_size" not in explicit:
            target.ffn_size = 4 * target.hidden_size

    ablate_items = dict(parser.items("ablation")) if parser.has_section("ablation") else {}
    names = []
    for key, raw in ablate_items.items():
        if _coerce(raw, bool):
            names.append(key)
    for flag in fields(AblationFlags):
        raw = _env_override("ablation", flag.name)
        if raw is not None and _coerce(raw, bool):
            names.append(flag.name)
    if names:
        cfg.ablation = AblationFlags.from_names(names)
    return cfg
