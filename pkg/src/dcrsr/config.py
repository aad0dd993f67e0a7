"""Experiment configuration: typed dataclasses behind a flat ``key = value``
text format with dotted section names (``train.total_iters = 500``).

Unknown keys are rejected, values are coerced from the dataclass field types,
and a dump/parse round trip reproduces the configuration exactly (floats are
dumped with ``repr``).
"""

from __future__ import annotations

import dataclasses
import hashlib
from dataclasses import dataclass, field
from pathlib import Path

from .exceptions import ConfigError
from .generator import GeneratorConfig
from .losses import LossWeights
from .reconstruction import DRMConfig

PHASES = ("SAM", "VAM")


@dataclass
class ModelConfig:
    n_c: int = 64
    n_g: int = 32
    num_blocks: int = 3
    scale: int = 4
    inter_block_shortcut: tuple[int, int] | None = (0, 1)
    fusion_mode: str = "concat_conv"
    disc_width: int = 64

    def generator_config(self) -> GeneratorConfig:
        return GeneratorConfig(
            n_c=self.n_c,
            n_g=self.n_g,
            num_blocks=self.num_blocks,
            scale=self.scale,
            inter_block_shortcut=self.inter_block_shortcut,
        )

    def drm_config(self) -> DRMConfig:
        return DRMConfig(fusion_mode=self.fusion_mode, scale=self.scale)


@dataclass
class DataConfig:
    root: str = ""
    augment: bool = True


@dataclass
class TrainConfig:
    phase: str = "SAM"
    total_iters: int = 800_000
    batch_size: int = 16
    # (start_iter, hr_patch) pairs; sorted, first entry at iteration 0.
    hr_patch_schedule: tuple[tuple[int, int], ...] = ((0, 128), (400_000, 160))
    lr_schedule: str = "sgdr"
    lr_g: float = 3e-4
    lr_d: float = 1e-4
    sgdr_cycle0: int = 100_000
    sgdr_t_mult: int = 2
    sgdr_eta_min: float = 1e-7
    decay_ratio: float = 0.5
    decay_every: int = 5_000
    warmup_iters: int = 10_000
    warmup_multiplier: float = 1.0
    seed: int = 0
    checkpoint_every: int = 50_000
    log_every: int = 100

    def validate(self) -> None:
        if self.phase not in PHASES:
            raise ConfigError(f"train.phase must be one of {PHASES}")
        if self.lr_schedule not in ("sgdr", "step"):
            raise ConfigError("train.lr_schedule must be 'sgdr' or 'step'")
        if self.lr_g <= 0 or self.lr_d <= 0:
            raise ConfigError("learning rates must be positive")
        if not self.hr_patch_schedule or self.hr_patch_schedule[0][0] != 0:
            raise ConfigError("hr_patch_schedule must start at iteration 0")
        starts = [s for s, _ in self.hr_patch_schedule]
        if starts != sorted(starts):
            raise ConfigError("hr_patch_schedule must be sorted by start iteration")


@dataclass
class LossConfig:
    w_pixel: float = 0.01
    w_gan: float = 0.005
    w_feat: float = 1.0
    extractor_weights: str = ""
    extractor_seed: int = 0

    def weights(self) -> LossWeights:
        return LossWeights(w_pixel=self.w_pixel, w_gan=self.w_gan, w_feat=self.w_feat)


@dataclass
class ExperimentConfig:
    model: ModelConfig = field(default_factory=ModelConfig)
    data: DataConfig = field(default_factory=DataConfig)
    train: TrainConfig = field(default_factory=TrainConfig)
    loss: LossConfig = field(default_factory=LossConfig)


def vam_defaults() -> ExperimentConfig:
    """The adversarial-phase counterpart of the pixel-phase defaults."""
    cfg = ExperimentConfig()
    cfg.train.phase = "VAM"
    cfg.train.total_iters = 80_000
    cfg.train.hr_patch_schedule = ((0, 160), (40_000, 128))
    cfg.train.lr_schedule = "step"
    cfg.train.lr_g = 1e-3
    cfg.train.lr_d = 1e-4
    cfg.train.checkpoint_every = 10_000
    return cfg


# ---------------------------------------------------------------------------
# flat text format


def _format_value(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    if value is None:
        return "none"
    if isinstance(value, tuple):
        if value and isinstance(value[0], tuple):  # patch schedule
            return ",".join(f"{s}:{p}" for s, p in value)
        return ",".join(str(v) for v in value)
    return str(value)


def _parse_value(text: str, template) -> object:
    text = text.strip()
    if isinstance(template, bool):
        if text.lower() in ("true", "1", "yes"):
            return True
        if text.lower() in ("false", "0", "no"):
            return False
        raise ConfigError(f"expected a boolean, got {text!r}")
    if isinstance(template, int):
        try:
            return int(text)
        except ValueError as exc:
            raise ConfigError(f"expected an integer, got {text!r}") from exc
    if isinstance(template, float):
        try:
            return float(text)
        except ValueError as exc:
            raise ConfigError(f"expected a number, got {text!r}") from exc
    if isinstance(template, tuple) or template is None:
        if text.lower() == "none":
            return None
        try:
            if ":" in text:
                pairs = []
                for item in text.split(","):
                    s, p = item.split(":")
                    pairs.append((int(s), int(p)))
                return tuple(pairs)
            return tuple(int(v) for v in text.split(","))
        except ValueError as exc:
            raise ConfigError(f"cannot parse tuple value {text!r}") from exc
    return text


def dump_config(cfg: ExperimentConfig) -> str:
    lines = []
    for section_name in ("model", "data", "train", "loss"):
        section = getattr(cfg, section_name)
        for f in dataclasses.fields(section):
            lines.append(
                f"{section_name}.{f.name} = "
                f"{_format_value(getattr(section, f.name))}"
            )
    return "\n".join(lines) + "\n"


def apply_setting(cfg: ExperimentConfig, key: str, value: str) -> None:
    """Apply one dotted ``section.field`` assignment; unknown keys raise."""
    section_name, _, field_name = key.partition(".")
    if not field_name or section_name not in ("model", "data", "train", "loss"):
        raise ConfigError(f"unknown config key {key!r}")
    section = getattr(cfg, section_name)
    names = {f.name for f in dataclasses.fields(section)}
    if field_name not in names:
        raise ConfigError(f"unknown config key {key!r}")
    template = getattr(section, field_name)
    setattr(section, field_name, _parse_value(value, template))


def parse_config_text(text: str, base: ExperimentConfig | None = None) -> ExperimentConfig:
    """Parse flat config text over ``base`` (library defaults when None)."""
    cfg = base if base is not None else ExperimentConfig()
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ConfigError(f"expected 'key = value', got {raw!r}", line=lineno)
        key, _, value = line.partition("=")
        try:
            apply_setting(cfg, key.strip(), value.strip())
        except ConfigError as exc:
            raise ConfigError(str(exc), line=lineno) from exc
    return cfg


def load_config(path: str | Path, base: ExperimentConfig | None = None) -> ExperimentConfig:
    return parse_config_text(Path(path).read_text(), base=base)


def apply_overrides(cfg: ExperimentConfig, overrides: list[str]) -> None:
    """Apply ``key=value`` strings (CLI overrides) after config parse."""
    for item in overrides:
        if "=" not in item:
            raise ConfigError(f"override {item!r} is not key=value")
        key, _, value = item.partition("=")
        apply_setting(cfg, key.strip(), value.strip())


def config_hash(cfg: ExperimentConfig) -> int:
    """Stable 64-bit hash of the flattened configuration."""
    digest = hashlib.blake2b(dump_config(cfg).encode("utf-8"), digest_size=8)
    return int.from_bytes(digest.digest(), "little")
