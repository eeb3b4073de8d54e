"""Flat ``key=value`` run configuration.

Blank lines and ``#`` comments are ignored.  Unknown keys are rejected and
``seed`` has no default: every run names its seed explicitly.
"""

from __future__ import annotations

from dataclasses import dataclass, fields
from pathlib import Path

from afa.augment import AfaConfig, VisualAugConfig
from afa.data import SyntheticSpec
from afa.errors import ConfigError
from afa.nn.losses import LossConfig, LossMode
from afa.nn.model import ModelSpec
from afa.nn.train import SETTINGS
from afa.robustness.constants import CORRUPTION_KINDS
from afa.robustness.heatmap import HeatmapSpec


def _bool(text: str) -> bool:
    lowered = text.strip().lower()
    if lowered in ("1", "true", "yes", "on"):
        return True
    if lowered in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _ints(text: str) -> tuple[int, ...]:
    return tuple(int(t) for t in text.split(",") if t.strip())


def _names(text: str) -> tuple[str, ...]:
    return tuple(t.strip() for t in text.split(",") if t.strip())


def _fmt(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, tuple):
        return ",".join(str(v) for v in value)
    return str(value)


@dataclass(frozen=True)
class RunConfig:
    seed: int
    data_image_size: int = 32
    data_num_classes: int = 6
    data_train_per_class: int = 100
    data_test_per_class: int = 50
    data_noise: float = 0.05
    model_channels: tuple[int, ...] = (8, 16, 32)
    afa_mean_strength: float = 10.0
    afa_clamp: bool = True
    visual_crop_padding: int = 4
    visual_hflip_prob: float = 0.5
    loss_mode: str = "ace"
    loss_jsd_coeff: float = 10.0
    train_setting: str = "afa_aux"
    train_batch_size: int = 32
    optim_lr: float = 0.05
    optim_momentum: float = 0.9
    optim_nesterov: bool = True
    optim_weight_decay: float = 5e-4
    epochs: int = 15
    eval_kinds: tuple[str, ...] = CORRUPTION_KINDS
    eval_heatmap_v: float = 4.0
    eval_grid: int = 8
    eval_seq_frames: int = 6
    eval_seq_images: int = 60

    def __post_init__(self):
        if self.train_setting not in SETTINGS:
            raise ConfigError(f"train.setting must be one of {SETTINGS}")
        try:
            LossMode(self.loss_mode)
        except ValueError:
            raise ConfigError(f"loss.mode must be one of {[m.value for m in LossMode]}") from None
        unknown = set(self.eval_kinds) - set(CORRUPTION_KINDS)
        if unknown:
            raise ConfigError(f"unknown corruption kinds {sorted(unknown)}")
        if self.epochs < 0 or self.eval_seq_frames < 2 or self.eval_seq_images < 1:
            raise ConfigError("epochs >= 0, eval.seq_frames >= 2 and eval.seq_images >= 1 required")

    # -- derived component configs ----------------------------------------

    def synthetic_spec(self) -> SyntheticSpec:
        return SyntheticSpec(
            image_size=self.data_image_size,
            num_classes=self.data_num_classes,
            train_per_class=self.data_train_per_class,
            test_per_class=self.data_test_per_class,
            noise=self.data_noise,
            seed=self.seed,
        )

    def model_spec(self) -> ModelSpec:
        blocks = tuple((ch, 3, 1 if i == 0 else 2) for i, ch in enumerate(self.model_channels))
        m = self.data_image_size
        return ModelSpec((3, m, m), blocks, self.data_num_classes)

    def afa_config(self) -> AfaConfig:
        return AfaConfig(self.afa_mean_strength, self.data_image_size, clamp=self.afa_clamp)

    def visual_config(self) -> VisualAugConfig:
        return VisualAugConfig(self.visual_crop_padding, self.visual_hflip_prob)

    def loss_config(self) -> LossConfig:
        return LossConfig(LossMode(self.loss_mode), self.loss_jsd_coeff)

    def heatmap_spec(self, v: float | None = None, grid: int | None = None) -> HeatmapSpec:
        return HeatmapSpec(self.eval_grid if grid is None else grid, self.eval_heatmap_v if v is None else v)

    def replace(self, **changes) -> "RunConfig":
        values = {f.name: getattr(self, f.name) for f in fields(self)}
        values.update(changes)
        return RunConfig(**values)

    # -- text form ---------------------------------------------------------

    def to_text(self) -> str:
        return "".join(f"{_key(f.name)}={_fmt(getattr(self, f.name))}\n" for f in fields(self))


_PARSERS = {int: int, float: float, bool: _bool, str: str}
_TUPLE_PARSERS = {"model_channels": _ints, "eval_kinds": _names}


def _key(field_name: str) -> str:
    head, _, tail = field_name.partition("_")
    if head in ("data", "model", "afa", "visual", "loss", "train", "optim", "eval"):
        return f"{head}.{tail}"
    return field_name


def parse_config(text: str) -> RunConfig:
    by_key = {_key(f.name): f for f in fields(RunConfig)}
    values = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        key, value = key.strip(), value.strip()
        if not sep:
            raise ConfigError(f"line {lineno}: expected key=value, got {raw!r}")
        if key not in by_key:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        field = by_key[key]
        parser = _TUPLE_PARSERS.get(field.name) or _PARSERS[type(getattr(RunConfig, field.name, 0))]
        try:
            values[field.name] = parser(value)
        except ValueError as exc:
            raise ConfigError(f"line {lineno}: bad value for {key}: {exc}") from None
    if "seed" not in values:
        raise ConfigError("config must set seed explicitly")
    try:
        return RunConfig(**values)
    except ConfigError:
        raise
    except (ValueError, TypeError) as exc:
        raise ConfigError(str(exc)) from None


def load_config(path) -> RunConfig:
    return parse_config(Path(path).read_text())
