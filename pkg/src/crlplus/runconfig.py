"""Run configuration: one flat namespace over every tunable in the pipeline.

The file format is deliberately plain: one ``key = value`` per line, UTF-8,
``#`` starts a comment, blank lines ignored. Values are typed by the field
they set, and the literal ``none`` (any case) clears an optional field.
Precedence is fixed: built-in defaults, then the config file, then
command-line flags. ``render`` writes the fully resolved configuration
back out in the same format, and parsing that echo reproduces the run.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, Optional

from .contrastive import MODES, LossConfig
from .corpus import SplitRatios, SynthConfig
from .encoder import EncoderConfig
from .errors import ConfigError
from .selftrain import LoopConfig, TargetMetric, TARGET_METRIC_NAMES


@dataclass
class RunConfig:
    """Every documented default in one place.

    The defaults here are the desk-scale benchmark tune: a narrow encoder
    and a fixed per-epoch step budget that finish the three-way comparison
    in minutes on one CPU core. The library dataclasses keep their own
    general-purpose defaults (wider model, natural epochs); a config file
    or flags can reproduce those exactly.

    ``vocab_size = 0`` means "derive from the training data"; any positive
    value pins the table size instead. ``steps_per_epoch = none`` keeps
    natural epochs (one pass over the labeled set).
    """

    # corpus synthesis
    n_total: int = 2000
    labeled_fraction: float = 0.03
    template_noise: float = 0.08
    # vocabulary
    vocab_size: int = 0
    min_freq: int = 2
    # encoder
    max_len: int = 64
    d_model: int = 32
    n_heads: int = 4
    n_layers: int = 2
    d_ff: int = 128
    dropout_p: float = 0.1
    pooling: str = "mean"
    # contrastive loss
    temperature: float = 0.1
    denominator_mode: str = "supcon_standard"
    # self-training loop
    confidence_threshold: float = 0.95
    max_iterations: int = 10
    contrastive_epochs: int = 5
    head_epochs: int = 5
    steps_per_epoch: Optional[int] = 30
    batch_size: int = 32
    n_views: int = 2
    classes_per_batch: int = 4
    lr_contrastive: float = 0.1
    lr_head: float = 0.5
    lr_encoder: float = 0.05
    grad_clip: Optional[float] = 1.0
    warm_start: bool = True
    max_promotions: Optional[int] = 100
    target_metric: Optional[str] = None
    target_value: Optional[float] = None
    # splits
    train_ratio: float = 0.8
    val_ratio: float = 0.1
    test_ratio: float = 0.1
    # run plumbing
    seed: int = 0
    seeds: int = 3
    threads: int = 1
    data: str = ""
    val_data: str = ""
    labels: str = ""
    out_dir: str = ""

    # conversions ------------------------------------------------------

    def encoder_config(self, derived_vocab_size: int) -> EncoderConfig:
        size = self.vocab_size if self.vocab_size > 0 else derived_vocab_size
        return EncoderConfig(
            vocab_size=size,
            max_len=self.max_len,
            d_model=self.d_model,
            n_heads=self.n_heads,
            n_layers=self.n_layers,
            d_ff=self.d_ff,
            dropout_p=self.dropout_p,
            pooling=self.pooling,
        )

    def loss_config(self) -> LossConfig:
        return LossConfig(
            temperature=self.temperature, denominator_mode=self.denominator_mode
        )

    def loop_config(self) -> LoopConfig:
        target = None
        if self.target_metric is not None:
            if self.target_value is None:
                raise ConfigError("target_metric is set but target_value is not")
            target = TargetMetric(self.target_metric, self.target_value)
        elif self.target_value is not None:
            raise ConfigError("target_value is set but target_metric is not")
        return LoopConfig(
            confidence_threshold=self.confidence_threshold,
            max_iterations=self.max_iterations,
            contrastive_epochs=self.contrastive_epochs,
            head_epochs=self.head_epochs,
            steps_per_epoch=self.steps_per_epoch,
            batch_size=self.batch_size,
            n_views=self.n_views,
            classes_per_batch=self.classes_per_batch,
            lr_contrastive=self.lr_contrastive,
            lr_head=self.lr_head,
            lr_encoder=self.lr_encoder,
            grad_clip=self.grad_clip,
            warm_start=self.warm_start,
            max_promotions=self.max_promotions,
            target_metric=target,
            loss=self.loss_config(),
        )

    def synth_config(self) -> SynthConfig:
        return SynthConfig(
            n_total=self.n_total,
            labeled_fraction=self.labeled_fraction,
            template_noise=self.template_noise,
            seed=self.seed,
        )

    def split_ratios(self) -> SplitRatios:
        return SplitRatios(self.train_ratio, self.val_ratio, self.test_ratio)


_FIELDS = {f.name: f for f in dataclasses.fields(RunConfig)}
_OPTIONAL_FLOAT = {"grad_clip", "target_value"}
_OPTIONAL_INT = {"steps_per_epoch", "max_promotions"}
_OPTIONAL_STR = {"target_metric"}
_BOOL = {"warm_start"}
_TRUE_WORDS = {"true", "yes", "on", "1"}
_FALSE_WORDS = {"false", "no", "off", "0"}


def coerce(key: str, raw: str):
    """Parse one raw string into the typed value for ``key``.

    Raises ConfigError for unknown keys and unparseable values; this is the
    single place where both the file parser and flag handling agree on what
    a value means.
    """
    if key not in _FIELDS:
        raise ConfigError(f"unknown config key: {key!r}")
    text = raw.strip()
    is_none = text.lower() == "none"
    try:
        if key in _BOOL:
            low = text.lower()
            if low in _TRUE_WORDS:
                return True
            if low in _FALSE_WORDS:
                return False
            raise ValueError(f"not a boolean: {text!r}")
        if key in _OPTIONAL_FLOAT:
            return None if is_none else float(text)
        if key in _OPTIONAL_INT:
            return None if is_none else int(text)
        if key in _OPTIONAL_STR:
            return None if is_none else text
        kind = _FIELDS[key].type
        if kind == "int":
            return int(text)
        if kind == "float":
            return float(text)
        return text
    except ValueError as exc:
        raise ConfigError(f"bad value for {key!r}: {exc}") from exc


def parse_config_file(path) -> Dict[str, object]:
    """Typed key/value pairs from one flat config file."""
    path = Path(path)
    try:
        lines = path.read_text(encoding="utf-8").splitlines()
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from exc
    values: Dict[str, object] = {}
    for lineno, line in enumerate(lines, start=1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        if "=" not in stripped:
            raise ConfigError(f"{path}:{lineno}: expected 'key = value', got {line!r}")
        key, raw = (part.strip() for part in stripped.split("=", 1))
        try:
            values[key] = coerce(key, raw)
        except ConfigError as exc:
            raise ConfigError(f"{path}:{lineno}: {exc}") from exc
    return values


def resolve(file_values: Optional[Dict[str, object]] = None,
            flag_values: Optional[Dict[str, object]] = None) -> RunConfig:
    """Defaults, overlaid with the config file, overlaid with flags."""
    merged: Dict[str, object] = {}
    for layer in (file_values or {}, flag_values or {}):
        for key, value in layer.items():
            if key not in _FIELDS:
                raise ConfigError(f"unknown config key: {key!r}")
            merged[key] = value
    cfg = RunConfig(**merged)
    _validate(cfg)
    return cfg


def _validate(cfg: RunConfig) -> None:
    if cfg.threads != 1:
        raise ConfigError(
            f"threads={cfg.threads} is not supported; this build is "
            "single-threaded and deterministic (threads = 1)"
        )
    if cfg.seeds < 1:
        raise ConfigError(f"seeds must be >= 1, got {cfg.seeds}")
    if cfg.min_freq < 1:
        raise ConfigError(f"min_freq must be >= 1, got {cfg.min_freq}")
    if cfg.vocab_size < 0:
        raise ConfigError(f"vocab_size must be >= 0 (0 derives it), got {cfg.vocab_size}")
    if cfg.denominator_mode not in MODES:
        raise ConfigError(
            f"denominator_mode must be one of {sorted(MODES)}, "
            f"got {cfg.denominator_mode!r}"
        )
    if cfg.target_metric is not None and cfg.target_metric not in TARGET_METRIC_NAMES:
        raise ConfigError(
            f"target_metric must be one of {sorted(TARGET_METRIC_NAMES)}, "
            f"got {cfg.target_metric!r}"
        )


def render(cfg: RunConfig) -> str:
    """The resolved configuration as a parseable flat file."""
    lines = ["# resolved run configuration"]
    for f in dataclasses.fields(RunConfig):
        value = getattr(cfg, f.name)
        if value is None:
            text = "none"
        elif isinstance(value, bool):
            text = "true" if value else "false"
        else:
            text = repr(value) if isinstance(value, float) else str(value)
        lines.append(f"{f.name} = {text}")
    return "\n".join(lines) + "\n"
