"""INI training config -> TrainConfig.

Sections and keys:

    [model]      architecture, variant, np, t, filter_sizes, filters, fc_tail,
                 conv_bias, self_pair, includes_ball, shared_filter_sizes,
                 shared_filters
    [classes]    labels (space separated, or `auto` to take the dataset's),
                 loss_weights (list, `default`, `uniform` or `inverse_frequency`)
    [optimizer]  lr, momentum, batch_size, epochs, patience, lr_schedule
    [run]        seed, split, overfit_steps

A sweep spec is a separate file with a [sweep] section naming the base
config, the sweep dimension and optionally a subset of its variants.
"""

import configparser
from dataclasses import asdict, dataclass, field
from pathlib import Path

from trajnet_utils import io

from .architectures import (
    ARCHITECTURES, COMPARE_FILTER_SIZES, COMPARE_FILTERS, SHARED_FILTER_SIZES, SHARED_FILTERS, SWEEPS,
    ModelConfig, SharedCompareConfig, conv_blocks, shared_layers, stacked_variant,
)
from .errors import ConfigError, TaskMismatchError
from .losses import EVENT_CLASSES, EVENT_LOSS_WEIGHTS, LossWeights, inverse_frequency_weights
from .optim import SGDConfig
from .records import DatasetHeader

TASK_OF = {"shared_compare": "event", "stacked": "team"}
DEFAULT_SPLITS = {"event": (0.5, 0.25, 0.25), "team": (0.6, 0.2, 0.2)}
WEIGHT_MODES = ("default", "uniform", "inverse_frequency")

_KEYS = {
    "model": {"architecture", "variant", "np", "t", "filter_sizes", "filters", "fc_tail", "conv_bias",
              "self_pair", "includes_ball", "shared_filter_sizes", "shared_filters"},
    "classes": {"labels", "loss_weights"},
    "optimizer": {"lr", "momentum", "batch_size", "epochs", "patience", "lr_schedule"},
    "run": {"seed", "split", "overfit_steps"},
}
_SWEEP_KEYS = {"base_config", "sweep", "variants"}


# =============================================================================
# Value parsing
# =============================================================================

def _get(parser: configparser.ConfigParser, section: str, key: str, convert, default):
    if not parser.has_option(section, key):
        return default
    raw = parser.get(section, key).strip()
    try:
        return convert(raw)
    except (TypeError, ValueError) as e:
        raise ConfigError(f"[{section}] {key}: cannot parse {raw!r} ({e})") from None


def _bool(raw: str) -> bool:
    value = raw.lower()
    if value in ("1", "true", "yes", "on"):
        return True
    if value in ("0", "false", "no", "off"):
        return False
    raise ValueError("expected a boolean")


def _words(raw: str) -> list[str]:
    return raw.replace(",", " ").split()


def _ints(raw: str) -> tuple[int, ...]:
    return tuple(int(v) for v in _words(raw))


def _floats(raw: str) -> tuple[float, ...]:
    return tuple(float(v) for v in _words(raw))


# =============================================================================
# TrainConfig
# =============================================================================

@dataclass(frozen=True)
class TrainConfig:
    architecture: str = "shared_compare"
    model: dict = field(default_factory=dict)
    labels: tuple[str, ...] | None = EVENT_CLASSES
    loss_weights: tuple[float, ...] | str = "default"
    optimizer: SGDConfig = field(default_factory=SGDConfig)
    epochs: int = 30
    patience: int = 5
    seed: int = 0
    split: tuple[float, float, float] | None = None
    overfit_steps: int = 500

    def __post_init__(self):
        if self.architecture not in ARCHITECTURES:
            raise ConfigError(f"[model] architecture: unknown {self.architecture!r}; expected one of {ARCHITECTURES}")
        if isinstance(self.loss_weights, str) and self.loss_weights not in WEIGHT_MODES:
            raise ConfigError(f"[classes] loss_weights: expected a list or one of {WEIGHT_MODES}, "
                              f"got {self.loss_weights!r}")
        if self.epochs < 1 or self.patience < 1 or self.overfit_steps < 1:
            raise ConfigError("[optimizer] epochs, patience and [run] overfit_steps must be >= 1")
        split = self.split_fractions
        if len(split) != 3 or any(f < 0 for f in split) or split[0] <= 0 or abs(sum(split) - 1.0) > 1e-9:
            raise ConfigError(f"[run] split: need three non-negative fractions summing to 1, got {split}")

    @property
    def task(self) -> str:
        return TASK_OF[self.architecture]

    @property
    def split_fractions(self) -> tuple[float, float, float]:
        return tuple(self.split) if self.split is not None else DEFAULT_SPLITS[self.task]

    def resolve_classes(self, header: DatasetHeader) -> tuple[str, ...]:
        """Class list for training on `header`'s dataset."""
        if header.task != self.task:
            raise TaskMismatchError(f"{self.architecture} config trains the {self.task} task, "
                                    f"dataset holds {header.task} samples")
        if self.labels is None:
            return header.classes
        if tuple(self.labels) != header.classes:
            raise TaskMismatchError(f"config labels {list(self.labels)} differ from dataset classes "
                                    f"{list(header.classes)}")
        return tuple(self.labels)

    def model_config(self, classes: tuple[str, ...]) -> ModelConfig:
        m = self.model
        if self.architecture == "shared_compare":
            bias = m.get("conv_bias", False)
            return SharedCompareConfig(
                np=m.get("np", 5), t=m.get("t", 16),
                shared=shared_layers(m.get("shared_filter_sizes", SHARED_FILTER_SIZES),
                                     m.get("shared_filters", SHARED_FILTERS), bias),
                compare=conv_blocks(m.get("filter_sizes", COMPARE_FILTER_SIZES),
                                    m.get("filters", COMPARE_FILTERS), bias),
                num_classes=len(classes),
                self_pair=m.get("self_pair", False),
                variant=m.get("variant", "default"),
            )
        overrides = {k: m[k] for k in ("np", "t", "filter_sizes", "filters", "fc_tail", "includes_ball",
                                       "conv_bias") if k in m}
        return stacked_variant(m.get("variant", "5conv"), num_classes=len(classes), **overrides)

    def with_variant(self, variant: str) -> "TrainConfig":
        """Same config with a catalogue variant; explicit layer lists are dropped."""
        model = {k: v for k, v in self.model.items() if k not in ("filter_sizes", "filters", "fc_tail")}
        model["variant"] = variant
        return TrainConfig(**{**self._fields(), "model": model})

    def weights(self, classes: tuple[str, ...], train_labels) -> LossWeights:
        if self.loss_weights == "uniform":
            return LossWeights.uniform(len(classes))
        if self.loss_weights == "inverse_frequency":
            return inverse_frequency_weights(train_labels, len(classes))
        if self.loss_weights == "default":
            if tuple(classes) == EVENT_CLASSES:
                return LossWeights(EVENT_LOSS_WEIGHTS)
            return LossWeights.uniform(len(classes))
        if len(self.loss_weights) != len(classes):
            raise ConfigError(f"[classes] loss_weights: {len(self.loss_weights)} values for {len(classes)} classes")
        return LossWeights(tuple(self.loss_weights))

    def _fields(self) -> dict:
        return {name: getattr(self, name) for name in self.__dataclass_fields__}

    def to_dict(self) -> dict:
        return {
            "architecture": self.architecture,
            "model": {k: list(v) if isinstance(v, tuple) else v for k, v in sorted(self.model.items())},
            "labels": None if self.labels is None else list(self.labels),
            "loss_weights": self.loss_weights if isinstance(self.loss_weights, str) else list(self.loss_weights),
            "optimizer": asdict(self.optimizer),
            "epochs": self.epochs,
            "patience": self.patience,
            "seed": self.seed,
            "split": list(self.split_fractions),
            "overfit_steps": self.overfit_steps,
        }


# =============================================================================
# Loading
# =============================================================================

def _parser(text: str, source: str) -> configparser.ConfigParser:
    parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    try:
        parser.read_string(text, source=source)
    except configparser.Error as e:
        raise ConfigError(f"{source}: {e}") from None
    return parser


def _check_keys(parser: configparser.ConfigParser, allowed: dict[str, set]) -> None:
    for section in parser.sections():
        if section not in allowed:
            raise ConfigError(f"unknown section [{section}]; expected one of {sorted(allowed)}")
        for key in parser.options(section):
            if key not in allowed[section]:
                raise ConfigError(f"[{section}] unknown key {key!r}")


def _model_section(parser: configparser.ConfigParser) -> tuple[str, dict]:
    s = "model"
    architecture = _get(parser, s, "architecture", str, "shared_compare")
    model = {}
    for key, convert in (("variant", str), ("np", int), ("t", int), ("filter_sizes", _ints), ("filters", _ints),
                         ("fc_tail", _ints), ("conv_bias", _bool), ("self_pair", _bool),
                         ("includes_ball", _bool), ("shared_filter_sizes", _ints), ("shared_filters", _ints)):
        value = _get(parser, s, key, convert, None)
        if value is not None:
            model[key] = value
    stacked_only = {"fc_tail", "includes_ball"} & set(model)
    compare_only = {"self_pair", "shared_filter_sizes", "shared_filters"} & set(model)
    if architecture == "shared_compare" and stacked_only:
        raise ConfigError(f"[model] {sorted(stacked_only)[0]}: only valid for the stacked architecture")
    if architecture == "stacked" and compare_only:
        raise ConfigError(f"[model] {sorted(compare_only)[0]}: only valid for the shared_compare architecture")
    return architecture, model


def _loss_weights(raw: str):
    return raw if raw in WEIGHT_MODES else _floats(raw)


def settings_from_string(text: str, source: str = "<config>") -> TrainConfig:
    parser = _parser(text, source)
    _check_keys(parser, _KEYS)
    architecture, model = _model_section(parser)

    labels = _get(parser, "classes", "labels", _words, None)
    if labels is None:
        labels = list(EVENT_CLASSES) if architecture == "shared_compare" else ["auto"]
    labels = None if labels == ["auto"] else tuple(labels)

    optimizer = SGDConfig(
        lr=_get(parser, "optimizer", "lr", float, 0.01),
        momentum=_get(parser, "optimizer", "momentum", float, 0.9),
        batch_size=_get(parser, "optimizer", "batch_size", int, 32),
        lr_schedule=_get(parser, "optimizer", "lr_schedule", str, "constant"),
    )
    return TrainConfig(
        architecture=architecture,
        model=model,
        labels=labels,
        loss_weights=_get(parser, "classes", "loss_weights", _loss_weights, "default"),
        optimizer=optimizer,
        epochs=_get(parser, "optimizer", "epochs", int, 30),
        patience=_get(parser, "optimizer", "patience", int, 5),
        seed=_get(parser, "run", "seed", int, 0),
        split=_get(parser, "run", "split", _floats, None),
        overfit_steps=_get(parser, "run", "overfit_steps", int, 500),
    )


def load_settings(path: str | Path) -> TrainConfig:
    try:
        text = io.read_text(path)
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}") from None
    return settings_from_string(text, source=str(path))


# =============================================================================
# Sweep specs
# =============================================================================

@dataclass(frozen=True)
class SweepSpec:
    base: TrainConfig
    sweep: str
    variants: tuple[str, ...]

    def configs(self) -> dict[str, TrainConfig]:
        return {name: self.base.with_variant(name) for name in self.variants}


def load_sweep_spec(path: str | Path) -> SweepSpec:
    path = Path(path)
    try:
        parser = _parser(io.read_text(path), str(path))
    except FileNotFoundError:
        raise ConfigError(f"sweep spec not found: {path}") from None
    _check_keys(parser, {"sweep": _SWEEP_KEYS})
    if not parser.has_option("sweep", "base_config") or not parser.has_option("sweep", "sweep"):
        raise ConfigError("[sweep] needs both base_config and sweep")

    base = load_settings(path.parent / parser.get("sweep", "base_config").strip())
    if base.architecture != "stacked":
        raise ConfigError("[sweep] base_config: sweeps vary the stacked architecture only")
    sweep = parser.get("sweep", "sweep").strip()
    if sweep not in SWEEPS:
        raise ConfigError(f"[sweep] sweep: unknown {sweep!r}; expected one of {sorted(SWEEPS)}")

    catalogue = SWEEPS[sweep]
    if parser.has_option("sweep", "variants"):
        # filter-size names contain spaces, so variants are comma separated
        variants = tuple(v.strip() for v in parser.get("sweep", "variants").split(",") if v.strip())
        unknown = [v for v in variants if v not in catalogue]
        if unknown:
            raise ConfigError(f"[sweep] variants: {unknown} not in the {sweep} sweep ({', '.join(catalogue)})")
    else:
        variants = tuple(catalogue)
    return SweepSpec(base, sweep, variants)
