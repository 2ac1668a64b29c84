"""Architecture configs and the named variant catalogue.

Shared-compare (event recognition): a shared conv stack runs on every
person's (x, y) track with one set of weights; a compare stack runs on each
(key, partner) pair of shared outputs concatenated along channels; a bias-free
fully-connected softmax head reads the concatenated pair features.

Stacked (team identification): ball and player tracks stacked into
2 * (Np + 1) channels, conv -> relu -> pool(2) per block, flatten, optional
fully-connected tail, softmax head.
"""

import math
from dataclasses import dataclass, field

from .errors import ConfigError
from .layers import LayerSpec, count_layer_params, infer_shapes
from .losses import EVENT_CLASSES

ARCHITECTURES = ("shared_compare", "stacked")
POOL_WINDOW = 2


def conv_blocks(filter_sizes, filters, use_bias: bool = False) -> tuple[LayerSpec, ...]:
    """conv -> relu -> maxpool(2) per (width, count) pair."""
    filter_sizes, filters = tuple(filter_sizes), tuple(filters)
    if len(filter_sizes) != len(filters):
        raise ConfigError(f"{len(filter_sizes)} filter sizes but {len(filters)} filter counts")
    specs = []
    for width, count in zip(filter_sizes, filters):
        specs += [LayerSpec.conv(int(count), int(width), use_bias), LayerSpec.relu(), LayerSpec.maxpool(POOL_WINDOW)]
    return tuple(specs)


def _specs_to_list(specs) -> list[dict]:
    return [s.to_dict() for s in specs]


def _specs_from_list(items) -> tuple[LayerSpec, ...]:
    return tuple(LayerSpec.from_dict(d) for d in items)


# =============================================================================
# Shared-compare
# =============================================================================

def shared_layers(filter_sizes, filters, use_bias: bool = False) -> tuple[LayerSpec, ...]:
    """conv -> relu per (width, count) pair, one maxpool(2) at the end."""
    filter_sizes, filters = tuple(filter_sizes), tuple(filters)
    if len(filter_sizes) != len(filters):
        raise ConfigError(f"{len(filter_sizes)} filter sizes but {len(filters)} filter counts")
    specs = []
    for width, count in zip(filter_sizes, filters):
        specs += [LayerSpec.conv(int(count), int(width), use_bias), LayerSpec.relu()]
    return tuple(specs) + (LayerSpec.maxpool(POOL_WINDOW),)


SHARED_FILTER_SIZES, SHARED_FILTERS = (3, 3), (64, 128)
COMPARE_FILTER_SIZES, COMPARE_FILTERS = (3, 3, 3, 2), (128, 128, 256, 512)


def default_shared_layers(use_bias: bool = False) -> tuple[LayerSpec, ...]:
    return shared_layers(SHARED_FILTER_SIZES, SHARED_FILTERS, use_bias)


def default_compare_layers(use_bias: bool = False) -> tuple[LayerSpec, ...]:
    return conv_blocks(COMPARE_FILTER_SIZES, COMPARE_FILTERS, use_bias)


@dataclass(frozen=True)
class SharedCompareConfig:
    np: int = 5
    t: int = 16
    shared: tuple[LayerSpec, ...] = field(default_factory=default_shared_layers)
    compare: tuple[LayerSpec, ...] = field(default_factory=default_compare_layers)
    num_classes: int = len(EVENT_CLASSES)
    self_pair: bool = False
    variant: str = "default"

    architecture = "shared_compare"

    def __post_init__(self):
        if self.np < 1 or (self.np < 2 and not self.self_pair):
            raise ConfigError(f"shared-compare needs np >= 2 (or self_pair with np >= 1), got np={self.np}")
        if self.t < 1 or self.num_classes < 2:
            raise ConfigError(f"need t >= 1 and num_classes >= 2, got t={self.t} num_classes={self.num_classes}")
        for name, specs in (("shared", self.shared), ("compare", self.compare)):
            if not specs or any(s.kind in ("flatten", "fully_connected") for s in specs):
                raise ConfigError(f"{name} stack must be a non-empty list of conv/relu/maxpool layers")
        # raises ShapeError naming the offending layer
        infer_shapes(list(self.compare), self.compare_in_shape)

    @property
    def input_shape(self) -> tuple[int, int, int]:
        return (self.np, 2, self.t)

    @property
    def num_pairs(self) -> int:
        return self.np if self.self_pair else self.np - 1

    @property
    def shared_out_shape(self) -> tuple[int, int]:
        return infer_shapes(list(self.shared), (2, self.t))[-1]

    @property
    def compare_in_shape(self) -> tuple[int, int]:
        channels, length = self.shared_out_shape
        return (2 * channels, length)

    @property
    def compare_out_shape(self) -> tuple[int, int]:
        return infer_shapes(list(self.compare), self.compare_in_shape)[-1]

    @property
    def head_in(self) -> int:
        return self.num_pairs * math.prod(self.compare_out_shape)

    def count_params(self) -> int:
        return (count_layer_params(list(self.shared), (2, self.t))
                + count_layer_params(list(self.compare), self.compare_in_shape)
                + self.head_in * self.num_classes)

    def to_dict(self) -> dict:
        return {
            "architecture": self.architecture,
            "variant": self.variant,
            "np": self.np,
            "t": self.t,
            "shared": _specs_to_list(self.shared),
            "compare": _specs_to_list(self.compare),
            "num_classes": self.num_classes,
            "self_pair": self.self_pair,
        }


# =============================================================================
# Stacked
# =============================================================================

@dataclass(frozen=True)
class StackedConfig:
    np: int = 5
    t: int = 200
    filter_sizes: tuple[int, ...] = (5, 3, 3, 3, 3)
    filters: tuple[int, ...] = (64, 128, 256, 512, 512)
    fc_tail: tuple[int, ...] = ()
    num_classes: int = 30
    includes_ball: bool = True
    conv_bias: bool = False
    variant: str = "5conv"

    architecture = "stacked"

    def __post_init__(self):
        object.__setattr__(self, "filter_sizes", tuple(int(v) for v in self.filter_sizes))
        object.__setattr__(self, "filters", tuple(int(v) for v in self.filters))
        object.__setattr__(self, "fc_tail", tuple(int(v) for v in self.fc_tail))
        if self.np < 1 or self.t < 1 or self.num_classes < 2:
            raise ConfigError(f"need np >= 1, t >= 1, num_classes >= 2; got np={self.np} t={self.t} "
                              f"num_classes={self.num_classes}")
        if not self.filter_sizes:
            raise ConfigError("stacked network needs at least one conv layer")
        infer_shapes(list(self.layers), self.input_shape)

    @property
    def in_channels(self) -> int:
        return 2 * (self.np + (1 if self.includes_ball else 0))

    @property
    def input_shape(self) -> tuple[int, int]:
        return (self.in_channels, self.t)

    @property
    def layers(self) -> tuple[LayerSpec, ...]:
        specs = list(conv_blocks(self.filter_sizes, self.filters, self.conv_bias))
        specs.append(LayerSpec.flatten())
        for units in self.fc_tail:
            specs += [LayerSpec.fc(units, use_bias=True), LayerSpec.relu()]
        specs.append(LayerSpec.fc(self.num_classes))
        return tuple(specs)

    @property
    def conv_out_shape(self) -> tuple[int, int]:
        n_conv = 3 * len(self.filter_sizes)
        return infer_shapes(list(self.layers[:n_conv]), self.input_shape)[-1]

    @property
    def flatten_size(self) -> int:
        channels, length = self.conv_out_shape
        return channels * length

    def count_params(self) -> int:
        return count_layer_params(list(self.layers), self.input_shape)

    def to_dict(self) -> dict:
        return {
            "architecture": self.architecture,
            "variant": self.variant,
            "np": self.np,
            "t": self.t,
            "filter_sizes": list(self.filter_sizes),
            "filters": list(self.filters),
            "fc_tail": list(self.fc_tail),
            "num_classes": self.num_classes,
            "includes_ball": self.includes_ball,
            "conv_bias": self.conv_bias,
        }


ModelConfig = SharedCompareConfig | StackedConfig


def config_from_dict(d: dict) -> ModelConfig:
    d = dict(d)
    arch = d.pop("architecture", None)
    try:
        if arch == "shared_compare":
            d["shared"] = _specs_from_list(d["shared"])
            d["compare"] = _specs_from_list(d["compare"])
            return SharedCompareConfig(**d)
        if arch == "stacked":
            return StackedConfig(**d)
    except (KeyError, TypeError) as e:
        raise ConfigError(f"bad {arch} config: {e}") from None
    raise ConfigError(f"unknown architecture {arch!r}; expected one of {ARCHITECTURES}")


def count_params(cfg: ModelConfig) -> int:
    """Exact number of trainable scalars."""
    return cfg.count_params()


# =============================================================================
# Variant catalogue
# =============================================================================

_BASE_SIZES = (5, 3, 3, 3, 3)
_BASE_FILTERS = (64, 128, 256, 512, 512)

LAYER_VARIANTS = {
    "2conv": dict(filter_sizes=_BASE_SIZES[:2], filters=_BASE_FILTERS[:2]),
    "3conv": dict(filter_sizes=_BASE_SIZES[:3], filters=_BASE_FILTERS[:3]),
    "4conv": dict(filter_sizes=_BASE_SIZES[:4], filters=_BASE_FILTERS[:4]),
    "5conv": dict(filter_sizes=_BASE_SIZES, filters=_BASE_FILTERS),
    "5conv+2fc": dict(filter_sizes=_BASE_SIZES, filters=_BASE_FILTERS, fc_tail=(1024, 1024)),
}

FILTER_SIZE_VARIANTS = {
    "3 3 3 2 2": dict(filter_sizes=(3, 3, 3, 2, 2), filters=_BASE_FILTERS),
    "5 3 3 3 3": dict(filter_sizes=(5, 3, 3, 3, 3), filters=_BASE_FILTERS),
    "7 5 5 3 3": dict(filter_sizes=(7, 5, 5, 3, 3), filters=_BASE_FILTERS),
    "9 7 7 5 5": dict(filter_sizes=(9, 7, 7, 5, 5), filters=_BASE_FILTERS),
}

BASE_FILTER_VARIANTS = {
    f"base{b}": dict(filter_sizes=_BASE_SIZES, filters=(b, 2 * b, 4 * b, 8 * b, 8 * b))
    for b in (16, 32, 64, 128)
}

SWEEPS = {
    "layers": LAYER_VARIANTS,
    "filter_sizes": FILTER_SIZE_VARIANTS,
    "base_filters": BASE_FILTER_VARIANTS,
}

VARIANTS = {**LAYER_VARIANTS, **FILTER_SIZE_VARIANTS, **BASE_FILTER_VARIANTS}


def stacked_variant(name: str, **overrides) -> StackedConfig:
    """Catalogue entry by name; keyword overrides (np, t, num_classes, ...) win."""
    if name not in VARIANTS:
        raise ConfigError(f"unknown stacked variant {name!r}; known: {', '.join(VARIANTS)}")
    return StackedConfig(**{**VARIANTS[name], "variant": name, **overrides})


def sweep_variants(sweep: str, **overrides) -> list[StackedConfig]:
    if sweep not in SWEEPS:
        raise ConfigError(f"unknown sweep {sweep!r}; expected one of {', '.join(SWEEPS)}")
    return [stacked_variant(name, **overrides) for name in SWEEPS[sweep]]
