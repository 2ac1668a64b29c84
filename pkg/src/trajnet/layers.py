"""Differentiable layers over batched (B, C, T) signals.

The fixed vocabulary is conv1d, relu, maxpool, flatten and fully_connected.
Each layer caches what its backward pass needs during forward; backward
returns the gradient w.r.t. the layer input and accumulates parameter
gradients into the shared ParamStore.

Conv follows O[k, t] = sum_i sum_j X[i, t + j] F[i, j, k] with stride 1 and
W - 1 zero frames padded on the right, so output length equals input length.
Max pooling uses window S = stride S; a partial final window pools over the
remaining frames only, giving ceil(T / S) outputs. Ties go to the smallest
input index.
"""

from dataclasses import dataclass, field, asdict

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .errors import BackwardBeforeForwardError, ShapeError
from .tensor import FilterBank, SignalTensor

LAYER_KINDS = ("conv1d", "relu", "maxpool", "flatten", "fully_connected")


# =============================================================================
# Layer specs
# =============================================================================

@dataclass(frozen=True)
class LayerSpec:
    kind: str
    filters: int = 0
    width: int = 0
    window: int = 0
    units: int = 0
    use_bias: bool = False

    def __post_init__(self):
        if self.kind not in LAYER_KINDS:
            raise ShapeError(f"unknown layer kind {self.kind!r}; expected one of {LAYER_KINDS}")
        if self.kind == "conv1d" and (self.filters < 1 or self.width < 1):
            raise ShapeError(f"conv1d needs filters >= 1 and width >= 1, got M={self.filters} W={self.width}")
        if self.kind == "maxpool" and self.window < 1:
            raise ShapeError(f"maxpool needs window >= 1, got S={self.window}")
        if self.kind == "fully_connected" and self.units < 1:
            raise ShapeError(f"fully_connected needs units >= 1, got {self.units}")

    @classmethod
    def conv(cls, filters: int, width: int, use_bias: bool = False) -> "LayerSpec":
        return cls("conv1d", filters=filters, width=width, use_bias=use_bias)

    @classmethod
    def relu(cls) -> "LayerSpec":
        return cls("relu")

    @classmethod
    def maxpool(cls, window: int = 2) -> "LayerSpec":
        return cls("maxpool", window=window)

    @classmethod
    def flatten(cls) -> "LayerSpec":
        return cls("flatten")

    @classmethod
    def fc(cls, units: int, use_bias: bool = False) -> "LayerSpec":
        return cls("fully_connected", units=units, use_bias=use_bias)

    def to_dict(self) -> dict:
        return {k: v for k, v in asdict(self).items() if v or k == "kind"}

    @classmethod
    def from_dict(cls, d: dict) -> "LayerSpec":
        return cls(**d)


# =============================================================================
# Parameters
# =============================================================================

@dataclass
class Parameter:
    name: str
    value: np.ndarray
    grad: np.ndarray = field(init=False)
    velocity: np.ndarray = field(init=False)

    def __post_init__(self):
        self.value = np.ascontiguousarray(self.value, dtype=np.float64)
        self.grad = np.zeros_like(self.value)
        self.velocity = np.zeros_like(self.value)

    @property
    def size(self) -> int:
        return self.value.size


class ParamStore:
    """Named weights and gradients, iterated in registration order."""

    def __init__(self):
        self._params: dict[str, Parameter] = {}

    def add(self, name: str, value: np.ndarray) -> Parameter:
        if name in self._params:
            raise ShapeError(f"parameter {name!r} registered twice")
        p = Parameter(name, value)
        self._params[name] = p
        return p

    def __getitem__(self, name: str) -> Parameter:
        return self._params[name]

    def __iter__(self):
        return iter(self._params.values())

    def __len__(self) -> int:
        return len(self._params)

    def names(self) -> list[str]:
        return list(self._params)

    def zero_grad(self) -> None:
        for p in self._params.values():
            p.grad.fill(0.0)

    def count(self) -> int:
        return sum(p.size for p in self._params.values())

    def state(self) -> dict[str, np.ndarray]:
        return {name: p.value.copy() for name, p in self._params.items()}

    def load_state(self, values: dict[str, np.ndarray]) -> None:
        missing = set(self._params) - set(values)
        extra = set(values) - set(self._params)
        if missing or extra:
            raise ShapeError(f"parameter names differ: missing={sorted(missing)} extra={sorted(extra)}")
        for name, arr in values.items():
            p = self._params[name]
            arr = np.asarray(arr, dtype=np.float64)
            if arr.shape != p.value.shape:
                raise ShapeError(f"parameter {name!r}: expected shape {p.value.shape}, got {arr.shape}")
            p.value[...] = arr
            p.velocity.fill(0.0)

    def all_finite(self) -> bool:
        return all(np.all(np.isfinite(p.value)) for p in self._params.values())


def glorot_uniform(rng: np.random.Generator, shape: tuple, fan_in: int, fan_out: int) -> np.ndarray:
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=shape)


# =============================================================================
# Kernels
# =============================================================================

def conv1d_kernel(x: np.ndarray, w: np.ndarray, b: np.ndarray | None = None) -> tuple[np.ndarray, np.ndarray]:
    """x (B, N, T), w (N, W, M) -> (out (B, M, T), right-padded input)."""
    width = w.shape[1]
    xp = np.pad(x, ((0, 0), (0, 0), (0, width - 1)))
    windows = sliding_window_view(xp, width, axis=2)  # (B, N, T, W)
    out = np.tensordot(windows, w, axes=([1, 3], [0, 1])).transpose(0, 2, 1)
    if b is not None:
        out = out + b[None, :, None]
    return np.ascontiguousarray(out), xp


def conv1d_backward_kernel(dout: np.ndarray, xp: np.ndarray, w: np.ndarray):
    """Returns (dx, dw, db). Padded frames receive no gradient."""
    width = w.shape[1]
    length = dout.shape[2]
    windows = sliding_window_view(xp, width, axis=2)
    dw = np.tensordot(windows, dout, axes=([0, 2], [0, 2]))  # (N, W, M)
    dxp = np.zeros_like(xp)
    for j in range(width):
        dxp[:, :, j:j + length] += np.tensordot(w[:, j, :], dout, axes=([1], [1])).transpose(1, 0, 2)
    db = dout.sum(axis=(0, 2))
    return dxp[:, :, :length], dw, db


def maxpool1d_kernel(x: np.ndarray, window: int) -> tuple[np.ndarray, np.ndarray, bool]:
    """Returns (out, argmax input indices, whether any window held a tied max)."""
    batch, channels, length = x.shape
    out_len = -(-length // window)
    pad = out_len * window - length
    xp = np.pad(x, ((0, 0), (0, 0), (0, pad)), constant_values=-np.inf) if pad else x
    windows = xp.reshape(batch, channels, out_len, window)
    local = windows.argmax(axis=3)
    out = np.take_along_axis(windows, local[..., None], axis=3)[..., 0]
    # ties at exactly 0 come from dead ReLUs or zero padding and stay differentiable
    repeats = (windows == out[..., None]).sum(axis=3)
    tied = bool(np.any((repeats > 1) & (out != 0.0)))
    argmax = local + (np.arange(out_len) * window)[None, None, :]
    return np.ascontiguousarray(out), argmax, tied


def maxpool1d_backward_kernel(dout: np.ndarray, argmax: np.ndarray, length: int) -> np.ndarray:
    dx = np.zeros(dout.shape[:2] + (length,))
    np.put_along_axis(dx, argmax, dout, axis=2)
    return dx


# =============================================================================
# Single-signal operations
# =============================================================================

@dataclass(frozen=True)
class ArgmaxRecord:
    indices: np.ndarray  # (C, ceil(T/S)) winning input index per output cell
    tied: bool


def conv1d_forward(x: SignalTensor, f: FilterBank, use_bias: bool = False,
                   bias: np.ndarray | None = None) -> SignalTensor:
    """Pre-activation conv output; same length as x. ReLU is a separate layer."""
    if x.channels != f.in_channels:
        raise ShapeError(f"conv1d: input has {x.channels} channels, filters expect {f.in_channels}")
    if x.length < 1:
        raise ShapeError("conv1d: input length must be >= 1")
    b = None
    if use_bias:
        b = np.zeros(f.out_channels) if bias is None else np.asarray(bias, dtype=np.float64)
    out, _ = conv1d_kernel(x.values[None], f.weights, b)
    return SignalTensor(out[0])


def relu_forward(x: SignalTensor) -> SignalTensor:
    return SignalTensor(np.maximum(x.values, 0.0))


def maxpool_forward(x: SignalTensor, window: int) -> tuple[SignalTensor, ArgmaxRecord]:
    if window < 1:
        raise ShapeError("maxpool: window must be >= 1")
    out, argmax, tied = maxpool1d_kernel(x.values[None], window)
    return SignalTensor(out[0]), ArgmaxRecord(argmax[0], tied)


# =============================================================================
# Layers
# =============================================================================

class Layer:
    spec: LayerSpec

    def __init__(self):
        self.cache = None

    def __call__(self, x: np.ndarray) -> np.ndarray:
        return self.forward(x)

    def forward(self, x: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def backward(self, dout: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def _cached(self):
        if self.cache is None:
            raise BackwardBeforeForwardError(f"{self.spec.kind}: backward called before forward")
        return self.cache


class Conv1d(Layer):
    def __init__(self, spec: LayerSpec, weight, bias=None):
        super().__init__()
        self.spec = spec
        self.weight = weight
        self.bias = bias

    def forward(self, x):
        out, xp = conv1d_kernel(x, self.weight.value, self.bias.value if self.bias is not None else None)
        self.cache = xp
        return out

    def backward(self, dout):
        xp = self._cached()
        dx, dw, db = conv1d_backward_kernel(dout, xp, self.weight.value)
        self.weight.grad += dw
        if self.bias is not None:
            self.bias.grad += db
        return dx


class ReLU(Layer):
    def __init__(self, spec: LayerSpec):
        super().__init__()
        self.spec = spec

    def forward(self, x):
        self.cache = x
        return np.maximum(x, 0.0)

    def backward(self, dout):
        x = self._cached()
        return dout * (x > 0.0)


class MaxPool1d(Layer):
    def __init__(self, spec: LayerSpec):
        super().__init__()
        self.spec = spec
        self.tied = False

    def forward(self, x):
        out, argmax, tied = maxpool1d_kernel(x, self.spec.window)
        self.cache = (argmax, x.shape[2])
        self.tied = tied
        return out

    def backward(self, dout):
        argmax, length = self._cached()
        return maxpool1d_backward_kernel(dout, argmax, length)


class Flatten(Layer):
    def __init__(self, spec: LayerSpec):
        super().__init__()
        self.spec = spec

    def forward(self, x):
        self.cache = x.shape
        return x.reshape(x.shape[0], -1)

    def backward(self, dout):
        return dout.reshape(self._cached())


class FullyConnected(Layer):
    def __init__(self, spec: LayerSpec, weight, bias=None):
        super().__init__()
        self.spec = spec
        self.weight = weight
        self.bias = bias

    def forward(self, x):
        self.cache = x
        out = x @ self.weight.value
        if self.bias is not None:
            out = out + self.bias.value
        return out

    def backward(self, dout):
        x = self._cached()
        self.weight.grad += x.T @ dout
        if self.bias is not None:
            self.bias.grad += dout.sum(axis=0)
        return dout @ self.weight.value.T


class Sequential(Layer):
    def __init__(self, layers: list[Layer], in_shape: tuple, out_shape: tuple):
        super().__init__()
        self.layers = layers
        self.in_shape = in_shape
        self.out_shape = out_shape

    def forward(self, x):
        if x.shape[1:] != self.in_shape:
            raise ShapeError(f"expected input shape {self.in_shape}, got {x.shape[1:]}")
        for layer in self.layers:
            x = layer(x)
        return x

    def backward(self, dout):
        for layer in reversed(self.layers):
            dout = layer.backward(dout)
        return dout

    @property
    def tied(self) -> bool:
        return any(getattr(layer, "tied", False) for layer in self.layers)

    def activation_pattern(self) -> list[np.ndarray]:
        """ReLU gates and pool winners of the last forward pass.

        Two forwards with equal patterns lie on the same linear piece of the
        network, so finite differences between them are exact up to rounding.
        """
        pattern = []
        for layer in self.layers:
            if layer.cache is None:
                continue
            if isinstance(layer, ReLU):
                pattern.append(layer.cache > 0.0)
            elif isinstance(layer, MaxPool1d):
                pattern.append(layer.cache[0])
        return pattern


# =============================================================================
# Building
# =============================================================================

def layer_output_shape(spec: LayerSpec, shape: tuple) -> tuple:
    """Shape after `spec`; (C, T) for signals, (D,) once flattened."""
    signal = len(shape) == 2
    if spec.kind == "conv1d":
        if not signal:
            raise ShapeError("conv1d after flatten")
        if shape[1] < 1:
            raise ShapeError("conv1d needs input length >= 1")
        return (spec.filters, shape[1])
    if spec.kind == "maxpool":
        if not signal:
            raise ShapeError("maxpool after flatten")
        return (shape[0], -(-shape[1] // spec.window))
    if spec.kind == "flatten":
        if not signal:
            raise ShapeError("flatten applied twice")
        return (shape[0] * shape[1],)
    if spec.kind == "fully_connected":
        if signal:
            raise ShapeError("fully_connected needs a flatten layer before it")
        return (spec.units,)
    return shape


def infer_shapes(specs: list[LayerSpec], in_shape: tuple) -> list[tuple]:
    """Output shape after each layer; raises ShapeError if the list does not type-check."""
    shapes = []
    shape = tuple(in_shape)
    for i, spec in enumerate(specs):
        try:
            shape = layer_output_shape(spec, shape)
        except ShapeError as e:
            raise ShapeError(f"layer {i} ({spec.kind}): {e}") from None
        shapes.append(shape)
    return shapes


def count_layer_params(specs: list[LayerSpec], in_shape: tuple) -> int:
    total = 0
    shape = tuple(in_shape)
    for spec in specs:
        if spec.kind == "conv1d":
            total += shape[0] * spec.width * spec.filters + (spec.filters if spec.use_bias else 0)
        elif spec.kind == "fully_connected":
            total += shape[0] * spec.units + (spec.units if spec.use_bias else 0)
        shape = layer_output_shape(spec, shape)
    return total


def build_stack(specs: list[LayerSpec], in_shape: tuple, params: ParamStore, prefix: str,
                rng: np.random.Generator) -> Sequential:
    """Instantiate `specs`, registering weights as `<prefix>.<index>.weight|bias`."""
    shapes = infer_shapes(specs, in_shape)
    layers: list[Layer] = []
    shape = tuple(in_shape)
    for i, spec in enumerate(specs):
        name = f"{prefix}.{i}"
        if spec.kind == "conv1d":
            n_in, width, n_out = shape[0], spec.width, spec.filters
            w = params.add(f"{name}.weight", glorot_uniform(rng, (n_in, width, n_out), n_in * width, n_out * width))
            b = params.add(f"{name}.bias", np.zeros(n_out)) if spec.use_bias else None
            layers.append(Conv1d(spec, w, b))
        elif spec.kind == "fully_connected":
            d_in = shape[0]
            w = params.add(f"{name}.weight", glorot_uniform(rng, (d_in, spec.units), d_in, spec.units))
            b = params.add(f"{name}.bias", np.zeros(spec.units)) if spec.use_bias else None
            layers.append(FullyConnected(spec, w, b))
        elif spec.kind == "relu":
            layers.append(ReLU(spec))
        elif spec.kind == "maxpool":
            layers.append(MaxPool1d(spec))
        else:
            layers.append(Flatten(spec))
        shape = shapes[i]
    return Sequential(layers, tuple(in_shape), shape)
