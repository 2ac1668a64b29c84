"""Channels-by-time signal arrays.

A SignalTensor is a read-only (C, T) float64 array stored channel-major:
all of channel 0's timeline, then channel 1's, and so on. Layers iterate a
filter across time within a channel, so time is the contiguous axis.

No differentiation lives here; see layers.py.
"""

from dataclasses import dataclass

import numpy as np

from .errors import NonFiniteError, ShapeError


@dataclass(frozen=True, eq=False)
class SignalTensor:
    values: np.ndarray

    def __post_init__(self):
        arr = np.array(self.values, dtype=np.float64, order="C", copy=True)
        if arr.ndim != 2:
            raise ShapeError(f"SignalTensor needs a 2-D (channels, length) array, got shape {arr.shape}")
        if arr.shape[0] < 1:
            raise ShapeError("SignalTensor needs at least one channel")
        if not np.all(np.isfinite(arr)):
            raise NonFiniteError("SignalTensor values must be finite")
        arr.setflags(write=False)
        object.__setattr__(self, "values", arr)

    @property
    def channels(self) -> int:
        return self.values.shape[0]

    @property
    def length(self) -> int:
        return self.values.shape[1]

    def channel_slice(self, start: int, count: int) -> "SignalTensor":
        if start < 0 or count < 1 or start + count > self.channels:
            raise ShapeError(f"channel slice [{start}, {start + count}) outside 0..{self.channels}")
        return SignalTensor(self.values[start:start + count])

    def to_list(self) -> list[list[float]]:
        return self.values.tolist()

    def __eq__(self, other) -> bool:
        if not isinstance(other, SignalTensor):
            return NotImplemented
        return self.values.shape == other.values.shape and np.array_equal(self.values, other.values)

    def __repr__(self) -> str:
        return f"SignalTensor(channels={self.channels}, length={self.length})"


@dataclass(frozen=True, eq=False)
class FilterBank:
    """Conv filters indexed (in_channel i, tap j, filter k)."""

    weights: np.ndarray

    def __post_init__(self):
        arr = np.array(self.weights, dtype=np.float64, copy=True)
        if arr.ndim != 3 or min(arr.shape) < 1:
            raise ShapeError(f"FilterBank needs a (in_channels, width, out_channels) array, got {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise NonFiniteError("FilterBank weights must be finite")
        arr.setflags(write=False)
        object.__setattr__(self, "weights", arr)

    @property
    def in_channels(self) -> int:
        return self.weights.shape[0]

    @property
    def width(self) -> int:
        return self.weights.shape[1]

    @property
    def out_channels(self) -> int:
        return self.weights.shape[2]


def zeros(channels: int, length: int) -> SignalTensor:
    if channels < 1:
        raise ShapeError("zeros() needs channels >= 1")
    if length < 0:
        raise ShapeError("zeros() needs length >= 0")
    return SignalTensor(np.zeros((channels, length)))


def stack_channels(parts: list[SignalTensor]) -> SignalTensor:
    """Concatenate parts along the channel axis, in list order."""
    if not parts:
        raise ShapeError("stack_channels() needs at least one part")
    lengths = {p.length for p in parts}
    if len(lengths) != 1:
        raise ShapeError(f"stack_channels() parts have mismatched lengths: {sorted(lengths)}")
    return SignalTensor(np.concatenate([p.values for p in parts], axis=0))


def slice_time(x: SignalTensor, start: int, length: int) -> SignalTensor:
    """Columns [start, start+length) of x."""
    if start < 0 or length < 0 or start + length > x.length:
        raise ShapeError(f"time slice [{start}, {start + length}) outside 0..{x.length}")
    return SignalTensor(x.values[:, start:start + length])
