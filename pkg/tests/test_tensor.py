import numpy as np
import pytest

from trajnet.errors import NonFiniteError, ShapeError
from trajnet.tensor import FilterBank, SignalTensor, slice_time, stack_channels, zeros


def test_zeros():
    z = zeros(2, 3)
    assert (z.channels, z.length) == (2, 3)
    assert np.abs(z.values).sum() == 0.0

    assert zeros(1, 0).length == 0
    assert zeros(12, 200).values.size == 2400


def test_zeros_rejects_no_channels():
    with pytest.raises(ShapeError):
        zeros(0, 3)


def test_signal_tensor_is_read_only_and_finite():
    x = SignalTensor([[1.0, 2.0]])
    with pytest.raises(ValueError):
        x.values[0, 0] = 5.0
    with pytest.raises(NonFiniteError):
        SignalTensor([[1.0, np.nan]])
    with pytest.raises(ShapeError):
        SignalTensor([1.0, 2.0])


def test_stack_channels_definition():
    out = stack_channels([SignalTensor([[1, 2]]), SignalTensor([[3, 4]])])
    assert out.to_list() == [[1.0, 2.0], [3.0, 4.0]]


def test_stack_channels_single_part_is_identity():
    x = SignalTensor(np.arange(6.0).reshape(2, 3))
    assert stack_channels([x]) == x


def test_stack_channels_possession_shape():
    parts = [zeros(2, 200) for _ in range(6)]
    out = stack_channels(parts)
    assert (out.channels, out.length) == (12, 200)


def test_stack_then_slice_recovers_parts(rng):
    for _ in range(50):
        length = int(rng.integers(0, 10))
        parts = [SignalTensor(rng.integers(-50, 50, size=(int(rng.integers(1, 4)), length)).astype(float))
                 for _ in range(int(rng.integers(1, 5)))]
        stacked = stack_channels(parts)
        start = 0
        for part in parts:
            assert stacked.channel_slice(start, part.channels) == part
            start += part.channels


def test_stack_channels_errors():
    with pytest.raises(ShapeError):
        stack_channels([])
    with pytest.raises(ShapeError):
        stack_channels([zeros(1, 3), zeros(1, 4)])


def test_slice_time():
    x = SignalTensor([[1, 2, 3, 4]])
    assert slice_time(x, 1, 2).to_list() == [[2.0, 3.0]]
    assert slice_time(x, 0, x.length) == x
    with pytest.raises(ShapeError):
        slice_time(x, 3, 2)
    with pytest.raises(ShapeError):
        slice_time(x, -1, 1)


def test_event_window_slice():
    track = SignalTensor(np.arange(200.0)[None])
    window = slice_time(track, 100 - 7, 16)
    assert window.values[0, 0] == 93.0 and window.values[0, -1] == 108.0


def test_slice_composition(rng):
    x = SignalTensor(rng.standard_normal((3, 30)))
    for _ in range(50):
        a = int(rng.integers(0, 30))
        la = int(rng.integers(0, 31 - a))
        b = int(rng.integers(0, la + 1))
        lb = int(rng.integers(0, la - b + 1))
        assert slice_time(slice_time(x, a, la), b, lb) == slice_time(x, a + b, lb)


def test_filter_bank_shape():
    f = FilterBank(np.zeros((2, 3, 4)))
    assert (f.in_channels, f.width, f.out_channels) == (2, 3, 4)
    with pytest.raises(ShapeError):
        FilterBank(np.zeros((2, 3)))
