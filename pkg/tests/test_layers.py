import numpy as np
import pytest

from trajnet.errors import BackwardBeforeForwardError, ShapeError
from trajnet.layers import (
    LayerSpec, ParamStore, ReLU, build_stack, conv1d_forward, count_layer_params, infer_shapes,
    maxpool_forward, relu_forward,
)
from trajnet.tensor import FilterBank, SignalTensor, zeros


def naive_conv(x: np.ndarray, f: np.ndarray) -> np.ndarray:
    n_in, length = x.shape
    _, width, n_out = f.shape
    out = np.zeros((n_out, length))
    for k in range(n_out):
        for t in range(length):
            acc = 0.0
            for i in range(n_in):
                for j in range(width):
                    if t + j < length:
                        acc += x[i, t + j] * f[i, j, k]
            out[k, t] = acc
    return out


# =============================================================================
# conv1d
# =============================================================================

def test_conv_example():
    x = SignalTensor([[1, 2, 3, 4]])
    f = FilterBank(np.array([1.0, 0.0, -1.0]).reshape(1, 3, 1))
    assert conv1d_forward(x, f).to_list() == [[-2.0, -2.0, 3.0, 4.0]]


def test_conv_identity_filter():
    x = SignalTensor(np.arange(12.0).reshape(3, 4))
    f = FilterBank(np.eye(3).reshape(3, 1, 3))
    assert conv1d_forward(x, f) == x


def test_conv_zero_input():
    f = FilterBank(np.ones((2, 3, 5)))
    out = conv1d_forward(zeros(2, 7), f)
    assert out == zeros(5, 7)


def test_conv_matches_naive_oracle(rng):
    for _ in range(1000):
        c, t, w, m = (int(v) for v in rng.integers(1, 9, size=4))
        x = rng.integers(-9, 10, size=(c, t)).astype(float)
        f = rng.integers(-9, 10, size=(c, w, m)).astype(float)
        out = conv1d_forward(SignalTensor(x), FilterBank(f))
        assert np.array_equal(out.values, naive_conv(x, f))


def test_conv_bias():
    x = SignalTensor([[1, 2, 3]])
    f = FilterBank(np.ones((1, 1, 2)))
    out = conv1d_forward(x, f, use_bias=True, bias=np.array([10.0, -1.0]))
    assert out.to_list() == [[11.0, 12.0, 13.0], [0.0, 1.0, 2.0]]


def test_conv_channel_mismatch():
    with pytest.raises(ShapeError):
        conv1d_forward(zeros(2, 4), FilterBank(np.ones((3, 1, 1))))


# =============================================================================
# relu / maxpool
# =============================================================================

def test_relu():
    assert relu_forward(SignalTensor([[-2, -2, 3, 4]])).to_list() == [[0.0, 0.0, 3.0, 4.0]]
    x = SignalTensor([[0.5, 1.0]])
    assert relu_forward(x) == x
    assert relu_forward(SignalTensor([[-1.0, -3.0]])) == zeros(1, 2)


def test_maxpool_example():
    out, record = maxpool_forward(SignalTensor([[0, 0, 3, 4]]), 2)
    assert out.to_list() == [[0.0, 4.0]]
    assert record.indices.tolist() == [[0, 3]]


def test_maxpool_partial_last_window():
    out, record = maxpool_forward(SignalTensor([[1, 5, 2, 2, 7]]), 2)
    assert out.to_list() == [[5.0, 2.0, 7.0]]
    assert record.indices.tolist() == [[1, 2, 4]]


def test_maxpool_constant_and_ties():
    out, record = maxpool_forward(SignalTensor([[3, 3, 3, 3, 3]]), 3)
    assert out.to_list() == [[3.0, 3.0]]
    assert record.indices.tolist() == [[0, 3]]
    assert record.tied


def test_maxpool_zero_ties_are_not_flagged():
    _, record = maxpool_forward(SignalTensor([[0, 0, 1, 2]]), 2)
    assert not record.tied


def test_shifting_input_by_pool_window_shifts_output_one_cell(rng):
    stride = 2
    for _ in range(200):
        channels, width, filters = (int(v) for v in rng.integers(1, [4, 6, 4]))
        length = 2 * int(rng.integers(4, 13))
        x = rng.normal(size=(channels, length))
        f = FilterBank(rng.normal(size=(channels, width, filters)))
        shifted = np.concatenate([x[:, stride:], np.zeros((channels, stride))], axis=1)

        out, _ = maxpool_forward(conv1d_forward(SignalTensor(x), f), stride)
        moved, _ = maxpool_forward(conv1d_forward(SignalTensor(shifted), f), stride)
        # cells whose pooling window stays W-1 frames clear of the end
        valid = max(0, (length - stride - width) // stride)
        np.testing.assert_allclose(moved.values[:, :valid], out.values[:, 1:valid + 1], rtol=1e-13, atol=1e-13)


# =============================================================================
# Shapes and parameters
# =============================================================================

def test_infer_shapes_stacked_pooling():
    specs = []
    for m in (64, 128, 256, 512, 512):
        specs += [LayerSpec.conv(m, 3), LayerSpec.relu(), LayerSpec.maxpool(2)]
    lengths = [s[1] for s in infer_shapes(specs, (12, 200))[2::3]]
    assert lengths == [100, 50, 25, 13, 7]


def test_infer_shapes_rejects_bad_stacks():
    with pytest.raises(ShapeError, match="layer 0"):
        infer_shapes([LayerSpec.fc(3)], (2, 4))
    with pytest.raises(ShapeError, match="layer 2"):
        infer_shapes([LayerSpec.flatten(), LayerSpec.fc(3), LayerSpec.conv(2, 1)], (2, 4))


def test_layer_spec_validation():
    with pytest.raises(ShapeError):
        LayerSpec.conv(0, 3)
    with pytest.raises(ShapeError):
        LayerSpec.maxpool(0)
    with pytest.raises(ShapeError):
        LayerSpec("dropout")
    spec = LayerSpec.conv(8, 3, use_bias=True)
    assert LayerSpec.from_dict(spec.to_dict()) == spec


def test_count_layer_params():
    assert count_layer_params([LayerSpec.conv(1, 1)], (1, 5)) == 1
    assert count_layer_params([LayerSpec.conv(64, 3)], (2, 16)) == 384
    assert count_layer_params([LayerSpec.conv(4, 3, use_bias=True), LayerSpec.flatten(), LayerSpec.fc(2)],
                              (2, 5)) == 2 * 3 * 4 + 4 + 20 * 2


def test_build_stack_names_and_shapes(rng):
    params = ParamStore()
    stack = build_stack([LayerSpec.conv(4, 3, use_bias=True), LayerSpec.relu(), LayerSpec.maxpool(2),
                         LayerSpec.flatten(), LayerSpec.fc(3)], (2, 6), params, "net", rng)
    assert params.names() == ["net.0.weight", "net.0.bias", "net.4.weight"]
    assert stack.out_shape == (3,)
    out = stack.forward(rng.standard_normal((5, 2, 6)))
    assert out.shape == (5, 3)
    with pytest.raises(ShapeError):
        stack.forward(np.zeros((5, 2, 7)))


def test_param_store_grads_and_state(rng):
    params = ParamStore()
    p = params.add("w", rng.standard_normal((2, 3)))
    p.grad += 1.0
    params.zero_grad()
    assert not p.grad.any()
    assert params.count() == 6

    state = params.state()
    p.value[...] = 0.0
    params.load_state(state)
    assert np.array_equal(p.value, state["w"])
    with pytest.raises(ShapeError):
        params.load_state({"w": np.zeros(3)})
    with pytest.raises(ShapeError):
        params.load_state({"v": np.zeros((2, 3))})
    with pytest.raises(ShapeError):
        params.add("w", np.zeros(1))


def test_backward_before_forward():
    with pytest.raises(BackwardBeforeForwardError):
        ReLU(LayerSpec.relu()).backward(np.ones((1, 1, 1)))


def test_conv_backward_accumulates(rng):
    params = ParamStore()
    stack = build_stack([LayerSpec.conv(2, 3)], (1, 5), params, "c", rng)
    x = rng.standard_normal((1, 1, 5))
    stack.forward(x)
    stack.backward(np.ones((1, 2, 5)))
    first = params["c.0.weight"].grad.copy()
    stack.forward(x)
    stack.backward(np.ones((1, 2, 5)))
    assert np.allclose(params["c.0.weight"].grad, 2 * first)
