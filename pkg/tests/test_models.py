import numpy as np
import pytest

from trajnet.architectures import (
    BASE_FILTER_VARIANTS, FILTER_SIZE_VARIANTS, LAYER_VARIANTS, SharedCompareConfig, StackedConfig,
    config_from_dict, count_params, default_compare_layers, default_shared_layers, stacked_variant,
    sweep_variants,
)
from trajnet.errors import BackwardBeforeForwardError, ConfigError, MissingAgentError, ShapeError
from trajnet.layers import LayerSpec
from trajnet.models import (
    SharedCompareNet, StackedNet, build_model, encode_event, model_from_state, order_players, predict_batch,
    predict_unknown_key, proximity_order, shared_compare_forward, stacked_forward,
)
from trajnet.records import RINK_BOUNDS, PossessionSample, TrajectorySample
from trajnet_utils.testing import assert_probability_rows


def event_sample(positions, t=16, absent=(), key=0, label=0):
    """Persons standing still at `positions`; persons in `absent` are never tracked."""
    n = len(positions)
    xy = np.zeros((n, 2, t))
    mask = np.ones((n, t), dtype=bool)
    for p, (x, y) in enumerate(positions):
        if p in absent:
            mask[p] = False
            continue
        xy[p, 0], xy[p, 1] = x, y
    return TrajectorySample(xy, mask, label, key=key, game_id="g00")


def random_event(rng, n=5, t=16, key=0):
    xy = rng.uniform(-80, 80, size=(n, 2, t))
    mask = rng.random((n, t)) > 0.2
    mask[key] = True
    xy = np.where(mask[:, None, :], xy, 0.0)
    return TrajectorySample(xy, mask, int(rng.integers(0, 6)), key=key, game_id="g01")


def random_possession(rng, n=5, t=200):
    ball = rng.uniform(0, 50, size=(2, t))
    players = rng.uniform(0, 50, size=(n, 2, t))
    mask = rng.random((n, t)) > 0.1
    players = np.where(mask[:, None, :], players, 0.0)
    return PossessionSample(ball, np.ones(t, dtype=bool), players, mask, int(rng.integers(0, 30)), "r000g00")


# =============================================================================
# Configs
# =============================================================================

def test_default_shared_compare_layers():
    assert default_shared_layers() == (LayerSpec.conv(64, 3), LayerSpec.relu(), LayerSpec.conv(128, 3),
                                       LayerSpec.relu(), LayerSpec.maxpool(2))
    convs = [(s.filters, s.width) for s in default_compare_layers() if s.kind == "conv1d"]
    assert convs == [(128, 3), (128, 3), (256, 3), (512, 2)]
    cfg = SharedCompareConfig()
    assert cfg.input_shape == (5, 2, 16)
    assert cfg.num_pairs == 4
    assert cfg.shared_out_shape == (128, 8)
    assert cfg.compare_in_shape == (256, 8)
    assert cfg.compare_out_shape == (512, 1)


def test_default_stacked_shapes():
    cfg = StackedConfig()
    assert cfg.input_shape == (12, 200)
    assert cfg.conv_out_shape == (512, 7)
    assert cfg.flatten_size == 3584


def test_count_params_matches_store(small_shared_cfg, small_stacked_cfg):
    for cfg in (SharedCompareConfig(), StackedConfig(), small_shared_cfg, small_stacked_cfg,
                stacked_variant("5conv+2fc")):
        assert count_params(cfg) == build_model(cfg).params.count()


def test_first_layer_param_count():
    cfg = SharedCompareConfig(shared=(LayerSpec.conv(64, 3), LayerSpec.relu()))
    model = SharedCompareNet(cfg)
    assert model.params["shared.0.weight"].size == 384


def test_config_validation():
    with pytest.raises(ConfigError):
        SharedCompareConfig(np=1)
    with pytest.raises(ConfigError):
        SharedCompareConfig(num_classes=1)
    with pytest.raises(ConfigError):
        SharedCompareConfig(shared=(LayerSpec.flatten(),))
    with pytest.raises(ConfigError):
        StackedConfig(filter_sizes=(), filters=())


def test_config_round_trip(small_shared_cfg):
    for cfg in (small_shared_cfg, stacked_variant("9 7 7 5 5", num_classes=6)):
        assert config_from_dict(cfg.to_dict()) == cfg
    with pytest.raises(ConfigError):
        config_from_dict({"architecture": "lstm"})


def test_variant_catalogue():
    assert list(LAYER_VARIANTS) == ["2conv", "3conv", "4conv", "5conv", "5conv+2fc"]
    assert list(FILTER_SIZE_VARIANTS) == ["3 3 3 2 2", "5 3 3 3 3", "7 5 5 3 3", "9 7 7 5 5"]
    assert [v["filters"][0] for v in BASE_FILTER_VARIANTS.values()] == [16, 32, 64, 128]
    assert [c.variant for c in sweep_variants("layers")] == list(LAYER_VARIANTS)
    two_fc = stacked_variant("5conv+2fc")
    assert [s.units for s in two_fc.layers if s.kind == "fully_connected"] == [1024, 1024, 30]
    with pytest.raises(ConfigError):
        stacked_variant("6conv")


# =============================================================================
# Ordering
# =============================================================================

def test_proximity_order_by_distance():
    sample = event_sample([(0, 0), (2, 0), (1, 0), (3, 0)])
    assert proximity_order(sample, 0).order == (0, 2, 1, 3)


def test_proximity_order_ties_keep_storage_order():
    sample = event_sample([(0, 0), (3, 4), (0, 5), (1, 1)])
    assert proximity_order(sample, 0).order == (0, 3, 1, 2)


def test_proximity_order_absent_last():
    sample = event_sample([(0, 0), (50, 0), (1, 0), (2, 0), (3, 0)], absent=(2,))
    assert proximity_order(sample, 0).order[-1] == 2


def test_proximity_order_errors():
    sample = event_sample([(0, 0), (1, 0)], absent=(0,))
    with pytest.raises(MissingAgentError):
        proximity_order(sample, 0)
    with pytest.raises(ShapeError):
        proximity_order(sample, 5)


def test_order_players_by_ball_distance(rng):
    t = 10
    ball = np.zeros((2, t))
    players = np.zeros((3, 2, t))
    players[0, 0] = 30.0
    players[1, 0] = 10.0
    players[2, 0] = 20.0
    mask = np.ones((3, t), dtype=bool)
    mask[2] = False
    players[2] = 0.0
    sample = PossessionSample(ball, np.ones(t, dtype=bool), players, mask, 0)
    assert order_players(sample) == [1, 0, 2]

    no_ball = PossessionSample(np.zeros((2, t)), np.zeros(t, dtype=bool), players, mask, 0)
    with pytest.raises(MissingAgentError):
        order_players(no_ball)


# =============================================================================
# Networks
# =============================================================================

def test_shape_fidelity():
    sc = SharedCompareNet(SharedCompareConfig())
    sc.logits(np.zeros((1, 5, 2, 16)))
    for shape in [(1, 4, 2, 16), (1, 5, 2, 15), (5, 2, 16)]:
        with pytest.raises(ShapeError):
            sc.logits(np.zeros(shape))

    st = StackedNet(StackedConfig())
    st.logits(np.zeros((1, 12, 200)))
    for shape in [(1, 10, 200), (1, 12, 199), (12, 200)]:
        with pytest.raises(ShapeError):
            st.logits(np.zeros(shape))


def test_all_absent_sample_gives_uniform_output():
    model = SharedCompareNet(SharedCompareConfig())
    x = np.zeros((1, 5, 2, 16))
    assert np.allclose(model.predict_proba(x), 1 / 6, atol=1e-15)


def test_backward_before_forward(small_shared_cfg):
    with pytest.raises(BackwardBeforeForwardError):
        SharedCompareNet(small_shared_cfg).backward(np.zeros((1, 4)))


def test_same_seed_same_weights(small_stacked_cfg):
    a, b = StackedNet(small_stacked_cfg, seed=4), StackedNet(small_stacked_cfg, seed=4)
    assert all(np.array_equal(a.params[n].value, b.params[n].value) for n in a.params.names())


def test_shared_compare_ordering_invariance(rng):
    model = SharedCompareNet(SharedCompareConfig(), seed=0)
    for _ in range(200):
        sample = random_event(rng, key=int(rng.integers(0, 5)))
        perm = list(rng.permutation(5))
        a = shared_compare_forward(model, sample, proximity_order(sample, sample.key), RINK_BOUNDS)
        moved = sample.permuted(perm)
        b = shared_compare_forward(model, moved, proximity_order(moved, moved.key), RINK_BOUNDS)
        assert np.max(np.abs(a - b)) == 0.0


def test_stacked_ordering_invariance(rng, small_stacked_cfg):
    cfg = StackedConfig(np=5, t=40, filter_sizes=(5, 3), filters=(8, 8), num_classes=4)
    model = StackedNet(cfg, seed=0)
    for _ in range(200):
        sample = random_possession(rng, t=40)
        perm = list(rng.permutation(5))
        a = stacked_forward(model, sample)
        b = stacked_forward(model, sample.permuted(perm))
        assert np.max(np.abs(a - b)) == 0.0


def test_unknown_key_is_mean_over_present_keys(rng):
    model = SharedCompareNet(SharedCompareConfig(), seed=1)
    sample = random_event(rng)
    expected = np.mean([shared_compare_forward(model, sample, proximity_order(sample, p))
                        for p in range(5)], axis=0)
    assert np.allclose(predict_unknown_key(model, sample), expected, atol=1e-15)


def test_unknown_key_lies_between_per_key_extremes(rng):
    model = SharedCompareNet(SharedCompareConfig(), seed=2)
    for _ in range(10):
        sample = random_event(rng)
        per_key = np.stack([shared_compare_forward(model, sample, proximity_order(sample, p))
                            for p in sample.present_persons()])
        averaged = predict_unknown_key(model, sample)
        assert np.all(averaged >= per_key.min(axis=0) - 1e-12)
        assert np.all(averaged <= per_key.max(axis=0) + 1e-12)
        assert_probability_rows(averaged[None])


def test_unknown_key_with_one_present_person(rng):
    model = SharedCompareNet(SharedCompareConfig(), seed=1)
    sample = event_sample([(1, 2), (3, 4), (5, 6), (7, 8), (9, 10)], absent=(0, 1, 3, 4), key=2)
    known = shared_compare_forward(model, sample, proximity_order(sample, 2))
    assert np.array_equal(predict_unknown_key(model, sample), known)

    empty = event_sample([(0, 0)] * 5, absent=range(5), key=None)
    with pytest.raises(MissingAgentError):
        predict_unknown_key(model, empty)


def test_predict_batch(rng, small_shared_cfg):
    model = SharedCompareNet(small_shared_cfg)
    samples = [random_event(rng, n=3, t=8) for _ in range(7)]
    for s in samples:
        s.label = s.label % 4
    probs = predict_batch(model, samples, RINK_BOUNDS, batch_size=3)
    assert probs.shape == (7, 4)
    assert_probability_rows(probs)
    assert np.allclose(probs[2], shared_compare_forward(model, samples[2],
                                                        proximity_order(samples[2], 0), RINK_BOUNDS))
    assert predict_batch(model, [], RINK_BOUNDS).shape == (0, 4)
    assert predict_batch(model, samples, RINK_BOUNDS, key_known=False).shape == (7, 4)


def test_encode_event_normalizes_and_keeps_absent_zero():
    sample = event_sample([(100, 42.5), (-100, -42.5), (0, 0)], absent=(2,))
    x = encode_event(sample, proximity_order(sample, 0), RINK_BOUNDS)
    assert np.allclose(x[0], 1.0)
    assert np.allclose(x[1], -1.0)
    assert not x[2].any()


def test_model_from_state(small_stacked_cfg, rng):
    model = StackedNet(small_stacked_cfg, seed=9)
    clone = model_from_state(small_stacked_cfg.to_dict(), model.params.state())
    x = rng.standard_normal((2, *small_stacked_cfg.input_shape))
    assert np.array_equal(model.logits(x), clone.logits(x))
