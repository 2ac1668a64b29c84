import re
import shutil
from pathlib import Path

import pytest

from trajnet.architectures import FILTER_SIZE_VARIANTS, LAYER_VARIANTS
from trajnet.errors import ConfigError, TaskMismatchError
from trajnet.losses import EVENT_CLASSES, EVENT_LOSS_WEIGHTS
from trajnet.records import COURT_BOUNDS, RINK_BOUNDS, DatasetHeader
from trajnet.settings import TrainConfig, load_settings, load_sweep_spec, settings_from_string

CONFIGS = Path(__file__).resolve().parent.parent / "configs"
TEAMS = tuple(f"team_{i:02d}" for i in range(6))
TEAM_HEADER = DatasetHeader("team", 5, 200, COURT_BOUNDS, TEAMS)
EVENT_HEADER = DatasetHeader("event", 5, 16, RINK_BOUNDS, EVENT_CLASSES)


def test_event_config():
    cfg = load_settings(CONFIGS / "event.ini")
    assert cfg.architecture == "shared_compare" and cfg.task == "event"
    assert cfg.labels == EVENT_CLASSES
    assert cfg.loss_weights == EVENT_LOSS_WEIGHTS
    assert cfg.split_fractions == (0.5, 0.25, 0.25)
    assert (cfg.optimizer.lr, cfg.optimizer.momentum, cfg.optimizer.batch_size) == (0.01, 0.9, 32)
    assert (cfg.epochs, cfg.patience, cfg.overfit_steps) == (30, 5, 500)

    model = cfg.model_config(cfg.resolve_classes(EVENT_HEADER))
    assert model.shared_out_shape == (128, 8)
    assert model.compare_out_shape == (512, 1)
    assert model.num_classes == 6 and not model.self_pair


def test_team_config_takes_dataset_classes():
    cfg = load_settings(CONFIGS / "team.ini")
    assert cfg.labels is None and cfg.task == "team"
    classes = cfg.resolve_classes(TEAM_HEADER)
    assert classes == TEAMS
    model = cfg.model_config(classes)
    assert (model.variant, model.num_classes, model.t, model.includes_ball) == ("5conv", 6, 200, True)
    assert cfg.weights(classes, [0, 1]).values == (1.0,) * 6


def test_task_and_label_mismatch():
    with pytest.raises(TaskMismatchError):
        load_settings(CONFIGS / "event.ini").resolve_classes(TEAM_HEADER)
    cfg = settings_from_string("[model]\narchitecture = stacked\n[classes]\nlabels = a b\n")
    with pytest.raises(TaskMismatchError, match="differ"):
        cfg.resolve_classes(TEAM_HEADER)


def test_defaults_from_empty_config():
    cfg = settings_from_string("")
    assert cfg == TrainConfig()
    assert cfg.weights(EVENT_CLASSES, []).values == EVENT_LOSS_WEIGHTS


@pytest.mark.parametrize("text, message", [
    ("[training]\nlr = 1\n", "[training]"),
    ("[model]\nwidth = 3\n", "[model] unknown key 'width'"),
    ("[optimizer]\nlr = fast\n", "[optimizer] lr"),
    ("[optimizer]\nmomentum = 1.5\n", "momentum"),
    ("[model]\nnp = five\n", "[model] np"),
    ("[model]\nincludes_ball = true\n", "[model] includes_ball"),
    ("[model]\narchitecture = stacked\nself_pair = true\n", "[model] self_pair"),
    ("[model]\narchitecture = lstm\n", "[model] architecture"),
    ("[classes]\nloss_weights = heavy\n", "[classes] loss_weights"),
    ("[run]\nsplit = 0.5 0.5 0.5\n", "[run] split"),
    ("[model]\nconv_bias = maybe\n", "[model] conv_bias"),
], ids=["section", "key", "float", "range", "int", "stacked-only", "compare-only", "arch", "weights", "split", "bool"])
def test_bad_settings_name_the_section(text, message):
    with pytest.raises(ConfigError, match=re.escape(message)):
        settings_from_string(text)


def test_weight_modes():
    cfg = settings_from_string("[classes]\nlabels = a b c\nloss_weights = inverse_frequency\n")
    assert cfg.weights(("a", "b", "c"), [0, 0, 1, 2, 2, 2]).values == pytest.approx((0.5, 1.0, 1.0 / 3.0))
    explicit = settings_from_string("[classes]\nlabels = a b c\nloss_weights = 1, 2\n")
    with pytest.raises(ConfigError, match="2 values for 3 classes"):
        explicit.weights(("a", "b", "c"), [])


def test_missing_config_file(tmp_path):
    with pytest.raises(ConfigError, match="not found"):
        load_settings(tmp_path / "nope.ini")


def test_with_variant_drops_layer_lists():
    cfg = settings_from_string("[model]\narchitecture = stacked\nfilters = 8 8\nfilter_sizes = 3 3\nt = 50\n")
    swapped = cfg.with_variant("3conv")
    assert swapped.model == {"variant": "3conv", "t": 50}
    assert swapped.model_config(TEAMS).filters == (64, 128, 256)


def test_to_dict_is_plain():
    d = load_settings(CONFIGS / "event.ini").to_dict()
    assert d["model"]["filters"] == [128, 128, 256, 512]
    assert d["split"] == [0.5, 0.25, 0.25] and d["optimizer"]["lr"] == 0.01


# =============================================================================
# Sweep specs
# =============================================================================

def test_shipped_sweep_specs():
    spec = load_sweep_spec(CONFIGS / "sweep_layers.ini")
    assert spec.sweep == "layers" and spec.variants == tuple(LAYER_VARIANTS)
    configs = spec.configs()
    assert configs["5conv+2fc"].model_config(TEAMS).fc_tail == (1024, 1024)
    assert load_sweep_spec(CONFIGS / "sweep_base_filters.ini").variants == ("base16", "base32", "base64", "base128")


def test_sweep_variant_subset(tmp_path):
    shutil.copy(CONFIGS / "team.ini", tmp_path / "team.ini")
    spec_path = tmp_path / "spec.ini"
    spec_path.write_text("[sweep]\nbase_config = team.ini\nsweep = filter_sizes\nvariants = 3 3 3 2 2, 9 7 7 5 5\n")
    spec = load_sweep_spec(spec_path)
    assert spec.variants == ("3 3 3 2 2", "9 7 7 5 5")
    assert all(v in FILTER_SIZE_VARIANTS for v in spec.variants)
    assert spec.configs()["9 7 7 5 5"].model_config(TEAMS).filter_sizes == (9, 7, 7, 5, 5)


@pytest.mark.parametrize("body, message", [
    ("base_config = team.ini\nsweep = depth\n", "unknown 'depth'"),
    ("base_config = team.ini\nsweep = layers\nvariants = 9conv\n", "9conv"),
    ("sweep = layers\n", "needs both"),
    ("base_config = event.ini\nsweep = layers\n", "stacked architecture only"),
    ("base_config = team.ini\nsweep = layers\nworkers = 2\n", "unknown key"),
])
def test_bad_sweep_specs(tmp_path, body, message):
    for name in ("team.ini", "event.ini"):
        shutil.copy(CONFIGS / name, tmp_path / name)
    (tmp_path / "spec.ini").write_text("[sweep]\n" + body)
    with pytest.raises(ConfigError, match=re.escape(message)):
        load_sweep_spec(tmp_path / "spec.ini")
