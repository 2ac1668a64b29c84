"""End-to-end quality checks on synthetic data. Minutes each; run with `pytest -m slow`."""

from dataclasses import replace
from pathlib import Path

import pytest

from trajnet.models import build_model, predict_batch
from trajnet.report import build_event_report
from trajnet.settings import load_settings
from trajnet.synthetic import generate_events, generate_possessions, make_profiles
from trajnet.training import evaluate_split, load_trained, overfit, split_by_game, train

CONFIGS = Path(__file__).resolve().parent.parent / "configs"

pytestmark = pytest.mark.slow


@pytest.mark.parametrize("config", ["event.ini", "team.ini"])
def test_overfit_eight_samples(tmp_path, config):
    cfg = load_settings(CONFIGS / config)
    if cfg.task == "event":
        dataset = generate_events(0, 8, class_mix={c: 1.0 for c in ("pass", "shot", "carry")})
    else:
        dataset = generate_possessions(0, make_profiles(6), 2)
    manifest = overfit(cfg, dataset, 8, tmp_path)
    assert manifest.history[-1]["train_loss"] < 0.01
    assert len(manifest.history) <= 500


def test_event_recognition_on_synthetic_plays(tmp_path):
    cfg = load_settings(CONFIGS / "event.ini")
    dataset = generate_events(17, 4000, noise_std=0.5, absent_prob=0.1)
    train(cfg, dataset, tmp_path)

    model, classes = load_trained(tmp_path / "checkpoint.parquet", dataset.header)
    test = split_by_game(dataset, cfg.split_fractions, cfg.seed).test
    known = evaluate_split(model, test, classes)
    unknown = build_event_report(predict_batch(model, test.samples, test.header.bounds, key_known=False),
                                 test.labels, classes, regime="key_unknown")
    assert known.mean_ap >= 0.80
    assert known.mean_ap >= unknown.mean_ap


def test_team_identification_on_style_profiles(tmp_path):
    cfg = load_settings(CONFIGS / "team.ini")
    dataset = generate_possessions(23, make_profiles(6, seed=23), 200)
    manifest = train(cfg, dataset, tmp_path)
    assert manifest.test["accuracy"] >= 0.60
    assert manifest.test["game_accuracy"] >= 0.95


def test_untrained_stacked_net_is_near_chance():
    cfg = load_settings(CONFIGS / "team.ini")
    dataset = generate_possessions(31, make_profiles(6, seed=31), 200)
    model = build_model(cfg.model_config(dataset.header.classes), seed=31)
    probs = predict_batch(model, dataset.samples, dataset.header.bounds)
    acc = float((probs.argmax(axis=1) == dataset.labels).mean())
    # balanced six-way task: a class-constant model scores exactly 1/6
    assert abs(acc - 1.0 / 6.0) <= 0.12


def test_sweep_layer_count_trend(tmp_path):
    cfg = replace(load_settings(CONFIGS / "team.ini"), epochs=15)
    dataset = generate_possessions(41, make_profiles(6, seed=41), 200)
    shallow = train(cfg.with_variant("2conv"), dataset, tmp_path / "2conv")
    deep = train(cfg.with_variant("5conv"), dataset, tmp_path / "5conv")
    assert deep.test["game_accuracy"] >= shallow.test["game_accuracy"]
