import csv

import pytest

from trajnet_utils import config, debug


def test_run_dir_from_env(run_env):
    path = config.run_dir(7)
    assert path == run_env / "runs" / "test-run" and path.is_dir()


def test_run_id_defaults_to_timestamp_and_seed(monkeypatch):
    monkeypatch.delenv("RUN_ID", raising=False)
    assert config.get_run_id(42).endswith("-s42")


@pytest.mark.parametrize("var, value", [
    ("ENABLE_LOGGING", "sometimes"),
    ("TRAJNET_SINGLE_THREADED", "2"),
    ("TRAJNET_WORKERS", "many"),
    ("TRAJNET_WORKERS", "0"),
    ("SWEEP_ON_FAILURE", "retry"),
])
def test_validate_environment_rejects(monkeypatch, var, value):
    monkeypatch.setenv(var, value)
    with pytest.raises(ValueError, match=var):
        config.validate_environment()


def test_env_defaults(monkeypatch):
    for var in ("ENABLE_LOGGING", "TRAJNET_SINGLE_THREADED", "TRAJNET_WORKERS", "SWEEP_ON_FAILURE"):
        monkeypatch.delenv(var, raising=False)
    config.validate_environment()
    assert not config.is_logging_enabled() and config.is_single_threaded()
    assert config.get_workers() == 1 and config.get_sweep_on_failure() == "continue"


def test_csv_logs_only_when_enabled(run_env, monkeypatch):
    path = config.run_dir(0)
    debug.log_run_start("train", 0)
    assert not (path / "runs.csv").exists()

    monkeypatch.setenv("ENABLE_LOGGING", "true")
    debug.log_run_start("train", 0)
    debug.log_epoch(1, 0.5, 0.25, 1.2344)
    debug.log_run_end("train", status="failed", error="boom")
    with open(path / "runs.csv", newline="") as f:
        rows = list(csv.DictReader(f))
    assert [(r["event"], r["status"], r["error"]) for r in rows] == [("start", "", ""), ("end", "failed", "boom")]
    assert all(r["traceback"] == "" for r in rows)
    with open(path / "epochs.csv", newline="") as f:
        (epoch,) = list(csv.DictReader(f))
    assert epoch["epoch"] == "1" and epoch["seconds"] == "1.234"


def test_memory_profiler_records_peak():
    with debug.MemoryProfiler(interval=0.01) as prof:
        sum(range(10_000))
    assert prof.peak_rss_mb > 0
