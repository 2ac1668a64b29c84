import json

import pytest

from trajnet_utils.orchestrator import Sweep


def _tasks(calls: list, fail: str | None = None) -> dict:
    def make(name):
        def fn():
            calls.append(name)
            if name == fail:
                raise ValueError(f"{name} diverged")
            return {"variant": name, "acc": 0.5}
        return fn
    return {name: make(name) for name in ("2conv", "3conv", "4conv")}


def test_runs_in_order_and_writes_state(tmp_path):
    calls = []
    sweep = Sweep(_tasks(calls), tmp_path / "state.json", fingerprint="a").run("continue")
    assert calls == ["2conv", "3conv", "4conv"]
    state = json.loads((tmp_path / "state.json").read_text())
    assert state["status"] == "done"
    assert [t["status"] for t in state["tasks"]] == ["done"] * 3
    assert sweep.results["3conv"] == {"variant": "3conv", "acc": 0.5}


def test_resume_skips_done_tasks(tmp_path):
    Sweep(_tasks([], fail="4conv"), tmp_path / "state.json", fingerprint="a").run("continue")
    calls = []
    sweep = Sweep(_tasks(calls), tmp_path / "state.json", fingerprint="a").run("continue")
    assert calls == ["4conv"]
    assert sweep.state["2conv"]["resumed"] and not sweep.failed


def test_fingerprint_change_starts_fresh(tmp_path, capsys):
    Sweep(_tasks([]), tmp_path / "state.json", fingerprint="a").run("continue")
    calls = []
    Sweep(_tasks(calls), tmp_path / "state.json", fingerprint="b").run("continue")
    assert calls == ["2conv", "3conv", "4conv"]
    assert "Topology hash mismatch" in capsys.readouterr().out


def test_continue_records_failure(tmp_path):
    calls = []
    sweep = Sweep(_tasks(calls, fail="3conv"), tmp_path / "state.json").run("continue")
    assert calls == ["2conv", "3conv", "4conv"]
    assert sweep.failed == ["3conv"]
    assert sweep.state["3conv"]["error"] == "ValueError: 3conv diverged"
    assert sweep.to_json()["status"] == "failed"


def test_crash_stops_at_first_failure(tmp_path):
    calls = []
    with pytest.raises(RuntimeError, match="3conv failed"):
        Sweep(_tasks(calls, fail="3conv"), tmp_path / "state.json").run("crash")
    assert calls == ["2conv", "3conv"]
    state = json.loads((tmp_path / "state.json").read_text())
    assert [t["status"] for t in state["tasks"]] == ["done", "failed", "pending"]


def test_on_failure_from_environment(tmp_path, monkeypatch):
    monkeypatch.setenv("SWEEP_ON_FAILURE", "crash")
    with pytest.raises(RuntimeError):
        Sweep(_tasks([], fail="2conv"), tmp_path / "state.json").run()
    with pytest.raises(ValueError):
        Sweep(_tasks([]), tmp_path / "other.json").run("retry")
