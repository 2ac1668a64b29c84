"""Resumable task runner with state persistence, used by the sweep.

The Sweep class:
- Runs named tasks (`{task_id: fn}`, each fn returning a JSON-able dict) in order
- Writes the state file after each task (atomic: tmp + rename)
- Inherits "done" tasks from a prior state file when the topology hash matches
- On failure either records it and continues, or stops ("crash")

Resume pattern:
- state file exists from a prior invocation -> load it
- topology hash matches -> done tasks keep their results and are not re-run
- topology hash differs -> log a line, ignore prior state, run fresh
"""

import hashlib
import json
import time
import traceback
from datetime import datetime, timezone
from pathlib import Path
from typing import Callable

from . import io
from .config import get_sweep_on_failure

ON_FAILURE_MODES = ("continue", "crash")


def _topology_hash(task_ids: list[str], fingerprint: str) -> str:
    """Hash of task ids plus everything that changes what a task computes."""
    payload = json.dumps([list(task_ids), fingerprint])
    return hashlib.md5(payload.encode()).hexdigest()[:16]


def _now() -> str:
    return datetime.now(timezone.utc).isoformat()


class Sweep:
    def __init__(self, tasks: dict[str, Callable[[], dict]], state_path: Path | str,
                 fingerprint: str = "", prefix: str = "[sweep]"):
        self.tasks = tasks
        self.state_path = Path(state_path)
        self.prefix = prefix
        self.topology_hash = _topology_hash(list(tasks), fingerprint)
        self.state: dict[str, dict] = {
            task_id: {
                "id": task_id,
                "status": "pending",
                "started_at": None,
                "finished_at": None,
                "duration_s": None,
                "error": None,
                "result": None,
            }
            for task_id in tasks
        }
        prior = io.read_json(self.state_path)
        if prior is not None:
            self._inherit_from(prior)

    # =========================================================================
    # Resume
    # =========================================================================

    def _inherit_from(self, prior: dict) -> None:
        prior_hash = prior.get("topology_hash")
        if prior_hash and prior_hash != self.topology_hash:
            print(f"{self.prefix} Topology hash mismatch with prior run "
                  f"({prior_hash} vs {self.topology_hash}); starting fresh")
            return
        inherited = 0
        for task in prior.get("tasks", []):
            task_id = task.get("id")
            if task_id in self.state and task.get("status") == "done":
                self.state[task_id] = {**self.state[task_id], **task, "resumed": True}
                inherited += 1
        if inherited:
            print(f"{self.prefix} Resumed from prior invocation: {inherited} tasks already done")

    # =========================================================================
    # Execution
    # =========================================================================

    def run(self, on_failure: str | None = None) -> "Sweep":
        on_failure = on_failure or get_sweep_on_failure()
        if on_failure not in ON_FAILURE_MODES:
            raise ValueError(f"on_failure must be one of {ON_FAILURE_MODES}, got {on_failure!r}")

        for task_id, fn in self.tasks.items():
            st = self.state[task_id]
            if st["status"] == "done":
                print(f"{self.prefix} {task_id} resumed (done in prior invocation)")
                continue

            print(f"{self.prefix} {task_id} started")
            st.update(status="running", started_at=_now(), error=None)
            t0 = time.monotonic()
            try:
                st["result"] = fn()
                st["status"] = "done"
            except Exception as e:
                st["status"] = "failed"
                st["error"] = f"{type(e).__name__}: {e}"
                st["traceback"] = traceback.format_exc()
            st["finished_at"] = _now()
            st["duration_s"] = round(time.monotonic() - t0, 3)

            if st["status"] == "done":
                print(f"{self.prefix} {task_id} done ({st['duration_s']:.1f}s)")
            else:
                print(f"{self.prefix} {task_id} FAILED ({st['duration_s']:.1f}s)")
                print(f"  {st['error']}")
            self.save_state()

            if st["status"] == "failed" and on_failure == "crash":
                raise RuntimeError(f"{self.prefix} {task_id} failed: {st['error']}")

        self.save_state()
        return self

    @property
    def results(self) -> dict[str, dict | None]:
        return {task_id: st["result"] for task_id, st in self.state.items()}

    @property
    def failed(self) -> list[str]:
        return [task_id for task_id, st in self.state.items() if st["status"] == "failed"]

    # =========================================================================
    # Serialization
    # =========================================================================

    def _overall_status(self) -> str:
        statuses = [st["status"] for st in self.state.values()]
        if "running" in statuses or "pending" in statuses:
            return "running"
        return "failed" if "failed" in statuses else "done"

    def to_json(self) -> dict:
        return {
            "status": self._overall_status(),
            "topology_hash": self.topology_hash,
            "tasks": list(self.state.values()),
            "total_duration_s": sum(st.get("duration_s") or 0 for st in self.state.values()),
        }

    def save_state(self) -> None:
        io.write_json(self.state_path, self.to_json())
