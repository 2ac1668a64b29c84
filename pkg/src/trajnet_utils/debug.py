import csv
import os
import threading
from datetime import datetime
from pathlib import Path

from .config import is_logging_enabled

_log_dir = None
RUN_FIELDS = ["timestamp", "run_id", "command", "event", "status", "seed", "error", "traceback"]


def _get_log_dir() -> Path:
    global _log_dir
    current = os.environ.get("LOG_DIR")
    if current:
        _log_dir = Path(current)
    elif _log_dir is None:
        _log_dir = Path("logs") / datetime.now().strftime("%Y%m%d-%H%M%S")
    _log_dir.mkdir(parents=True, exist_ok=True)
    return _log_dir


def _append_csv(filename: str, row: dict, fieldnames: list):
    if not is_logging_enabled():
        return
    filepath = _get_log_dir() / filename
    file_exists = filepath.exists()
    with open(filepath, "a", newline="", encoding="utf-8") as f:
        writer = csv.DictWriter(f, fieldnames=fieldnames)
        if not file_exists:
            writer.writeheader()
        writer.writerow(row)


def log_run_start(command: str, seed: int | None = None):
    _append_csv("runs.csv", {
        "timestamp": datetime.now().isoformat(),
        "run_id": os.environ.get("RUN_ID", _get_log_dir().name),
        "command": command,
        "event": "start",
        "status": "",
        "seed": "" if seed is None else seed,
        "error": "",
        "traceback": "",
    }, RUN_FIELDS)


def log_run_end(command: str, status: str = "completed", error=None, trace: str = ""):
    """`trace` holds the traceback of a failure outside the TrajnetError hierarchy."""
    _append_csv("runs.csv", {
        "timestamp": datetime.now().isoformat(),
        "run_id": os.environ.get("RUN_ID", _get_log_dir().name),
        "command": command,
        "event": "end",
        "status": status,
        "seed": "",
        "error": str(error) if error else "",
        "traceback": trace,
    }, RUN_FIELDS)


def log_epoch(epoch: int, train_loss: float, val_metric: float, seconds: float, **kwargs):
    """One row per training epoch. Extra keyword metrics are ignored."""
    _append_csv("epochs.csv", {
        "timestamp": datetime.now().isoformat(),
        "epoch": epoch,
        "train_loss": train_loss,
        "val_metric": val_metric,
        "seconds": round(seconds, 3),
    }, ["timestamp", "epoch", "train_loss", "val_metric", "seconds"])


class MemoryProfiler:
    """Sample this process's RSS every N seconds; track the peak.

    Samples go to memory.csv in the run directory when logging is enabled;
    the peak is always available as `peak_rss_mb` after stop().
    """

    def __init__(self, interval: float = 2.0):
        self.interval = interval
        self.peak_rss_mb = 0.0
        self._stop = threading.Event()
        self._thread = None

    def __enter__(self):
        self.start()
        return self

    def __exit__(self, *exc):
        self.stop()

    def start(self):
        self._thread = threading.Thread(target=self._sample_loop, daemon=True)
        self._thread.start()

    def stop(self):
        self._stop.set()
        if self._thread:
            self._thread.join(timeout=2)

    def _sample_loop(self):
        try:
            import psutil
        except ImportError:
            print("Warning: psutil not available, memory profiling disabled")
            return

        process = psutil.Process(os.getpid())
        while True:
            try:
                rss_mb = round(process.memory_info().rss / 1024 / 1024, 1)
            except (psutil.NoSuchProcess, psutil.AccessDenied):
                break
            self.peak_rss_mb = max(self.peak_rss_mb, rss_mb)
            _append_csv("memory.csv", {
                "timestamp": datetime.now().isoformat(),
                "rss_mb": rss_mb,
                "pct": round(process.memory_percent(), 1),
            }, ["timestamp", "rss_mb", "pct"])
            if self._stop.wait(self.interval):
                break
