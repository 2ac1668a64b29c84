"""Configuration and environment utilities.

Single source of truth for env-var settings and run-directory paths. The
INI training config lives in trajnet.settings; this module only covers the
process-level knobs that apply to every command.
"""

import os
from datetime import datetime, timezone
from pathlib import Path

_TRUE = {"1", "true", "yes", "on"}
_FALSE = {"0", "false", "no", "off", ""}

_THREAD_VARS = ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS",
                "VECLIB_MAXIMUM_THREADS", "NUMEXPR_NUM_THREADS")


# =============================================================================
# Environment Detection
# =============================================================================

def _env_flag(name: str, default: bool) -> bool:
    raw = os.environ.get(name)
    if raw is None:
        return default
    value = raw.strip().lower()
    if value in _TRUE:
        return True
    if value in _FALSE:
        return False
    raise ValueError(f"{name} must be a boolean flag, got {raw!r}")


def is_logging_enabled() -> bool:
    """CSV event logs in the run directory (see debug.py)."""
    return _env_flag("ENABLE_LOGGING", False)


def is_single_threaded() -> bool:
    """Determinism mode: BLAS and OpenMP pinned to one thread."""
    return _env_flag("TRAJNET_SINGLE_THREADED", True)


def get_workers() -> int:
    """Worker processes for data generation (default 1)."""
    raw = os.environ.get("TRAJNET_WORKERS", "1")
    try:
        workers = int(raw)
    except ValueError:
        raise ValueError(f"TRAJNET_WORKERS must be an integer, got {raw!r}") from None
    if workers < 1:
        raise ValueError(f"TRAJNET_WORKERS must be >= 1, got {workers}")
    return workers


def get_sweep_on_failure() -> str:
    """What the sweep does after a failed variant: "continue" (default) or "crash"."""
    mode = os.environ.get("SWEEP_ON_FAILURE", "continue").strip().lower()
    if mode not in ("continue", "crash"):
        raise ValueError(f"SWEEP_ON_FAILURE must be 'continue' or 'crash', got {mode!r}")
    return mode


def pin_threads() -> None:
    """Pin native thread pools to one thread. Must run before numpy is imported."""
    for var in _THREAD_VARS:
        os.environ.setdefault(var, "1")


# =============================================================================
# Directory Configuration
# =============================================================================

def get_runs_dir() -> Path:
    """Root for run directories. Override with TRAJNET_RUNS_DIR."""
    return Path(os.environ.get("TRAJNET_RUNS_DIR", "runs"))


def get_run_id(seed: int) -> str:
    """Run directory name: RUN_ID if set, else `<UTC timestamp>-s<seed>`."""
    run_id = os.environ.get("RUN_ID")
    if run_id:
        return run_id
    stamp = datetime.now(timezone.utc).strftime("%Y%m%d-%H%M%S")
    return f"{stamp}-s{seed}"


def run_dir(seed: int, create: bool = True) -> Path:
    """Directory holding every artifact of one command invocation."""
    path = get_runs_dir() / get_run_id(seed)
    if create:
        path.mkdir(parents=True, exist_ok=True)
    os.environ["LOG_DIR"] = str(path)
    return path


# =============================================================================
# Environment Validation
# =============================================================================

def validate_environment() -> None:
    """Parse every env knob once so a malformed value fails before any work."""
    problems = []
    for check in (is_logging_enabled, is_single_threaded, get_workers, get_sweep_on_failure):
        try:
            check()
        except ValueError as e:
            problems.append(str(e))
    if problems:
        raise ValueError("Invalid environment: " + "; ".join(problems))
