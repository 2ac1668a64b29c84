import numpy as np
import pytest

from trajnet.architectures import SharedCompareConfig, StackedConfig, conv_blocks, shared_layers


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def small_shared_cfg():
    """Shared-compare net small enough for exhaustive gradient checks."""
    return SharedCompareConfig(
        np=3, t=8,
        shared=shared_layers((3,), (4,)),
        compare=conv_blocks((3, 2), (4, 6)),
        num_classes=4,
    )


@pytest.fixture
def small_stacked_cfg():
    return StackedConfig(np=2, t=12, filter_sizes=(3, 3), filters=(4, 6), num_classes=3, variant="tiny")


@pytest.fixture
def run_env(tmp_path, monkeypatch):
    """Isolated runs directory and a fixed run id."""
    monkeypatch.setenv("TRAJNET_RUNS_DIR", str(tmp_path / "runs"))
    monkeypatch.setenv("RUN_ID", "test-run")
    monkeypatch.delenv("ENABLE_LOGGING", raising=False)
    return tmp_path
