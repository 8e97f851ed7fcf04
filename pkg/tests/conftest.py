"""Pytest configuration and fixtures."""

import sys
from pathlib import Path

import numpy as np
import pytest
import structlog

PROJECT_ROOT = Path(__file__).resolve().parents[1]
SRC_PATH = PROJECT_ROOT / "src"
if str(SRC_PATH) not in sys.path:
    sys.path.insert(0, str(SRC_PATH))

from ghz_robustness.config import OptimizerConfig, reset_settings  # noqa: E402


@pytest.fixture(autouse=True)
def _isolated_settings(monkeypatch: pytest.MonkeyPatch):
    """Start every test from default ambient settings."""
    for name in ("GHZ_LOG_LEVEL", "GHZ_LOG_FORMAT", "GHZ_METRICS_TEXTFILE", "OTEL_ENABLED"):
        monkeypatch.delenv(name, raising=False)
    reset_settings()
    yield
    reset_settings()
    # main() binds log output to the stream captured for that test
    structlog.reset_defaults()


@pytest.fixture
def fast_config() -> OptimizerConfig:
    """Reduced multistart budget that still finds the global optimum for n <= 5."""
    return OptimizerConfig(starts=16, max_sweeps=500, polish_max_evals=2000)


@pytest.fixture
def rng() -> np.random.Generator:
    """Deterministic generator for random settings tables."""
    return np.random.default_rng(20070119)
