"""Tests for tracing utilities."""

from ghz_robustness.config import TracingSettings
from ghz_robustness.tracing import setup_tracing, shutdown_tracing


def test_setup_tracing_disabled():
    """Tracing should be disabled when setting is false."""
    assert setup_tracing(TracingSettings(enabled=False)) is False


def test_setup_tracing_exporter_disabled(monkeypatch):
    """Tracing should be disabled when exporter env var is none."""
    monkeypatch.setenv("OTEL_TRACES_EXPORTER", "none")

    settings = TracingSettings(enabled=True, service_name="ghz")
    assert setup_tracing(settings) is False


def test_default_service_name():
    """Spans are attributed to ghz-robustness by default."""
    assert TracingSettings().service_name == "ghz-robustness"


def test_shutdown_without_provider_is_noop():
    """Shutdown is safe when no SDK provider was installed."""
    shutdown_tracing()
