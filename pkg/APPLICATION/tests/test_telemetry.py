import pytest

from app import telemetry
from app.commands import EXIT_OK, run
from app.config import Settings
from app.schemas import RunConfig


def test_tracing_off_uses_null_span(monkeypatch):
    monkeypatch.setattr(telemetry, "_tracer", None)
    assert telemetry.configure_tracing(Settings(truncation=20, tracing=False, otlp_endpoint=None)) is False
    with telemetry.span("compute_stab", slope="1/3") as current:
        assert current is None
    telemetry.add_event(current, "warning", message="ignored")


def test_console_tracing_records_command_spans(monkeypatch, tmp_path):
    pytest.importorskip("opentelemetry.sdk")
    monkeypatch.setattr(telemetry, "_tracer", None)
    assert telemetry.configure_tracing(Settings(truncation=20, tracing=True, otlp_endpoint=None)) is True
    with telemetry.span("resonant_locus", n=3, chamber=(1, 2, 3)) as current:
        assert current.is_recording()
        telemetry.add_event(current, "warning", message="non-generic slope")
    assert run(RunConfig(command="resonance", builtin="tstar-pn", n=3, out=tmp_path / "r.json")) == EXIT_OK
