# APPLICATION/app/telemetry.py

"""
Трассировка команд через OpenTelemetry.

SDK импортируется только при STABFORGE_TRACING=1; без него ``span`` —
пустой контекст, и CLI работает без установленных пакетов opentelemetry.
"""
from __future__ import annotations

import contextlib
import importlib.util
from typing import Any, ContextManager

from app.config import Settings

_tracer = None


def configure_tracing(settings: Settings) -> bool:
    """
    Поднять TracerProvider с OTLP (если задан endpoint) или консольным экспортёром.

    Returns:
        bool: True, если трассировка включена.
    """
    global _tracer
    if not settings.tracing:
        return False
    if importlib.util.find_spec("opentelemetry") is None or importlib.util.find_spec("opentelemetry.sdk") is None:
        print("⚠️  STABFORGE_TRACING=1, но пакеты opentelemetry не установлены — трассировка выключена.")
        return False

    from opentelemetry import trace
    from opentelemetry.sdk.resources import Resource
    from opentelemetry.sdk.trace import TracerProvider
    from opentelemetry.sdk.trace.export import BatchSpanProcessor, ConsoleSpanExporter

    provider = TracerProvider(resource=Resource.create({"service.name": "stabforge"}))
    if settings.otlp_endpoint:
        from opentelemetry.exporter.otlp.proto.grpc.trace_exporter import OTLPSpanExporter

        exporter = OTLPSpanExporter(endpoint=settings.otlp_endpoint, insecure=True)
    else:
        exporter = ConsoleSpanExporter()
    provider.add_span_processor(BatchSpanProcessor(exporter))
    trace.set_tracer_provider(provider)
    _tracer = trace.get_tracer("stabforge")
    return True


def span(name: str, **attributes: Any) -> ContextManager:
    if _tracer is None:
        return contextlib.nullcontext()
    clean = {k: v if isinstance(v, (str, int, float, bool)) else str(v) for k, v in attributes.items()}
    return _tracer.start_as_current_span(name, attributes=clean)


def add_event(current, name: str, **attributes: Any) -> None:
    """Событие в текущем спане (предупреждения результата)."""
    if current is None:
        return
    current.add_event(name, {k: str(v) for k, v in attributes.items()})
