"""
OpenTelemetry tracing for contestnet.

Spans are exported to stderr by the console exporter when tracing is enabled; otherwise the
no-op tracer is handed out.
"""
import sys
from typing import Optional

from opentelemetry import trace
from opentelemetry.sdk.resources import Resource
from opentelemetry.sdk.trace import TracerProvider
from opentelemetry.sdk.trace.export import ConsoleSpanExporter, SimpleSpanProcessor
from opentelemetry.trace import Tracer

_tracer_provider: Optional[TracerProvider] = None
_tracer: Optional[Tracer] = None


def init_tracing(
    service_name: str = "contestnet",
    service_version: str = "0.1.0",
    environment: str = "development",
):
    """
    Initialize tracing with a console exporter.

    Args:
        service_name: Name reported on every span
        service_version: Package version
        environment: Deployment environment tag
    """
    global _tracer_provider, _tracer

    if _tracer_provider is not None:
        return

    resource = Resource.create({
        "service.name": service_name,
        "service.version": service_version,
        "deployment.environment": environment,
    })
    _tracer_provider = TracerProvider(resource=resource)
    _tracer_provider.add_span_processor(
        SimpleSpanProcessor(ConsoleSpanExporter(out=sys.stderr))
    )
    _tracer = _tracer_provider.get_tracer(service_name)


def get_tracer() -> Tracer:
    """Get the package tracer (no-op until init_tracing ran)."""
    if _tracer is None:
        return trace.NoOpTracer()
    return _tracer


def shutdown():
    """Flush and drop the tracer provider."""
    global _tracer_provider, _tracer
    if _tracer_provider:
        _tracer_provider.shutdown()
        _tracer_provider = None
        _tracer = None
