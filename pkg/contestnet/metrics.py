"""
Prometheus counters for solver and stability work.

The registry is private to the package and only ever written to a text file.
"""
import time
from contextlib import contextmanager

from prometheus_client import CollectorRegistry, Counter, Histogram, write_to_textfile

REGISTRY = CollectorRegistry()

SOLVES = Counter(
    "contestnet_solves_total",
    "Equilibrium solves by method and outcome",
    ["method", "status"],
    registry=REGISTRY,
)
SOLVE_SECONDS = Histogram(
    "contestnet_solve_seconds",
    "Wall time per equilibrium solve",
    ["method"],
    registry=REGISTRY,
    buckets=(0.001, 0.005, 0.01, 0.05, 0.1, 0.5, 1.0, 5.0, 30.0),
)
DEVIATIONS = Counter(
    "contestnet_deviation_evaluations_total",
    "Deviation payoffs evaluated by stability concept",
    ["concept"],
    registry=REGISTRY,
)
SWEEP_POINTS = Counter(
    "contestnet_sweep_points_total",
    "Sweep grid points by kind and outcome",
    ["kind", "status"],
    registry=REGISTRY,
)


@contextmanager
def timed_solve(method: str):
    """Count a solve and observe its duration; failures are counted with status=error."""
    start = time.perf_counter()
    try:
        yield
    except Exception:
        SOLVES.labels(method=method, status="error").inc()
        raise
    else:
        SOLVES.labels(method=method, status="ok").inc()
    finally:
        SOLVE_SECONDS.labels(method=method).observe(time.perf_counter() - start)


def write_metrics(path: str):
    """Write the registry in the Prometheus text exposition format."""
    write_to_textfile(path, REGISTRY)
