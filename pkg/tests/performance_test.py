"""
Performance tests for contestnet
Run with: pytest tests/performance_test.py -v -m slow
"""

import time

import pytest

from contestnet.model import CostSpec, ContestParams, GameSpec, Structure, TechnologySpec
from contestnet.scenario import Scenario
from contestnet.solver import solve_equilibrium
from contestnet.analytics import sweep

pytestmark = pytest.mark.slow


@pytest.fixture
def spec():
    return GameSpec(TechnologySpec(), CostSpec.benchmark(2.0), ContestParams())


def test_reduced_solve_performance(spec):
    """Class-pair solves stay fast on large complete multipartite structures"""
    g = Structure.complete_multipartite((40, 20, 10))
    iterations = 20
    latencies = []

    for _ in range(iterations):
        start = time.time()
        eq = solve_equilibrium(g, spec)
        latencies.append((time.time() - start) * 1000)
        assert eq.reduced

    avg_latency = sum(latencies) / len(latencies)
    p95_latency = sorted(latencies)[int(len(latencies) * 0.95)]

    print(f"\nReduced Solve Performance:")
    print(f"  Average Latency: {avg_latency:.2f}ms")
    print(f"  P95 Latency: {p95_latency:.2f}ms")

    assert avg_latency < 500


def test_full_solve_performance(spec):
    """Full solve on a mid-sized irregular structure"""
    edges = [(i, j) for i in range(30) for j in range(i + 1, 30) if (i * 7 + j * 3) % 5 != 0]
    g = Structure.from_edges(30, edges)

    start = time.time()
    eq = solve_equilibrium(g, spec.with_params(r=0.1))
    duration = time.time() - start

    print(f"\nFull Solve: {len(edges)} links in {duration:.2f}s ({eq.iterations} iterations)")

    assert eq.residual <= 1e-10
    assert duration < 30


def test_threaded_sweep(spec):
    """Threaded sweeps finish no slower than a generous multiple of serial ones"""
    scenario = Scenario(partition_sizes=[30, 10])
    grid = [0.01 * k for k in range(1, 21)]

    start = time.time()
    serial = sweep("r", grid, scenario, threads=1)
    serial_duration = time.time() - start

    start = time.time()
    threaded = sweep("r", grid, scenario, threads=4)
    threaded_duration = time.time() - start

    print(f"\nSweep of {len(grid)} points:")
    print(f"  Serial: {serial_duration:.2f}s")
    print(f"  Threaded: {threaded_duration:.2f}s")

    assert serial.model_dump() == threaded.model_dump()
    assert threaded_duration < serial_duration * 2 + 1
