"""
Pytest configuration and shared fixtures.
"""
import json
import os
from dataclasses import replace

import pytest

from contestnet.model import ContestParams, CostSpec, GameSpec, Structure, TechnologySpec


@pytest.fixture
def benchmark_spec():
    """phi(x) = x, c(x) = x**2, r = 0, T = 1."""
    return GameSpec(TechnologySpec(), CostSpec.benchmark(2.0), ContestParams())


@pytest.fixture
def make_spec():
    """Factory for specs around the benchmark."""
    def _make(r=0.0, T=1.0, k1=0.0, k2=1.0, alpha=2.0, kind="linear", scale=1.0, beta=1.0):
        return GameSpec(
            TechnologySpec(kind=kind, scale=scale, exponent=beta),
            CostSpec(k1=k1, k2=k2, alpha=alpha),
            ContestParams(r=r, T=T),
        )
    return _make


@pytest.fixture
def b10v2():
    return Structure.bipartite(10, 2)


@pytest.fixture
def example_structure():
    """Six players: a triangle 0-1-2 attached through 2-3 to a triangle 3-4-5."""
    return Structure.from_edges(6, [(0, 1), (0, 2), (1, 2), (2, 3), (3, 4), (3, 5), (4, 5)])


@pytest.fixture
def write_scenario(tmp_path):
    """Write a scenario dict to a temp JSON file and return its path."""
    def _write(document, name="scenario.json"):
        path = tmp_path / name
        path.write_text(json.dumps(document))
        return str(path)
    return _write


@pytest.fixture
def override_settings(monkeypatch):
    """Replace fields of the frozen settings in every module that imported them."""
    def _override(**changes):
        from contestnet import analytics, cli, config, dynamics, solver, stability, validation

        new_settings = replace(config.settings, **changes)
        for module in (config, solver, stability, analytics, dynamics, validation, cli):
            monkeypatch.setattr(module, "settings", new_settings)
        return new_settings
    return _override


@pytest.fixture(autouse=True)
def reset_env():
    """Reset environment variables before each test."""
    original_env = os.environ.copy()
    yield
    os.environ.clear()
    os.environ.update(original_env)
