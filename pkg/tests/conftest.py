"""Pytest configuration and shared fixtures for the test suite."""

import sys
from pathlib import Path

import numpy as np
import pytest

# Add parent directory to Python path so tests can import modules
parent_dir = Path(__file__).parent.parent
sys.path.insert(0, str(parent_dir))

from utils.config import get_settings  # noqa: E402
from utils.topology.filtration import Filtration  # noqa: E402

SLOW_MODULES = {"test_optimizer"}


@pytest.fixture(scope="session")
def project_root():
    """Fixture providing the project root directory."""
    return parent_dir


@pytest.fixture(scope="session")
def samples_dir(project_root):
    """Fixture providing the bundled sample files."""
    return project_root / "cutlery" / "samples"


@pytest.fixture(autouse=True)
def clean_settings(monkeypatch):
    """Keep TOPOFLUX_* settings from the developer's environment out of the tests."""
    for name in ("TOPOFLUX_THREADS", "TOPOFLUX_MAX_SIMPLICES", "TOPOFLUX_LOG_LEVEL"):
        monkeypatch.delenv(name, raising=False)
    get_settings.cache_clear()
    yield
    get_settings.cache_clear()


@pytest.fixture
def unit_square():
    """The corners of the unit square, counter-clockwise from the origin."""
    return np.array([[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]])


@pytest.fixture
def bowtie_simplices():
    """Six vertices, nine edges and three triangles in dimension-then-lexicographic order.

    The triangles fill three of the four 3-cycles, leaving one loop and one component.
    """
    vertices = [(v,) for v in range(6)]
    edges = [(0, 1), (0, 2), (1, 2), (1, 3), (1, 4), (2, 4), (2, 5), (3, 4), (4, 5)]
    triangles = [(0, 1, 2), (1, 3, 4), (2, 4, 5)]
    return vertices + edges + triangles


@pytest.fixture
def bowtie_filtration(bowtie_simplices):
    """Combinatorial filtration of the bowtie complex with values equal to positions."""
    return Filtration.from_order(bowtie_simplices)


@pytest.fixture
def noisy_circle():
    """Sixty points near the unit circle."""
    rng = np.random.default_rng(7)
    angles = np.sort(rng.uniform(0, 2 * np.pi, size=60))
    return np.column_stack([np.cos(angles), np.sin(angles)]) + rng.normal(scale=0.03, size=(60, 2))


@pytest.fixture
def rng():
    """Fixture providing a seeded random generator."""
    return np.random.default_rng(0)


def pytest_configure(config):
    """Configure pytest with custom markers."""
    config.addinivalue_line("markers", "slow: marks tests as slow (deselect with '-m \"not slow\"')")
    config.addinivalue_line("markers", "integration: marks tests that go through the command line")
    config.addinivalue_line("markers", "unit: marks tests as unit tests")


def pytest_collection_modifyitems(config, items):
    """Modify test collection to add markers automatically."""
    for item in items:
        # Command-line tests are integration tests, everything else is a unit test
        if item.module.__name__.endswith("test_cli"):
            item.add_marker(pytest.mark.integration)
        else:
            item.add_marker(pytest.mark.unit)

        # Optimization runs take seconds each
        if item.module.__name__.split(".")[-1] in SLOW_MODULES or "optimiz" in item.name.lower():
            item.add_marker(pytest.mark.slow)
