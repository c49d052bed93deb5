"""
Shared fixtures and marker registration for the netresilience test suite.
"""

import logging
import sys
from pathlib import Path

import numpy as np
import pytest

# Add parent directory to path
sys.path.insert(0, str(Path(__file__).parent.parent.parent))

from netresilience.core.graph import Graph

# Measured datasets are not shipped; tests that need them look here
DATA_DIR = Path(__file__).parent.parent.parent / "data"


def pytest_configure(config):
    """Configure pytest markers."""
    config.addinivalue_line("markers", "graph: Graph core tests")
    config.addinivalue_line("markers", "ingest: Parsing and simplification tests")
    config.addinivalue_line("markers", "generators: Synthetic network tests")
    config.addinivalue_line("markers", "attacks: Attack plan and execution tests")
    config.addinivalue_line("markers", "metrics: Statistics and quantifier tests")
    config.addinivalue_line("markers", "harness: Experiment sweep tests")
    config.addinivalue_line("markers", "cli: Command-line tests")
    config.addinivalue_line("markers", "slow: Dataset-scale tests")


@pytest.fixture(autouse=True)
def _reenable_logging():
    """`--quiet` disables logging process-wide; undo it between tests."""
    yield
    logging.disable(logging.NOTSET)


@pytest.fixture
def path4():
    """Path 0-1-2-3."""
    return Graph.from_edges(4, [(0, 1), (1, 2), (2, 3)])


@pytest.fixture
def triangle():
    return Graph.from_edges(3, [(0, 1), (1, 2), (0, 2)])


@pytest.fixture
def k4():
    return Graph.from_edges(4, [(u, v) for u in range(4) for v in range(u + 1, 4)])


@pytest.fixture
def c4():
    return Graph.from_edges(4, [(0, 1), (1, 2), (2, 3), (3, 0)])


@pytest.fixture
def star():
    """K1,9: hub 0 with nine leaves."""
    return Graph.from_edges(10, [(0, leaf) for leaf in range(1, 10)])


@pytest.fixture
def linked_stars():
    """Two 4-leaf stars (hubs 0 and 5) joined hub to hub."""
    edges = [(0, leaf) for leaf in range(1, 5)]
    edges += [(5, leaf) for leaf in range(6, 10)]
    edges.append((0, 5))
    return Graph.from_edges(10, edges)


@pytest.fixture
def make_random_graph():
    """Factory for G(n, p) graphs drawn from a seeded numpy Generator."""

    def build(rng: np.random.Generator, n: int, p: float) -> Graph:
        graph = Graph(n)
        for u in range(n):
            for v in range(u + 1, n):
                if rng.random() < p:
                    graph.add_edge(u, v)
        return graph

    return build


@pytest.fixture
def write_file(tmp_path):
    """Write text to a file under tmp_path and return its path."""

    def write(name: str, text: str) -> Path:
        path = tmp_path / name
        path.write_text(text, encoding="utf-8")
        return path

    return write
