"""
netresilience

Attack simulation and resilience measurement for complex networks:
ingest or generate a graph, remove nodes or edges by one of six
strategies, and track the largest connected component as it breaks up.
"""

try:
    from ._version import version as __version__
except ImportError:
    try:
        from importlib.metadata import version

        __version__ = version("netresilience")
    except Exception:
        __version__ = "unknown"

from .core.attacks import AttackKind, AttackPlan, build_plan, execute
from .core.config import ExperimentConfig, load_config
from .core.errors import ResilienceError
from .core.generators import GeneratorSpec, Model, generate
from .core.graph import EdgeKey, Graph
from .core.harness import AggregateSeries, ExperimentRunner, run
from .core.ingest import read_graph
from .core.metrics import NetworkStats, ResilienceSeries, stats

__all__ = [
    "AggregateSeries",
    "AttackKind",
    "AttackPlan",
    "EdgeKey",
    "ExperimentConfig",
    "ExperimentRunner",
    "GeneratorSpec",
    "Graph",
    "Model",
    "NetworkStats",
    "ResilienceError",
    "ResilienceSeries",
    "build_plan",
    "execute",
    "generate",
    "load_config",
    "read_graph",
    "run",
    "stats",
]
