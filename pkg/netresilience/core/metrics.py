"""
Resilience quantifiers and network statistics.

Traversal-heavy quantities (all-pairs BFS, triangle counts) are computed on
a scipy sparse adjacency matrix built from the Graph.
"""

from dataclasses import asdict, dataclass, field
from typing import TYPE_CHECKING, Dict, Iterable, List, Optional, Set, Tuple
import logging
import math

import numpy as np
from scipy.sparse.csgraph import shortest_path

from .defaults import load_defaults
from .errors import GraphError
from .graph import Graph

if TYPE_CHECKING:
    from .attacks import AttackKind

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class NetworkStats:
    """Size, degree, clustering and distance statistics of one graph."""

    n: int
    m: int
    edge_node_ratio: float
    max_degree: int
    clustering_coefficient: float
    apl: Optional[float]
    degree_histogram: Dict[int, int] = field(default_factory=dict)

    def as_record(self) -> Dict[str, object]:
        """Flat key/value record; the histogram is left out."""
        record = asdict(self)
        del record["degree_histogram"]
        return {"nodes": record.pop("n"), "edges": record.pop("m"), **record}


@dataclass(frozen=True)
class SeriesPoint:
    """Measurements taken at one checkpoint of an attack."""

    fraction_removed: float
    lcc_fraction: float
    apl: Optional[float] = None
    edge_fraction: Optional[float] = None


@dataclass
class ResilienceSeries:
    """Checkpointed measurements of a single attack run."""

    kind: "AttackKind"
    points: List[SeriesPoint] = field(default_factory=list)
    fallback_onset: Optional[float] = None

    def validate(self) -> None:
        """Raise ValueError unless fractions increase and LCC never grows."""
        for before, after in zip(self.points, self.points[1:]):
            if after.fraction_removed <= before.fraction_removed:
                raise ValueError("checkpoint fractions must strictly increase")
            if after.lcc_fraction > before.lcc_fraction:
                raise ValueError("LCC fraction increased between checkpoints")

    @property
    def fractions(self) -> List[float]:
        return [point.fraction_removed for point in self.points]

    @property
    def lcc_fractions(self) -> List[float]:
        return [point.lcc_fraction for point in self.points]


def lcc_fraction(graph: Graph, n0: int) -> float:
    """Size of the largest component relative to the original node count."""
    if n0 < 1:
        raise GraphError("original node count must be at least 1")
    if graph.n_active == 0:
        return 0.0
    return len(graph.largest_component()) / n0


def _distance_rows(graph: Graph, component: Iterable[int]):
    """Yield blocks of BFS distance rows over the component's subgraph."""
    matrix, index = graph.to_csr(component)
    size = len(index)
    if size < 2:
        raise GraphError(f"component has {size} node(s); at least 2 are needed")
    chunk = int(load_defaults()["metrics"]["apl_chunk_size"])
    for start in range(0, size, chunk):
        sources = np.arange(start, min(start + chunk, size))
        yield sources, shortest_path(
            matrix, method="D", directed=False, unweighted=True, indices=sources
        )


def average_path_length(graph: Graph, component: Iterable[int]) -> float:
    """
    Mean shortest-path length over all unordered pairs of a component.

    Args:
        graph: Graph containing the component
        component: Node ids forming a connected set of at least 2 nodes
    """
    component = list(component)
    total = 0
    for _, distances in _distance_rows(graph, component):
        if not np.all(np.isfinite(distances)):
            raise GraphError("component is not connected")
        total += int(distances.sum())
    size = len(component)
    # total counts every ordered pair once; pairs are unordered
    return (total // 2) / (size * (size - 1) // 2)


def sampled_average_path_length(
    graph: Graph, component: Iterable[int], sources: int, seed: int = 0
) -> Tuple[float, float]:
    """
    Estimate APL from BFS runs rooted at ``sources`` random nodes.

    Returns:
        (estimate, standard error). The error is 0 when every node is a
        source, because the estimate is then exact.
    """
    component = sorted(set(component))
    size = len(component)
    if size < 2:
        raise GraphError(f"component has {size} node(s); at least 2 are needed")
    if sources >= size:
        return average_path_length(graph, component), 0.0
    if sources < 2:
        raise GraphError("sampled APL needs at least 2 sources")

    rng = np.random.default_rng(seed)
    picked = np.sort(rng.choice(size, size=sources, replace=False))
    matrix, _ = graph.to_csr(component)
    distances = shortest_path(
        matrix, method="D", directed=False, unweighted=True, indices=picked
    )
    if not np.all(np.isfinite(distances)):
        raise GraphError("component is not connected")
    per_source = distances.sum(axis=1) / (size - 1)
    estimate = float(per_source.mean())
    error = float(per_source.std(ddof=1) / math.sqrt(sources))
    return estimate, error


def _triangle_counts(graph: Graph) -> Tuple[np.ndarray, np.ndarray]:
    """Per active node: (2 * triangles through it, degree)."""
    matrix, _ = graph.to_csr()
    if matrix.shape[0] == 0:
        return np.zeros(0), np.zeros(0)
    closed = np.asarray((matrix @ matrix).multiply(matrix).sum(axis=1)).ravel()
    degrees = np.asarray(matrix.sum(axis=1)).ravel()
    return closed.astype(np.float64), degrees.astype(np.float64)


def clustering_coefficient(graph: Graph, exclude_low_degree: bool = False) -> float:
    """
    Average local clustering coefficient.

    Args:
        graph: Graph to measure
        exclude_low_degree: Leave degree-0/1 nodes out of the average
            instead of counting them as 0
    """
    closed, degrees = _triangle_counts(graph)
    if closed.size == 0:
        return 0.0
    possible = degrees * (degrees - 1)
    eligible = possible > 0
    local = np.zeros_like(closed)
    local[eligible] = closed[eligible] / possible[eligible]
    if exclude_low_degree:
        if not eligible.any():
            return 0.0
        return float(local[eligible].mean())
    return float(local.mean())


def transitivity(graph: Graph) -> float:
    """Global clustering: closed triads over connected triads."""
    closed, degrees = _triangle_counts(graph)
    triads = float((degrees * (degrees - 1)).sum())
    if triads == 0:
        return 0.0
    return float(closed.sum()) / triads


def degree_histogram(graph: Graph) -> Dict[int, int]:
    """Map degree → number of active nodes with that degree."""
    degrees = np.fromiter(graph.degrees().values(), dtype=np.int64)
    if degrees.size == 0:
        return {}
    counts = np.bincount(degrees)
    return {int(k): int(c) for k, c in enumerate(counts) if c}


def stats(graph: Graph) -> NetworkStats:
    """Collect NetworkStats; apl is None unless the graph is connected."""
    n, m = graph.n_active, graph.m_active
    histogram = degree_histogram(graph)
    apl = None
    if n >= 2:
        components = graph.connected_components()
        if len(components) == 1:
            apl = average_path_length(graph, components[0])
    return NetworkStats(
        n=n,
        m=m,
        edge_node_ratio=m / n if n else 0.0,
        max_degree=max(histogram) if histogram else 0,
        clustering_coefficient=clustering_coefficient(graph),
        apl=apl,
        degree_histogram=histogram,
    )


def component_apl(
    graph: Graph,
    component: Set[int],
    sources: Optional[int] = None,
    seed: int = 0,
) -> Optional[float]:
    """APL of a component, or None when it has fewer than 2 nodes."""
    if len(component) < 2:
        return None
    if sources is None:
        return average_path_length(graph, component)
    estimate, _ = sampled_average_path_length(graph, component, sources, seed)
    return estimate
