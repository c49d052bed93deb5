"""
Attack strategies as deterministic, seeded removal plans.

A plan is built up front against a private copy of the graph and is a
permutation of the graph's nodes (node attacks) or edges (edge attacks).
``execute`` replays a plan on another private copy and measures the
largest component at each checkpoint.
"""

import heapq
from dataclasses import dataclass, field
from enum import Enum
from typing import (
    Dict,
    Generic,
    Hashable,
    Iterable,
    List,
    Optional,
    Sequence,
    TextIO,
    TypeVar,
    Union,
)
import logging

import numpy as np

from .defaults import round_half_up
from .errors import AttackError, GraphError
from .graph import EdgeKey, Graph
from .metrics import ResilienceSeries, SeriesPoint, component_apl

logger = logging.getLogger(__name__)

PlanItem = Union[int, EdgeKey]
T = TypeVar("T", bound=Hashable)


class AttackKind(str, Enum):
    TARGETED_NODES = "targeted-nodes"
    RANDOM_NODES = "random-nodes"
    ALMOST_RANDOM_NODES = "almost-random-nodes"
    TARGETED_EDGES = "targeted-edges"
    RANDOM_EDGES = "random-edges"
    ALMOST_RANDOM_EDGES = "almost-random-edges"

    @property
    def on_nodes(self) -> bool:
        return self.value.endswith("-nodes")


class Eligibility(str, Enum):
    """Which degrees the almost-random strategies test against."""

    CURRENT = "current"
    INITIAL = "initial"


@dataclass
class AttackPlan:
    """Ordered removal schedule for one attack."""

    kind: AttackKind
    sequence: List[PlanItem] = field(default_factory=list)
    seed: int = 0
    recompute: bool = False
    # Index of the first step picked by the fallback rule, if any
    fallback_onset: Optional[int] = None

    def __len__(self) -> int:
        return len(self.sequence)


class _IndexedSet(Generic[T]):
    """Set with O(1) removal and uniform random pick."""

    def __init__(self, items: Iterable[T] = ()):
        self._items: List[T] = []
        self._pos: Dict[T, int] = {}
        for item in items:
            self.add(item)

    def __len__(self) -> int:
        return len(self._items)

    def __contains__(self, item: T) -> bool:
        return item in self._pos

    def add(self, item: T) -> None:
        if item not in self._pos:
            self._pos[item] = len(self._items)
            self._items.append(item)

    def discard(self, item: T) -> None:
        index = self._pos.pop(item, None)
        if index is None:
            return
        last = self._items.pop()
        if index < len(self._items):
            self._items[index] = last
            self._pos[last] = index

    def pick(self, rng: np.random.Generator) -> T:
        return self._items[int(rng.integers(len(self._items)))]


def _tie_ranks(items: Sequence[T], seed: int, shuffle_ties: bool) -> Dict[T, int]:
    """Tie-break rank per item: natural order, or a seeded shuffle."""
    if not shuffle_ties:
        return {item: rank for rank, item in enumerate(items)}
    order = np.random.default_rng(seed).permutation(len(items))
    return {items[int(i)]: rank for rank, i in enumerate(order)}


def plan_targeted_nodes(
    graph: Graph, recompute: bool = False, seed: int = 0, shuffle_ties: bool = False
) -> AttackPlan:
    """
    Highest degree first.

    Static plans sort on initial degrees. With ``recompute`` the node of
    highest current degree is taken after every removal. Ties go to the
    lower node id unless ``shuffle_ties`` asks for a seeded order.
    """
    nodes = graph.nodes()
    rank = _tie_ranks(nodes, seed, shuffle_ties)
    plan = AttackPlan(AttackKind.TARGETED_NODES, seed=seed, recompute=recompute)
    if not recompute:
        plan.sequence = sorted(nodes, key=lambda u: (-graph.degree(u), rank[u]))
        return plan

    work = graph.copy()
    heap = [(-work.degree(u), rank[u], u) for u in nodes]
    heapq.heapify(heap)
    while heap:
        negative_degree, _, u = heapq.heappop(heap)
        if not work.is_active(u) or -negative_degree != work.degree(u):
            continue  # stale entry
        neighbors = work.neighbors(u)
        work.remove_node(u)
        plan.sequence.append(u)
        for w in neighbors:
            heapq.heappush(heap, (-work.degree(w), rank[w], w))
    return plan


def plan_targeted_edges(
    graph: Graph, seed: int = 0, shuffle_ties: bool = False
) -> AttackPlan:
    """
    Edges by decreasing W = deg(u) + deg(v), computed on initial degrees.

    Ties go to the lexicographically smaller (u, v).
    """
    edges = graph.edges()
    rank = _tie_ranks(edges, seed, shuffle_ties)
    plan = AttackPlan(AttackKind.TARGETED_EDGES, seed=seed)
    plan.sequence = sorted(edges, key=lambda e: (-edge_weight(graph, e), rank[e]))
    return plan


def edge_weight(graph: Graph, edge: EdgeKey) -> int:
    """Degree-sum weight of an edge on the current graph."""
    return graph.degree(edge.u) + graph.degree(edge.v)


def plan_random_nodes(graph: Graph, seed: int = 0) -> AttackPlan:
    """Uniform random permutation of the nodes."""
    nodes = graph.nodes()
    order = np.random.default_rng(seed).permutation(len(nodes))
    return AttackPlan(
        AttackKind.RANDOM_NODES, [nodes[int(i)] for i in order], seed=seed
    )


def plan_random_edges(graph: Graph, seed: int = 0) -> AttackPlan:
    """Uniform random permutation of the edges."""
    edges = graph.edges()
    order = np.random.default_rng(seed).permutation(len(edges))
    return AttackPlan(
        AttackKind.RANDOM_EDGES, [edges[int(i)] for i in order], seed=seed
    )


def plan_almost_random_nodes(
    graph: Graph, seed: int = 0, eligibility: Eligibility = Eligibility.CURRENT
) -> AttackPlan:
    """
    Random picks among nodes of degree >= 2.

    Once no node qualifies, the remaining nodes are taken uniformly at
    random and the first such step is recorded as the fallback onset.
    """
    rng = np.random.default_rng(seed)
    work = graph.copy()
    remaining = _IndexedSet(work.nodes())
    eligible = _IndexedSet(u for u in work.nodes() if work.degree(u) >= 2)
    plan = AttackPlan(AttackKind.ALMOST_RANDOM_NODES, seed=seed)

    while remaining:
        if eligible:
            u = eligible.pick(rng)
        else:
            if plan.fallback_onset is None:
                plan.fallback_onset = len(plan.sequence)
            u = remaining.pick(rng)
        neighbors = work.neighbors(u)
        work.remove_node(u)
        remaining.discard(u)
        eligible.discard(u)
        if eligibility is Eligibility.CURRENT:
            for w in neighbors:
                if work.degree(w) < 2:
                    eligible.discard(w)
        plan.sequence.append(u)
    return plan


def plan_almost_random_edges(
    graph: Graph, seed: int = 0, eligibility: Eligibility = Eligibility.CURRENT
) -> AttackPlan:
    """
    Random picks among edges whose endpoints both have degree >= 2.

    Falls back to uniform picks among the remaining edges once none
    qualifies, recording the onset like the node variant.
    """
    rng = np.random.default_rng(seed)
    work = graph.copy()
    edges = work.edges()
    remaining = _IndexedSet(edges)
    eligible = _IndexedSet(
        e for e in edges if work.degree(e.u) >= 2 and work.degree(e.v) >= 2
    )
    plan = AttackPlan(AttackKind.ALMOST_RANDOM_EDGES, seed=seed)

    while remaining:
        if eligible:
            edge = eligible.pick(rng)
        else:
            if plan.fallback_onset is None:
                plan.fallback_onset = len(plan.sequence)
            edge = remaining.pick(rng)
        work.remove_edge(edge)
        remaining.discard(edge)
        eligible.discard(edge)
        if eligibility is Eligibility.CURRENT:
            for x in edge:
                if work.degree(x) == 1:
                    for w in work.neighbors(x):
                        eligible.discard(EdgeKey.of(x, w))
        plan.sequence.append(edge)
    return plan


def build_plan(
    graph: Graph,
    kind: AttackKind,
    seed: int = 0,
    recompute: bool = False,
    eligibility: Eligibility = Eligibility.CURRENT,
    shuffle_ties: bool = False,
) -> AttackPlan:
    """Build the plan for any AttackKind."""
    kind = AttackKind(kind)
    eligibility = Eligibility(eligibility)
    if kind is AttackKind.TARGETED_NODES:
        plan = plan_targeted_nodes(graph, recompute, seed, shuffle_ties)
    elif kind is AttackKind.TARGETED_EDGES:
        plan = plan_targeted_edges(graph, seed, shuffle_ties)
    elif kind is AttackKind.RANDOM_NODES:
        plan = plan_random_nodes(graph, seed)
    elif kind is AttackKind.RANDOM_EDGES:
        plan = plan_random_edges(graph, seed)
    elif kind is AttackKind.ALMOST_RANDOM_NODES:
        plan = plan_almost_random_nodes(graph, seed, eligibility)
    else:
        plan = plan_almost_random_edges(graph, seed, eligibility)
    logger.debug(
        "Built %s plan of %d steps (seed=%d, fallback onset=%s)",
        kind.value,
        len(plan),
        seed,
        plan.fallback_onset,
    )
    return plan


def validate_checkpoints(checkpoints: Sequence[float]) -> List[float]:
    """Checkpoints must lie in [0, 1] and strictly increase."""
    values = [float(f) for f in checkpoints]
    if not values:
        raise AttackError("at least one checkpoint is required")
    for f in values:
        if not 0.0 <= f <= 1.0:
            raise AttackError(f"checkpoint {f} is outside [0, 1]")
    for before, after in zip(values, values[1:]):
        if after <= before:
            raise AttackError("checkpoints must be sorted and strictly increasing")
    return values


def execute(
    graph: Graph,
    plan: AttackPlan,
    checkpoints: Sequence[float],
    apl: bool = True,
    apl_sources: Optional[int] = None,
) -> ResilienceSeries:
    """
    Replay ``plan`` on a private copy of ``graph``, measuring at checkpoints.

    At fraction f, round(f * N) plan elements have been removed, N being the
    original node or edge count. The LCC fraction is relative to the
    original node count.

    Args:
        graph: Graph the plan was built for; left untouched
        plan: Removal plan
        checkpoints: Fractions in [0, 1], strictly increasing
        apl: Record the LCC's average path length at each checkpoint
        apl_sources: Estimate APL from this many BFS sources instead of all
    """
    fractions = validate_checkpoints(checkpoints)
    on_nodes = AttackKind(plan.kind).on_nodes
    n0, m0 = graph.n_active, graph.m_active
    total = n0 if on_nodes else m0
    if len(plan.sequence) != total:
        raise AttackError(
            f"plan has {len(plan.sequence)} elements but the graph has {total} "
            f"{'nodes' if on_nodes else 'edges'}"
        )
    if n0 == 0:
        raise AttackError("cannot attack an empty graph")

    work = graph.copy()
    series = ResilienceSeries(kind=plan.kind)
    if plan.fallback_onset is not None and total:
        series.fallback_onset = plan.fallback_onset / total
    removed = 0
    for fraction in fractions:
        target = min(round_half_up(fraction * total), total)
        while removed < target:
            item = plan.sequence[removed]
            try:
                if on_nodes:
                    if isinstance(item, tuple):
                        raise GraphError(f"edge {item} in a node plan")
                    work.remove_node(item)
                else:
                    if not isinstance(item, tuple):
                        raise GraphError(f"node {item} in an edge plan")
                    work.remove_edge(item)
            except GraphError as e:
                raise AttackError(
                    f"plan step {removed} does not fit the graph: {e}"
                ) from e
            removed += 1
        series.points.append(_measure(work, fraction, n0, m0, apl, apl_sources))
    return series


def _measure(
    work: Graph,
    fraction: float,
    n0: int,
    m0: int,
    apl: bool,
    apl_sources: Optional[int],
) -> SeriesPoint:
    if work.n_active == 0:
        return SeriesPoint(fraction, 0.0, None, 0.0 if m0 else None)
    component = work.largest_component()
    path_length = component_apl(work, component, apl_sources) if apl else None
    point = SeriesPoint(
        fraction_removed=fraction,
        lcc_fraction=len(component) / n0,
        apl=path_length,
        edge_fraction=work.m_active / m0 if m0 else None,
    )
    logger.debug(
        "f=%.3f lcc=%.4f apl=%s", fraction, point.lcc_fraction, point.apl
    )
    return point


def write_plan(plan: AttackPlan, stream: TextIO) -> None:
    """Write a plan as header comments plus one element per line."""
    stream.write(f"# kind={AttackKind(plan.kind).value}\n")
    stream.write(f"# seed={plan.seed}\n")
    stream.write(f"# recompute={str(plan.recompute).lower()}\n")
    if plan.fallback_onset is not None:
        stream.write(f"# fallback_onset={plan.fallback_onset}\n")
    for item in plan.sequence:
        if isinstance(item, tuple):
            stream.write(f"{item[0]} {item[1]}\n")
        else:
            stream.write(f"{item}\n")


def read_plan(stream: Iterable[str]) -> AttackPlan:
    """Inverse of ``write_plan``."""
    header: Dict[str, str] = {}
    sequence: List[PlanItem] = []
    for lineno, line in enumerate(stream, 1):
        stripped = line.strip()
        if not stripped:
            continue
        if stripped.startswith("#"):
            key, _, value = stripped[1:].strip().partition("=")
            header[key.strip()] = value.strip()
            continue
        tokens = stripped.split()
        try:
            if len(tokens) == 1:
                sequence.append(int(tokens[0]))
            elif len(tokens) == 2:
                sequence.append(EdgeKey.of(int(tokens[0]), int(tokens[1])))
            else:
                raise ValueError(stripped)
        except ValueError:
            raise AttackError(
                f"line {lineno}: bad plan element {stripped!r}"
            ) from None
    if "kind" not in header:
        raise AttackError("plan file has no '# kind=' header")
    onset = header.get("fallback_onset")
    return AttackPlan(
        kind=AttackKind(header["kind"]),
        sequence=sequence,
        seed=int(header.get("seed", 0)),
        recompute=header.get("recompute", "false") == "true",
        fallback_onset=int(onset) if onset is not None else None,
    )
