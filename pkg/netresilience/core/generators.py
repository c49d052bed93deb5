"""
Synthetic network generators sized to match a target node and edge count.

Four models are provided: G(n, m) random graphs, Watts-Strogatz small-world
rewiring, Barabasi-Albert preferential attachment and Holme-Kim
preferential attachment with triad formation. Every generator draws from a
numpy Generator seeded from GeneratorSpec.seed, so a GeneratorSpec fully
determines the output.
"""

from dataclasses import dataclass, replace
from enum import Enum
from typing import Dict, List, Optional, Sequence, Tuple
import logging

import numpy as np

from .defaults import dataset_preset, load_defaults, round_half_up
from .errors import GeneratorError
from .graph import EdgeKey, Graph
from .metrics import clustering_coefficient

logger = logging.getLogger(__name__)

_GENERATOR_DEFAULTS = load_defaults()["generators"]
DEFAULT_BETA = float(_GENERATOR_DEFAULTS["beta"])
DEFAULT_P_TRIAD = float(_GENERATOR_DEFAULTS["p_triad"])


class Model(str, Enum):
    RANDOM = "random"
    SMALL_WORLD = "small-world"
    SCALE_FREE = "scale-free"
    HOLME_KIM = "small-world-scale-free"


@dataclass(frozen=True)
class GeneratorSpec:
    """Everything needed to reproduce one generated network."""

    model: Model
    n: int
    target_m: int
    beta: float = DEFAULT_BETA
    p_triad: float = DEFAULT_P_TRIAD
    seed: int = 0

    def problems(self) -> List[str]:
        """All reasons this spec is infeasible (empty when it is valid)."""
        found = []
        if self.n < 2:
            found.append(f"n must be at least 2, got {self.n}")
        max_edges = self.n * (self.n - 1) // 2
        if self.target_m < 0 or self.target_m > max_edges:
            found.append(
                f"target_m={self.target_m} is infeasible for n={self.n} "
                f"(0..{max_edges})"
            )
        if not 0.0 <= self.beta <= 1.0:
            found.append(f"beta must be in [0, 1], got {self.beta}")
        if not 0.0 <= self.p_triad <= 1.0:
            found.append(f"p_triad must be in [0, 1], got {self.p_triad}")
        if self.seed < 0:
            found.append(f"seed must be non-negative, got {self.seed}")
        return found

    def validate(self) -> None:
        found = self.problems()
        if found:
            raise GeneratorError("; ".join(found))


def _ring_degree(n: int, target_m: int) -> int:
    return 2 * round_half_up(target_m / n)


def _attachment_count(n: int, target_m: int) -> int:
    return round_half_up(target_m / n)


def gen_random(n: int, target_m: int, seed: int) -> Graph:
    """
    G(n, m): exactly ``target_m`` distinct edges drawn uniformly.

    Dense requests are served by drawing the complement instead.
    """
    GeneratorSpec(Model.RANDOM, n, target_m, seed=seed).validate()
    rng = np.random.default_rng(seed)
    max_edges = n * (n - 1) // 2
    complement = target_m > max_edges // 2
    wanted = max_edges - target_m if complement else target_m

    chosen = set()
    while len(chosen) < wanted:
        batch = 2 * (wanted - len(chosen)) + 16
        pairs = rng.integers(0, n, size=(batch, 2))
        for a, b in pairs.tolist():
            if a == b:
                continue
            chosen.add((a, b) if a < b else (b, a))
            if len(chosen) == wanted:
                break

    graph = Graph(n)
    if complement:
        for u in range(n):
            for v in range(u + 1, n):
                if (u, v) not in chosen:
                    graph.add_edge(u, v)
    else:
        for u, v in sorted(chosen):
            graph.add_edge(u, v)
    return graph


def gen_small_world(n: int, target_m: int, beta: float, seed: int) -> Graph:
    """
    Watts-Strogatz: ring lattice of even degree k, then edge rewiring.

    k = 2 * round(target_m / n), so the edge count is n * k / 2.
    """
    GeneratorSpec(Model.SMALL_WORLD, n, target_m, beta=beta, seed=seed).validate()
    k = _ring_degree(n, target_m)
    if k < 2:
        raise GeneratorError(
            f"ring degree k={k} from target_m/n={target_m / n:.3f}; need k >= 2"
        )
    if k >= n:
        raise GeneratorError(f"ring lattice infeasible: k={k} >= n={n}")

    rng = np.random.default_rng(seed)
    graph = Graph(n)
    half = k // 2
    for j in range(1, half + 1):
        for u in range(n):
            graph.add_edge(u, (u + j) % n)

    for j in range(1, half + 1):
        for u in range(n):
            v = (u + j) % n
            if rng.random() >= beta:
                continue
            if graph.degree(u) >= n - 1 or not graph.has_edge(u, v):
                continue
            w = int(rng.integers(n))
            while w == u or graph.has_edge(u, w):
                w = int(rng.integers(n))
            graph.remove_edge(EdgeKey.of(u, v))
            graph.add_edge(u, w)
    return graph


def _seed_clique(size: int, n: int) -> Tuple[Graph, List[int]]:
    graph = Graph(n)
    repeated: List[int] = []
    for u in range(size):
        for v in range(u + 1, size):
            graph.add_edge(u, v)
            repeated.extend((u, v))
    return graph, repeated


def _preferential_pick(
    rng: np.random.Generator, repeated: List[int], exclude: set
) -> int:
    # repeated holds each node once per unit of degree
    while True:
        node = repeated[int(rng.integers(len(repeated)))]
        if node not in exclude:
            return node


def _check_attachment(n: int, target_m: int) -> int:
    m_per = _attachment_count(n, target_m)
    if m_per < 1:
        raise GeneratorError(
            f"attachment count round(target_m/n)={m_per}; need at least 1"
        )
    if n <= m_per:
        raise GeneratorError(f"n={n} must exceed the attachment count {m_per}")
    return m_per


def gen_scale_free(n: int, target_m: int, seed: int) -> Graph:
    """
    Barabasi-Albert growth from a clique of m_per + 1 nodes.

    Each new node links to m_per distinct existing nodes chosen with
    probability proportional to degree; repeated picks are redrawn.
    """
    GeneratorSpec(Model.SCALE_FREE, n, target_m, seed=seed).validate()
    m_per = _check_attachment(n, target_m)
    rng = np.random.default_rng(seed)
    graph, repeated = _seed_clique(m_per + 1, n)

    for new in range(m_per + 1, n):
        targets: List[int] = []
        linked = {new}
        while len(targets) < m_per:
            target = _preferential_pick(rng, repeated, linked)
            linked.add(target)
            targets.append(target)
        for target in targets:
            graph.add_edge(new, target)
            repeated.extend((new, target))
    return graph


def gen_holme_kim(n: int, target_m: int, p_triad: float, seed: int) -> Graph:
    """
    Holme-Kim growth: preferential attachment plus triad formation.

    After each preferential link, the next link closes a triangle with
    probability p_triad by joining a random neighbor of the node just
    attached to; otherwise (or if no such neighbor is free) it is another
    preferential link.
    """
    GeneratorSpec(Model.HOLME_KIM, n, target_m, p_triad=p_triad, seed=seed).validate()
    m_per = _check_attachment(n, target_m)
    rng = np.random.default_rng(seed)
    graph, repeated = _seed_clique(m_per + 1, n)

    for new in range(m_per + 1, n):
        linked = {new}
        targets: List[int] = []
        anchor = _preferential_pick(rng, repeated, linked)
        graph.add_edge(new, anchor)
        linked.add(anchor)
        targets.append(anchor)
        while len(targets) < m_per:
            if rng.random() < p_triad:
                free = [w for w in graph.neighbors(anchor) if w not in linked]
                if free:
                    target = free[int(rng.integers(len(free)))]
                    graph.add_edge(new, target)
                    linked.add(target)
                    targets.append(target)
                    continue
            anchor = _preferential_pick(rng, repeated, linked)
            graph.add_edge(new, anchor)
            linked.add(anchor)
            targets.append(anchor)
        for target in targets:
            repeated.extend((new, target))
    return graph


def generate(spec: GeneratorSpec) -> Graph:
    """Dispatch a GeneratorSpec to its model."""
    spec.validate()
    model = Model(spec.model)
    if model is Model.RANDOM:
        graph = gen_random(spec.n, spec.target_m, spec.seed)
    elif model is Model.SMALL_WORLD:
        graph = gen_small_world(spec.n, spec.target_m, spec.beta, spec.seed)
    elif model is Model.SCALE_FREE:
        graph = gen_scale_free(spec.n, spec.target_m, spec.seed)
    else:
        graph = gen_holme_kim(spec.n, spec.target_m, spec.p_triad, spec.seed)
    logger.debug(
        "Generated %s n=%d m=%d (target %d) seed=%d",
        model.value,
        graph.n_active,
        graph.m_active,
        spec.target_m,
        spec.seed,
    )
    return graph


def equivalent_spec(
    dataset: str,
    model: Model,
    seed: int = 0,
    beta: Optional[float] = None,
    p_triad: Optional[float] = None,
) -> GeneratorSpec:
    """GeneratorSpec of ``model`` sized like a reference dataset."""
    preset = dataset_preset(dataset)
    return GeneratorSpec(
        model=Model(model),
        n=int(preset["nodes"]),
        target_m=int(preset["edges"]),
        beta=DEFAULT_BETA if beta is None else beta,
        p_triad=DEFAULT_P_TRIAD if p_triad is None else p_triad,
        seed=seed,
    )


def calibrate_p_triad(
    n: int,
    target_m: int,
    target_clustering: float,
    seeds: Sequence[int] = (0, 1, 2),
    grid: Optional[Sequence[float]] = None,
) -> float:
    """
    Pick the triad-formation probability whose Holme-Kim graphs come
    closest to ``target_clustering`` on average over ``seeds``.

    Ties go to the smaller probability.
    """
    if grid is None:
        step = float(_GENERATOR_DEFAULTS["calibration"]["grid_step"])
        grid = np.round(np.arange(0.0, 1.0 + step / 2, step), 10).tolist()
    if not seeds:
        raise GeneratorError("calibration needs at least one seed")

    measured: Dict[float, float] = {}
    for p in grid:
        values = [
            clustering_coefficient(gen_holme_kim(n, target_m, p, seed))
            for seed in seeds
        ]
        measured[p] = float(np.mean(values))
        logger.debug("Calibration p_triad=%.3f -> clustering %.4f", p, measured[p])

    best = min(grid, key=lambda p: (abs(measured[p] - target_clustering), p))
    logger.info(
        "Calibrated p_triad=%.3f (clustering %.4f, target %.4f)",
        best,
        measured[best],
        target_clustering,
    )
    return float(best)


def with_seed(spec: GeneratorSpec, seed: int) -> GeneratorSpec:
    return replace(spec, seed=seed)
