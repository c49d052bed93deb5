"""
Mutable simple undirected graph used by every other module.

Nodes are dense integer ids in [0, n). Removing a node tombstones it: the id
stays valid (so attack plans keep pointing at the right node) but the node no
longer takes part in any query. Edges are identified by their canonical
EdgeKey (u < v).
"""

from typing import Dict, Iterable, List, NamedTuple, Optional, Sequence, Set, Tuple
import logging

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components as _sparse_components

from .errors import GraphError

logger = logging.getLogger(__name__)


class EdgeKey(NamedTuple):
    """Canonical undirected edge, always stored with u < v."""

    u: int
    v: int

    @classmethod
    def of(cls, a: int, b: int) -> "EdgeKey":
        """Build the canonical key for the unordered pair {a, b}."""
        a, b = int(a), int(b)
        if a == b:
            raise GraphError(f"self-loop on node {a} is not allowed")
        return cls(a, b) if a < b else cls(b, a)


class Graph:
    """
    Simple undirected graph with tombstoned node removal.

    A Graph is single-writer. Read-only queries may be shared between threads
    once mutation has stopped.
    """

    def __init__(self, n: int = 0):
        if n < 0:
            raise GraphError(f"node count must be non-negative, got {n}")
        self._adj: List[Set[int]] = [set() for _ in range(n)]
        self._active: List[bool] = [True] * n
        self.n_active = n
        self.m_active = 0

    @classmethod
    def from_edges(cls, n: int, edges: Iterable[Tuple[int, int]]) -> "Graph":
        """Build an n-node graph and insert every edge of ``edges``."""
        graph = cls(n)
        for u, v in edges:
            graph.add_edge(u, v)
        return graph

    def __repr__(self) -> str:
        return f"Graph(n_active={self.n_active}, m_active={self.m_active})"

    @property
    def n_total(self) -> int:
        """Number of node ids ever allocated, removed ones included."""
        return len(self._adj)

    def is_active(self, u: int) -> bool:
        return 0 <= u < len(self._adj) and self._active[u]

    def _require_active(self, u: int) -> None:
        if not self.is_active(u):
            if 0 <= u < len(self._adj):
                raise GraphError(f"node {u} has been removed")
            raise GraphError(f"node {u} does not exist")

    def add_node(self) -> int:
        """Allocate a fresh active node and return its id."""
        self._adj.append(set())
        self._active.append(True)
        self.n_active += 1
        return len(self._adj) - 1

    def add_edge(self, u: int, v: int) -> bool:
        """
        Insert the undirected edge {u, v}.

        Returns:
            True if the edge was new, False if it was already present
        """
        u, v = int(u), int(v)
        if u == v:
            raise GraphError(f"self-loop on node {u} is not allowed")
        self._require_active(u)
        self._require_active(v)
        if v in self._adj[u]:
            return False
        self._adj[u].add(v)
        self._adj[v].add(u)
        self.m_active += 1
        return True

    def has_edge(self, u: int, v: int) -> bool:
        return self.is_active(u) and v in self._adj[u]

    def remove_node(self, u: int) -> None:
        """Tombstone node u and drop every incident edge."""
        u = int(u)
        self._require_active(u)
        for w in self._adj[u]:
            self._adj[w].discard(u)
        self.m_active -= len(self._adj[u])
        self._adj[u] = set()
        self._active[u] = False
        self.n_active -= 1

    def remove_edge(self, edge: Sequence[int]) -> None:
        """Remove an edge given as an EdgeKey or any (u, v) pair."""
        u, v = int(edge[0]), int(edge[1])
        if not self.has_edge(u, v):
            raise GraphError(f"edge ({u}, {v}) is not present")
        self._adj[u].discard(v)
        self._adj[v].discard(u)
        self.m_active -= 1

    def degree(self, u: int) -> int:
        self._require_active(u)
        return len(self._adj[u])

    def neighbors(self, u: int) -> List[int]:
        """Neighbors of u in ascending id order."""
        self._require_active(u)
        return sorted(self._adj[u])

    def nodes(self) -> List[int]:
        """Active node ids in ascending order."""
        return [u for u, alive in enumerate(self._active) if alive]

    def edges(self) -> List[EdgeKey]:
        """Present edges in ascending (u, v) order."""
        return [
            EdgeKey(u, v)
            for u in self.nodes()
            for v in sorted(self._adj[u])
            if u < v
        ]

    def degrees(self) -> Dict[int, int]:
        """Map of active node id to current degree."""
        return {u: len(self._adj[u]) for u in self.nodes()}

    def copy(self) -> "Graph":
        clone = Graph.__new__(Graph)
        clone._adj = [set(neighbors) for neighbors in self._adj]
        clone._active = list(self._active)
        clone.n_active = self.n_active
        clone.m_active = self.m_active
        return clone

    def subgraph(self, nodes: Iterable[int]) -> Tuple["Graph", List[int]]:
        """
        Induced subgraph on ``nodes``, re-indexed densely.

        Returns:
            The new graph and the list mapping new ids to old ids
        """
        kept = sorted(set(int(u) for u in nodes))
        for u in kept:
            self._require_active(u)
        position = {old: new for new, old in enumerate(kept)}
        sub = Graph(len(kept))
        for old in kept:
            for w in self._adj[old]:
                if w > old and w in position:
                    sub.add_edge(position[old], position[w])
        return sub, kept

    def to_csr(
        self, nodes: Optional[Iterable[int]] = None
    ) -> Tuple[csr_matrix, np.ndarray]:
        """
        Symmetric adjacency matrix of the induced subgraph on ``nodes``.

        Args:
            nodes: Node ids to include; all active nodes when omitted

        Returns:
            The CSR matrix and the array mapping matrix rows to node ids
        """
        if nodes is None:
            index = np.asarray(self.nodes(), dtype=np.int64)
        else:
            index = np.asarray(sorted(set(int(u) for u in nodes)), dtype=np.int64)
        position = {int(u): i for i, u in enumerate(index)}
        rows: List[int] = []
        cols: List[int] = []
        for i, u in enumerate(index.tolist()):
            for w in self._adj[u]:
                j = position.get(w)
                if j is not None:
                    rows.append(i)
                    cols.append(j)
        data = np.ones(len(rows), dtype=np.int32)
        size = len(index)
        matrix = csr_matrix((data, (rows, cols)), shape=(size, size))
        return matrix, index

    def connected_components(self) -> List[Set[int]]:
        """
        Partition active nodes into connected components.

        Components are ordered by size descending, ties by smallest member id.
        """
        matrix, index = self.to_csr()
        if index.size == 0:
            return []
        _, labels = _sparse_components(matrix, directed=False)
        groups: Dict[int, Set[int]] = {}
        for node, label in zip(index.tolist(), labels.tolist()):
            groups.setdefault(label, set()).add(node)
        components = list(groups.values())
        components.sort(key=lambda component: (-len(component), min(component)))
        return components

    def largest_component(self) -> Set[int]:
        """The first (largest) connected component."""
        if self.n_active == 0:
            raise GraphError("graph has no active nodes")
        return self.connected_components()[0]
