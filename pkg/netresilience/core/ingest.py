"""
Network file ingestion.

Parses SNAP-style edge lists, Pajek .net files and GML into a RawEdgeList,
then simplifies to an undirected simple graph restricted to its largest
connected component. Also writes graphs back out for ``convert``.
"""

import re
import shlex
from dataclasses import dataclass, field
from pathlib import Path
from typing import (
    Any,
    Dict,
    Iterable,
    Iterator,
    List,
    Optional,
    TextIO,
    Tuple,
    Union,
)
import logging

import networkx as nx

from .defaults import dataset_preset, load_defaults
from .errors import IngestError, ParseError
from .graph import Graph

logger = logging.getLogger(__name__)

FORMATS = ("edgelist", "pajek", "gml")

# Extension → format. Anything else is read as an edge list.
FORMAT_EXTENSIONS = {
    ".net": "pajek",
    ".paj": "pajek",
    ".gml": "gml",
}

_INTEGER_RE = re.compile(r"[+-]?\d+")
_EDGE_TOKEN_RE = re.compile(r"[^\s#]\S*")
_GML_TOKEN_RE = re.compile(r'\[|\]|"(?:[^"\\]|\\.)*"|[^\s\[\]"]+')


@dataclass
class RawEdgeList:
    """Edge pairs exactly as read, before any simplification."""

    pairs: List[Tuple[str, str]] = field(default_factory=list)
    directed: bool = False


@dataclass(frozen=True)
class LabelMap:
    """Bijection between original labels and dense node ids."""

    labels: Tuple[str, ...]
    _index: Dict[str, int] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        index = {label: node for node, label in enumerate(self.labels)}
        if len(index) != len(self.labels):
            raise IngestError("label map is not injective")
        object.__setattr__(self, "_index", index)

    @classmethod
    def identity(cls, n: int) -> "LabelMap":
        return cls(tuple(str(u) for u in range(n)))

    def __len__(self) -> int:
        return len(self.labels)

    def label(self, node: int) -> str:
        return self.labels[node]

    def node(self, label: str) -> int:
        return self._index[label]


def _label_key(label: str) -> Tuple[int, int, str]:
    # Integer labels sort numerically so exported graphs re-ingest unchanged.
    if _INTEGER_RE.fullmatch(label):
        return (0, int(label), label)
    return (1, 0, label)


def parse_edge_list(stream: Iterable[str]) -> RawEdgeList:
    """
    Parse a whitespace-separated edge list.

    Lines starting with '#' are comments; blank lines are skipped. Every
    other line must hold exactly two tokens.
    """
    raw = RawEdgeList()
    for lineno, line in enumerate(stream, 1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        tokens = stripped.split()
        if len(tokens) != 2:
            raise ParseError(
                f"expected 2 tokens, found {len(tokens)}: {stripped!r}", line=lineno
            )
        raw.pairs.append((tokens[0], tokens[1]))
    return raw


def parse_pajek(stream: Iterable[str]) -> RawEdgeList:
    """
    Parse the *Vertices / *Edges / *Arcs subset of the Pajek .net format.

    Vertex ids are 1-based. When vertex lines carry unique labels those are
    used, otherwise the numeric id is the label.
    """
    raw = RawEdgeList()
    vertex_count: Optional[int] = None
    vertex_labels: Dict[int, str] = {}
    section: Optional[str] = None
    edge_ids: List[Tuple[int, int]] = []

    for lineno, line in enumerate(stream, 1):
        stripped = line.strip()
        if not stripped or stripped.startswith("%"):
            continue
        if stripped.startswith("*"):
            header = stripped.split()
            keyword = header[0].lower()
            if keyword == "*vertices":
                if len(header) < 2 or not header[1].isdigit():
                    raise ParseError("*Vertices needs a vertex count", line=lineno)
                vertex_count = int(header[1])
                section = "vertices"
            elif keyword in ("*edges", "*arcs"):
                if vertex_count is None:
                    raise ParseError(
                        f"{header[0]} section before *Vertices header", line=lineno
                    )
                section = "edges"
                if keyword == "*arcs":
                    raw.directed = True
            else:
                # *Network, *Partition, *Edgeslist, ...: not supported, skipped
                section = None
            continue

        if section == "vertices":
            try:
                tokens = shlex.split(stripped)
            except ValueError as e:
                raise ParseError(f"bad vertex line: {e}", line=lineno) from None
            if not tokens[0].isdigit():
                raise ParseError(f"bad vertex id {tokens[0]!r}", line=lineno)
            if len(tokens) > 1:
                vertex_labels[int(tokens[0])] = tokens[1]
        elif section == "edges":
            tokens = stripped.split()
            if len(tokens) < 2:
                raise ParseError(f"edge line needs two ids: {stripped!r}", line=lineno)
            try:
                a, b = int(tokens[0]), int(tokens[1])
            except ValueError:
                raise ParseError(
                    f"non-integer vertex id in {stripped!r}", line=lineno
                ) from None
            for vertex in (a, b):
                if not 1 <= vertex <= vertex_count:
                    raise ParseError(
                        f"vertex {vertex} out of range 1..{vertex_count}", line=lineno
                    )
            edge_ids.append((a, b))

    if vertex_count is None:
        raise ParseError("missing *Vertices header")

    labels = vertex_labels
    if len(set(labels.values())) != len(labels):
        logger.warning("Pajek vertex labels are not unique; using vertex ids")
        labels = {}
    raw.pairs = [
        (labels.get(a, str(a)), labels.get(b, str(b))) for a, b in edge_ids
    ]
    return raw


def _gml_tokens(stream: Iterable[str]) -> Iterator[Tuple[int, str]]:
    for lineno, line in enumerate(stream, 1):
        if line.lstrip().startswith("#"):
            continue
        for match in _GML_TOKEN_RE.finditer(line):
            yield lineno, match.group(0)


def _gml_unquote(token: str) -> str:
    if len(token) >= 2 and token[0] == token[-1] == '"':
        return token[1:-1]
    return token


def _gml_block(
    tokens: Iterator[Tuple[int, str]], opened_at: Optional[int]
) -> List[Tuple[str, Any, int]]:
    """Read key/value pairs until the matching ']' (or end of input)."""
    items: List[Tuple[str, Any, int]] = []
    for lineno, key in tokens:
        if key == "]":
            if opened_at is None:
                raise ParseError("unbalanced ']'", line=lineno)
            return items
        if key == "[":
            raise ParseError("'[' without a key", line=lineno)
        try:
            value_line, value = next(tokens)
        except StopIteration:
            raise ParseError(f"key {key!r} has no value", line=lineno) from None
        if value == "[":
            items.append((key.lower(), _gml_block(tokens, value_line), lineno))
        elif value == "]":
            raise ParseError(f"key {key!r} has no value", line=lineno)
        else:
            items.append((key.lower(), _gml_unquote(value), lineno))
    if opened_at is not None:
        raise ParseError("unterminated '['", line=opened_at)
    return items


def parse_gml(stream: Iterable[str]) -> RawEdgeList:
    """
    Parse node and edge blocks of a GML graph.

    Unknown attributes are ignored. Node ``label`` attributes are used as
    labels when they are unique, otherwise node ids are.
    """
    top = _gml_block(_gml_tokens(stream), None)
    graph_block = next(
        (value for key, value, _ in top if key == "graph" and isinstance(value, list)),
        None,
    )
    if graph_block is None:
        raise ParseError("no 'graph [ ... ]' block found")

    raw = RawEdgeList()
    node_labels: Dict[str, str] = {}
    edges: List[Tuple[str, str]] = []
    for key, value, lineno in graph_block:
        if key == "directed" and not isinstance(value, list):
            raw.directed = value.strip() == "1"
        elif key == "node" and isinstance(value, list):
            attrs = {k: v for k, v, _ in value if not isinstance(v, list)}
            if "id" in attrs and "label" in attrs:
                node_labels[attrs["id"]] = attrs["label"]
        elif key == "edge" and isinstance(value, list):
            attrs = {k: v for k, v, _ in value if not isinstance(v, list)}
            if "source" not in attrs or "target" not in attrs:
                raise ParseError("edge is missing source or target", line=lineno)
            edges.append((attrs["source"], attrs["target"]))

    if len(set(node_labels.values())) != len(node_labels):
        logger.warning("GML node labels are not unique; using node ids")
        node_labels = {}
    raw.pairs = [(node_labels.get(s, s), node_labels.get(t, t)) for s, t in edges]
    return raw


PARSERS = {
    "edgelist": parse_edge_list,
    "pajek": parse_pajek,
    "gml": parse_gml,
}


def simplify_and_lcc(raw: RawEdgeList) -> Tuple[Graph, LabelMap]:
    """
    Collapse a raw edge list to a simple undirected graph's largest component.

    Self-loops are dropped, duplicate and reciprocal pairs merged, and the
    biggest connected component is re-indexed densely in label order.
    """
    pairs = [(s, t) for s, t in raw.pairs if s != t]
    if not pairs:
        raise IngestError("graph is empty after simplification")

    # Ids follow label order, so component ties break on the smallest label.
    labels = sorted({label for pair in pairs for label in pair}, key=_label_key)
    index = {label: node for node, label in enumerate(labels)}
    full = Graph.from_edges(len(labels), ((index[s], index[t]) for s, t in pairs))

    graph, kept = full.subgraph(full.largest_component())
    label_map = LabelMap(tuple(labels[u] for u in kept))

    logger.debug(
        "Simplified %d raw pairs to %d nodes / %d edges (LCC of %d nodes total)",
        len(raw.pairs),
        graph.n_active,
        graph.m_active,
        len(labels),
    )
    return graph, label_map


def extract_lcc(graph: Graph) -> Graph:
    """Largest connected component of ``graph`` as a fresh dense graph."""
    sub, _ = graph.subgraph(graph.largest_component())
    return sub


def detect_format(path: Union[str, Path]) -> str:
    return FORMAT_EXTENSIONS.get(Path(path).suffix.lower(), "edgelist")


def parse(stream: Iterable[str], fmt: str) -> RawEdgeList:
    try:
        parser = PARSERS[fmt]
    except KeyError:
        raise IngestError(
            f"unknown format '{fmt}' (expected one of {', '.join(FORMATS)})"
        ) from None
    return parser(stream)


def read_graph(
    path: Union[str, Path], fmt: Optional[str] = None
) -> Tuple[Graph, LabelMap]:
    """
    Read a network file and return its simplified largest component.

    Args:
        path: File to read
        fmt: One of FORMATS; detected from the extension when omitted
    """
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"Network file not found: {path}")
    fmt = fmt or detect_format(path)
    try:
        with open(path, "r", encoding="utf-8") as f:
            raw = parse(f, fmt)
    except UnicodeDecodeError:
        raise ParseError(f"{path.name} is not valid UTF-8") from None
    graph, labels = simplify_and_lcc(raw)
    logger.info(
        "Ingested %s (%s%s): %d nodes, %d edges",
        path.name,
        fmt,
        ", directed input symmetrized" if raw.directed else "",
        graph.n_active,
        graph.m_active,
    )
    return graph, labels


def _labels_for(graph: Graph, labels: Optional[LabelMap]) -> List[str]:
    if labels is None:
        return [str(u) for u in range(graph.n_total)]
    return list(labels.labels)


def write_edge_list(
    graph: Graph, stream: TextIO, labels: Optional[LabelMap] = None
) -> None:
    """
    Write the canonical edge list: a count header, then sorted edges.

    Labels are written only when every active node's label is a single
    token that cannot start a comment; otherwise dense node ids are.
    """
    names = _labels_for(graph, labels)
    unsafe = [
        names[u] for u in graph.nodes() if not _EDGE_TOKEN_RE.fullmatch(names[u])
    ]
    if unsafe:
        logger.warning(
            "%d label(s) such as %r do not fit the edge-list format; "
            "writing node ids instead",
            len(unsafe),
            unsafe[0],
        )
        names = [str(u) for u in range(graph.n_total)]
    stream.write(f"# nodes={graph.n_active} edges={graph.m_active}\n")
    for u, v in graph.edges():
        stream.write(f"{names[u]} {names[v]}\n")


def to_networkx(graph: Graph, labels: Optional[LabelMap] = None) -> nx.Graph:
    """Copy into a networkx graph keyed by label."""
    names = _labels_for(graph, labels)
    result = nx.Graph()
    result.add_nodes_from(names[u] for u in graph.nodes())
    result.add_edges_from((names[u], names[v]) for u, v in graph.edges())
    return result


def write_pajek(
    graph: Graph, stream: TextIO, labels: Optional[LabelMap] = None
) -> None:
    for line in nx.generate_pajek(to_networkx(graph, labels)):
        stream.write(line + "\n")


def write_gml(graph: Graph, stream: TextIO, labels: Optional[LabelMap] = None) -> None:
    for line in nx.generate_gml(to_networkx(graph, labels)):
        stream.write(line + "\n")


WRITERS = {
    "edgelist": write_edge_list,
    "pajek": write_pajek,
    "gml": write_gml,
}


def compare_to_reference(name: str, observed: Dict[str, Any]) -> List[Dict]:
    """
    Compare observed statistics with a dataset's published reference values.

    Args:
        name: Dataset preset name (blog, twitter, epinions, author)
        observed: Mapping with any of nodes, edges, edge_node_ratio,
            max_degree, clustering_coefficient, apl

    Returns:
        One result per compared quantity with check, status, expected,
        observed and message keys. Mismatches are logged as warnings.
    """
    preset = dataset_preset(name)
    tolerances = load_defaults()["reference_tolerances"]
    mapping = {
        "nodes": "nodes",
        "edges": "edges",
        "edge_node_ratio": "edge_node_ratio",
        "max_degree": "max_degree",
        "clustering_coefficient": "clustering",
        "apl": "apl",
    }
    results = []
    for key, preset_key in mapping.items():
        expected = preset.get(preset_key)
        value = observed.get(key)
        if expected is None or value is None:
            continue
        tolerance = float(tolerances.get(preset_key, 0))
        matches = abs(float(value) - float(expected)) <= tolerance + 1e-12
        status = "pass" if matches else "fail"
        message = f"{name} {key}: expected {expected}, observed {value}"
        if not matches:
            logger.warning("Reference mismatch: %s", message)
        results.append(
            {
                "check": key,
                "status": status,
                "expected": expected,
                "observed": value,
                "message": message,
            }
        )
    return results
