"""Core graph model: semistructured nodes, labelled edges, acyclicity checks.

A collection holds directed acyclic graphs. Every node carries a label
vector ``ell``, a value vector ``xi`` and a string-to-string property map
``pi``; every edge has its own identity and a single label. Objects are
addressed by ``(graph, local, kind)`` triples; local indexes are dense per
graph and per kind after loading.

Collections are serialised as a JSON document::

    {"graphs": [{"id": 0, "root": 3,
                 "nodes": [{"id": 0, "ell": ["Alice"], "xi": ["Alice"],
                            "pi": {"upos": "PROPN"}}, ...],
                 "edges": [{"id": 0, "src": 3, "dst": 0, "label": "nsubj"},
                           ...]}]}

Omitted ``ell``/``xi`` default to empty lists, omitted ``pi`` to an empty
map, omitted ``root`` to absent, and an omitted graph ``id`` to the graph's
position in the collection.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

NODE = "node"
EDGE = "edge"

_KIND_RANK = {NODE: 0, EDGE: 1}


class GraphFormatError(ValueError):
    """Malformed graph collection document (bad JSON, ids, or references)."""


class CycleError(Exception):
    """A graph that must be acyclic contains a directed cycle."""

    def __init__(self, graph_id: int, witness: list[int]):
        self.graph_id = graph_id
        self.witness = witness
        path = " -> ".join(str(v) for v in witness)
        super().__init__(f"graph {graph_id}: directed cycle {path}")


@dataclass(frozen=True, slots=True)
class ObjectId:
    """Identity of a node or edge within a loaded collection."""

    graph: int
    local: int
    kind: str

    def key(self) -> tuple[int, int, int]:
        """Total order used wherever object ids are sorted."""
        return (self.graph, _KIND_RANK[self.kind], self.local)

    def __str__(self) -> str:
        return f"{'N' if self.kind == NODE else 'E'}{self.graph}:{self.local}"


def node_id(graph: int, local: int) -> ObjectId:
    return ObjectId(graph, local, NODE)


def edge_id(graph: int, local: int) -> ObjectId:
    return ObjectId(graph, local, EDGE)


@dataclass
class GsmNode:
    """A semistructured object: labels, values, and keyed properties."""

    id: ObjectId
    ell: list[str] = field(default_factory=list)
    xi: list[str] = field(default_factory=list)
    pi: dict[str, str] = field(default_factory=dict)

    @property
    def primary_label(self) -> str:
        """First label, or the reserved empty label for unlabelled nodes."""
        return self.ell[0] if self.ell else ""


@dataclass
class GsmEdge:
    id: ObjectId
    src: ObjectId
    dst: ObjectId
    label: str


@dataclass
class GsmGraph:
    """One DAG of a collection. ``nodes[i].id.local == i`` after loading."""

    id: int
    nodes: list[GsmNode] = field(default_factory=list)
    edges: list[GsmEdge] = field(default_factory=list)
    root: ObjectId | None = None

    def node(self, local: int) -> GsmNode:
        return self.nodes[local]

    def edge(self, local: int) -> GsmEdge:
        return self.edges[local]


def validate_acyclic(g: GsmGraph) -> list[int] | None:
    """Return None if ``g`` has no directed cycle, else one witness cycle.

    The witness is a node sequence ``[v0, v1, ..., v0]`` closing on its
    first element. Detection is a deterministic iterative DFS: start nodes
    ascending, successors ascending.
    """
    n = len(g.nodes)
    adj: list[list[int]] = [[] for _ in range(n)]
    for e in g.edges:
        adj[e.src.local].append(e.dst.local)
    for lst in adj:
        lst.sort()

    WHITE, GRAY, BLACK = 0, 1, 2
    color = [WHITE] * n
    for start in range(n):
        if color[start] != WHITE:
            continue
        color[start] = GRAY
        path = [start]
        pos = {start: 0}
        iters = [iter(adj[start])]
        while path:
            try:
                nxt = next(iters[-1])
            except StopIteration:
                done = path.pop()
                iters.pop()
                del pos[done]
                color[done] = BLACK
                continue
            if color[nxt] == GRAY:
                return path[pos[nxt]:] + [nxt]
            if color[nxt] == WHITE:
                color[nxt] = GRAY
                pos[nxt] = len(path)
                path.append(nxt)
                iters.append(iter(adj[nxt]))
    return None


def _require(cond: bool, msg: str) -> None:
    if not cond:
        raise GraphFormatError(msg)


def _string_list(value: object, where: str) -> list[str]:
    _require(isinstance(value, list), f"{where}: expected a list of strings")
    for item in value:  # type: ignore[union-attr]
        _require(isinstance(item, str), f"{where}: expected string entries")
    return list(value)  # type: ignore[arg-type]


def _parse_graph(entry: object, position: int) -> GsmGraph:
    where = f"graphs[{position}]"
    _require(isinstance(entry, dict), f"{where}: expected an object")
    assert isinstance(entry, dict)

    gid = entry.get("id", position)
    _require(isinstance(gid, int) and gid >= 0, f"{where}.id: non-negative integer required")

    raw_nodes = entry.get("nodes", [])
    _require(isinstance(raw_nodes, list), f"{where}.nodes: expected a list")
    nodes: dict[int, GsmNode] = {}
    for i, raw in enumerate(raw_nodes):
        nwhere = f"{where}.nodes[{i}]"
        _require(isinstance(raw, dict), f"{nwhere}: expected an object")
        local = raw.get("id")
        _require(isinstance(local, int) and local >= 0, f"{nwhere}.id: non-negative integer required")
        _require(local not in nodes, f"{nwhere}.id: duplicate node id {local}")
        pi = raw.get("pi", {})
        _require(isinstance(pi, dict), f"{nwhere}.pi: expected an object")
        for k, v in pi.items():
            _require(isinstance(k, str) and isinstance(v, str), f"{nwhere}.pi: string keys and values required")
        nodes[local] = GsmNode(
            id=node_id(gid, local),
            ell=_string_list(raw.get("ell", []), f"{nwhere}.ell"),
            xi=_string_list(raw.get("xi", []), f"{nwhere}.xi"),
            pi=dict(pi),
        )
    _require(sorted(nodes) == list(range(len(nodes))), f"{where}.nodes: node ids must be dense 0..n-1")

    raw_edges = entry.get("edges", [])
    _require(isinstance(raw_edges, list), f"{where}.edges: expected a list")
    edges: dict[int, GsmEdge] = {}
    for i, raw in enumerate(raw_edges):
        ewhere = f"{where}.edges[{i}]"
        _require(isinstance(raw, dict), f"{ewhere}: expected an object")
        local = raw.get("id")
        _require(isinstance(local, int) and local >= 0, f"{ewhere}.id: non-negative integer required")
        _require(local not in edges, f"{ewhere}.id: duplicate edge id {local}")
        src = raw.get("src")
        dst = raw.get("dst")
        label = raw.get("label")
        _require(isinstance(src, int) and isinstance(dst, int), f"{ewhere}: integer src and dst required")
        _require(src in nodes and dst in nodes, f"{ewhere}: dangling edge endpoint {src}->{dst}")
        _require(isinstance(label, str), f"{ewhere}.label: string required")
        edges[local] = GsmEdge(edge_id(gid, local), node_id(gid, src), node_id(gid, dst), label)
    _require(sorted(edges) == list(range(len(edges))), f"{where}.edges: edge ids must be dense 0..m-1")

    root: ObjectId | None = None
    if "root" in entry and entry["root"] is not None:
        r = entry["root"]
        _require(isinstance(r, int) and r in nodes, f"{where}.root: must name an existing node")
        root = node_id(gid, r)

    g = GsmGraph(
        id=gid,
        nodes=[nodes[i] for i in range(len(nodes))],
        edges=[edges[i] for i in range(len(edges))],
        root=root,
    )
    witness = validate_acyclic(g)
    if witness is not None:
        raise CycleError(gid, witness)
    return g


def parse_graph_collection(text: str) -> list[GsmGraph]:
    """Parse a collection document into validated graphs.

    Raises GraphFormatError for syntax or reference problems (with a
    position in the message) and CycleError for cyclic graphs.
    """
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise GraphFormatError(f"line {exc.lineno}, column {exc.colno}: {exc.msg}") from exc
    _require(isinstance(doc, dict) and "graphs" in doc, "top level: expected an object with a 'graphs' list")
    raw_graphs = doc["graphs"]
    _require(isinstance(raw_graphs, list), "graphs: expected a list")

    graphs = [_parse_graph(entry, i) for i, entry in enumerate(raw_graphs)]
    seen: set[int] = set()
    for g in graphs:
        _require(g.id not in seen, f"duplicate graph id {g.id}")
        seen.add(g.id)
    return graphs


def _graph_to_doc(g: GsmGraph) -> dict:
    doc: dict = {"id": g.id}
    if g.root is not None:
        doc["root"] = g.root.local
    doc["nodes"] = []
    for n in sorted(g.nodes, key=lambda n: n.id.local):
        nd: dict = {"id": n.id.local}
        if n.ell:
            nd["ell"] = list(n.ell)
        if n.xi:
            nd["xi"] = list(n.xi)
        if n.pi:
            nd["pi"] = {k: n.pi[k] for k in sorted(n.pi)}
        doc["nodes"].append(nd)
    doc["edges"] = [
        {"id": e.id.local, "src": e.src.local, "dst": e.dst.local, "label": e.label}
        for e in sorted(g.edges, key=lambda e: e.id.local)
    ]
    return doc


def serialize_collection(graphs: list[GsmGraph]) -> str:
    """Canonical text for a collection: fixed key order, sorted members.

    The output is a pure function of graph structure, so repeated calls
    are byte-identical and ``parse(serialize(gs))`` round-trips.
    """
    doc = {"graphs": [_graph_to_doc(g) for g in graphs]}
    return json.dumps(doc, separators=(",", ":"), ensure_ascii=False) + "\n"


def serialize_graph(g: GsmGraph) -> str:
    """Canonical single-graph document (a one-element collection)."""
    return serialize_collection([g])
