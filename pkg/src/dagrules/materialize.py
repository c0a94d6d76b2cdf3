"""Late materialisation: merge a delta into its source graph.

The loaded graph is never mutated. The output graph is rebuilt from
surviving originals (everything whose resolution is not DELETED) plus the
delta's new objects, with recorded content updates applied, original edge
endpoints redirected through the replacement closure, and ids renumbered
densely. A provenance map from old object ids to new local ids is returned
alongside. New edges keep the endpoints recorded when they were created;
replacement does not re-route them afterwards, which is what lets a
coalesced entity keep edges to the constituents it replaced.
"""

from __future__ import annotations

from .model import (
    EDGE,
    NODE,
    GsmEdge,
    GsmGraph,
    GsmNode,
    ObjectId,
    edge_id,
    node_id,
    validate_acyclic,
)
from .rewriting import DELETED, Delta, EngineFault, resolve


class MaterialiseCycleError(Exception):
    """The productions introduced a directed cycle; the witness uses the
    output graph's renumbered node ids."""

    def __init__(self, graph_id: int, witness: list[int]):
        self.graph_id = graph_id
        self.witness = witness
        path = " -> ".join(str(v) for v in witness)
        super().__init__(f"graph {graph_id}: rewrite introduced cycle {path}")


def materialise(g: GsmGraph, delta: Delta) -> tuple[GsmGraph, dict[ObjectId, int]]:
    """Merge ``delta`` into ``g`` and return (output graph, provenance).

    With an empty delta the output structurally equals the input. The
    output is checked for acyclicity; a cycle introduced by rules raises
    MaterialiseCycleError rather than silently emitting a bad graph.
    """
    if delta.graph != g.id:
        raise EngineFault(f"delta for graph {delta.graph} applied to graph {g.id}")

    def alive(x: ObjectId) -> bool:
        return resolve(delta, x) is not DELETED

    node_prov: dict[ObjectId, int] = {}
    nodes: list[GsmNode] = []

    def emit_node(old: ObjectId, base_ell: list[str], base_xi: list[str], base_pi: dict[str, str]) -> None:
        new_local = len(nodes)
        node_prov[old] = new_local
        ell = delta.ell_sets.get(old)
        pi = dict(base_pi)
        pi.update(delta.pi_writes.get(old, {}))
        nodes.append(GsmNode(
            id=node_id(g.id, new_local),
            ell=list(ell) if ell is not None else list(base_ell),
            xi=list(base_xi) + delta.xi_appends.get(old, []),
            pi=pi,
        ))

    for n in g.nodes:
        if alive(n.id):
            emit_node(n.id, n.ell, n.xi, n.pi)
    for oid in delta.new_nodes:
        if alive(oid):
            emit_node(oid, [], [], {})

    edge_prov: dict[ObjectId, int] = {}
    edges: list[GsmEdge] = []

    def emit_edge(old: ObjectId, src: ObjectId, dst: ObjectId, label: str) -> None:
        if src not in node_prov or dst not in node_prov:
            raise EngineFault(f"edge {old} has a dangling endpoint after merge")
        new_local = len(edges)
        edge_prov[old] = new_local
        edges.append(GsmEdge(
            id=edge_id(g.id, new_local),
            src=node_id(g.id, node_prov[src]),
            dst=node_id(g.id, node_prov[dst]),
            label=label,
        ))

    for e in g.edges:
        if not alive(e.id):
            continue
        src = resolve(delta, e.src)
        dst = resolve(delta, e.dst)
        if src is DELETED or dst is DELETED:
            continue
        emit_edge(e.id, src, dst, e.label)
    for ne in delta.new_edges:
        if not alive(ne.id):
            continue
        if resolve(delta, ne.src) is DELETED or resolve(delta, ne.dst) is DELETED:
            continue
        emit_edge(ne.id, ne.src, ne.dst, ne.label)

    root: ObjectId | None = None
    if g.root is not None:
        r = resolve(delta, g.root)
        if r is not DELETED:
            assert isinstance(r, ObjectId)
            root = node_id(g.id, node_prov[r])

    out = GsmGraph(id=g.id, nodes=nodes, edges=edges, root=root)
    witness = validate_acyclic(out)
    if witness is not None:
        raise MaterialiseCycleError(g.id, witness)

    provenance: dict[ObjectId, int] = {}
    provenance.update(node_prov)
    provenance.update(edge_prov)
    return out, provenance


def provenance_to_text(provenance: dict[ObjectId, int]) -> str:
    """Sidecar rows ``old_kind,old_id,new_id``, nodes first, by new id."""
    items = sorted(provenance.items(), key=lambda p: (0 if p[0].kind == NODE else 1, p[1]))
    lines = [f"{old.kind},{old.local},{new}" for old, new in items]
    return "\n".join(lines) + ("\n" if lines else "")
