"""Columnar indexed storage for graph collections.

Loading a collection produces three families of sorted tables:

* ``ActivityTable`` - one row ``(label, graph, node)`` per node, keyed by
  the node's primary label; the row position is the node's offset ``off``.
* ``AttributeTable_k`` - one table per property key ``k`` holding
  ``(graph, value, off)`` for every non-null association.
* ``PhiTable_l`` - one table per edge label ``l`` holding
  ``(src_label, graph, src, edge, dst)`` per edge.

Each table carries a blocked primary index (key to contiguous row range)
and the activity table additionally a secondary index mapping
``(graph, node)`` back to its offset. Indexing also fixes ``vtopo[g]``,
a deterministic topological order per graph (ties broken by ascending
node id). The store is immutable once built and safe to share.
"""

from __future__ import annotations

import heapq
from bisect import bisect_left
from dataclasses import dataclass, field

from .model import CycleError, GsmGraph, validate_acyclic


@dataclass(frozen=True, slots=True)
class ActivityRow:
    label: str
    graph: int
    node: int


@dataclass(frozen=True, slots=True)
class AttributeRow:
    graph: int
    value: str
    activity_offset: int


@dataclass(frozen=True, slots=True)
class PhiRow:
    src_label: str
    graph: int
    src: int
    edge: int
    dst: int


def topo_sort(g: GsmGraph) -> list[int]:
    """Topological order of ``g``'s nodes, smallest node id first on ties.

    Raises CycleError when no order exists.
    """
    n = len(g.nodes)
    indeg = [0] * n
    adj: list[list[int]] = [[] for _ in range(n)]
    for e in g.edges:
        adj[e.src.local].append(e.dst.local)
        indeg[e.dst.local] += 1
    ready = [v for v in range(n) if indeg[v] == 0]
    heapq.heapify(ready)
    order: list[int] = []
    while ready:
        v = heapq.heappop(ready)
        order.append(v)
        for w in adj[v]:
            indeg[w] -= 1
            if indeg[w] == 0:
                heapq.heappush(ready, w)
    if len(order) != n:
        witness = validate_acyclic(g)
        raise CycleError(g.id, witness or [])
    return order


@dataclass
class ColumnarStore:
    """Immutable indexed form of a graph collection."""

    graphs: dict[int, GsmGraph]
    activity: list[ActivityRow]
    activity_blocks: dict[str, tuple[int, int]]
    activity_offset: dict[tuple[int, int], int]
    attributes: dict[str, list[AttributeRow]]
    phi: dict[str, list[PhiRow]]
    phi_blocks: dict[str, dict[str, dict[int, tuple[int, int]]]]
    vtopo: dict[int, list[int]]
    ell_store: dict[int, list[list[str]]]
    xi_store: dict[int, list[list[str]]]
    # per-key sorted (graph, offset) keys, parallel to `attributes`
    _attr_keys: dict[str, list[tuple[int, int]]] = field(default_factory=dict)

    def primary_label(self, graph: int, node: int) -> str:
        ell = self.ell_store[graph][node]
        return ell[0] if ell else ""

    def scan_edges(self, graph: int, label: str, src_label: str | None = None) -> list[PhiRow]:
        """All edges of ``graph`` labelled ``label``, in PhiTable order.

        With ``src_label`` the lookup is one block; without, the per-label
        blocks are walked in table (sorted) order. Unknown labels yield [].
        """
        table = self.phi.get(label)
        if table is None:
            return []
        blocks = self.phi_blocks[label]
        if src_label is not None:
            rng = blocks.get(src_label, {}).get(graph)
            return table[rng[0]:rng[1]] if rng else []
        out: list[PhiRow] = []
        for sl in blocks:
            rng = blocks[sl].get(graph)
            if rng:
                out.extend(table[rng[0]:rng[1]])
        return out

    def get_property(self, graph: int, node: int, key: str) -> str | None:
        """Value of ``key`` on a node, through the secondary index offset."""
        rows = self.attributes.get(key)
        if rows is None:
            return None
        off = self.activity_offset.get((graph, node))
        if off is None:
            return None
        keys = self._attr_keys[key]
        i = bisect_left(keys, (graph, off))
        if i < len(keys) and keys[i] == (graph, off):
            return rows[i].value
        return None

    def dump_tables(self) -> dict[str, str]:
        """Delimiter-separated text per table, for golden tests."""
        out: dict[str, str] = {}
        lines = ["label|graph|node"]
        lines += [f"{r.label}|{r.graph}|{r.node}" for r in self.activity]
        out["ActivityTable"] = "\n".join(lines) + "\n"
        for key in sorted(self.attributes):
            lines = ["graph|value|off"]
            lines += [f"{r.graph}|{r.value}|{r.activity_offset}" for r in self.attributes[key]]
            out[f"AttributeTable[{key}]"] = "\n".join(lines) + "\n"
        for lam in sorted(self.phi):
            lines = ["src_label|graph|src|edge|dst"]
            lines += [f"{r.src_label}|{r.graph}|{r.src}|{r.edge}|{r.dst}" for r in self.phi[lam]]
            out[f"PhiTable[{lam}]"] = "\n".join(lines) + "\n"
        return out


def _block_ranges(keys: list, whole: list) -> dict:
    """Map each distinct key to its contiguous [start, end) range."""
    blocks: dict = {}
    start = 0
    for i in range(1, len(whole) + 1):
        if i == len(whole) or keys[i] != keys[start]:
            blocks[keys[start]] = (start, i)
            start = i
    return blocks


def index_collection(graphs: list[GsmGraph]) -> ColumnarStore:
    """Build the columnar tables, indexes and per-graph topological orders.

    Deterministic for a given input; rejects cyclic graphs with CycleError.
    The graphs themselves are retained for late materialisation.
    """
    by_id: dict[int, GsmGraph] = {}
    for g in graphs:
        if g.id in by_id:
            raise ValueError(f"duplicate graph id {g.id}")
        by_id[g.id] = g

    vtopo = {g.id: topo_sort(g) for g in graphs}

    activity: list[ActivityRow] = []
    for g in graphs:
        for n in g.nodes:
            activity.append(ActivityRow(n.primary_label, g.id, n.id.local))
    activity.sort(key=lambda r: (r.label, r.graph, r.node))
    activity_offset = {(r.graph, r.node): off for off, r in enumerate(activity)}
    activity_blocks = _block_ranges([r.label for r in activity], activity)

    attributes: dict[str, list[AttributeRow]] = {}
    for g in graphs:
        for n in g.nodes:
            off = activity_offset[(g.id, n.id.local)]
            for key, value in n.pi.items():
                attributes.setdefault(key, []).append(AttributeRow(g.id, value, off))
    attr_keys: dict[str, list[tuple[int, int]]] = {}
    for key, rows in attributes.items():
        rows.sort(key=lambda r: (r.graph, r.activity_offset))
        attr_keys[key] = [(r.graph, r.activity_offset) for r in rows]

    phi: dict[str, list[PhiRow]] = {}
    for g in graphs:
        for e in g.edges:
            src_label = g.node(e.src.local).primary_label
            phi.setdefault(e.label, []).append(
                PhiRow(src_label, g.id, e.src.local, e.id.local, e.dst.local)
            )
    phi_blocks: dict[str, dict[str, dict[int, tuple[int, int]]]] = {}
    for lam, rows in phi.items():
        rows.sort(key=lambda r: (r.src_label, r.graph, r.src, r.edge))
        by_label: dict[str, dict[int, tuple[int, int]]] = {}
        start = 0
        for i in range(1, len(rows) + 1):
            prev = rows[start]
            if i == len(rows) or (rows[i].src_label, rows[i].graph) != (prev.src_label, prev.graph):
                by_label.setdefault(prev.src_label, {})[prev.graph] = (start, i)
                start = i
        phi_blocks[lam] = by_label

    return ColumnarStore(
        graphs=by_id,
        activity=activity,
        activity_blocks=activity_blocks,
        activity_offset=activity_offset,
        attributes=attributes,
        phi=phi,
        phi_blocks=phi_blocks,
        vtopo=vtopo,
        ell_store={g.id: [list(n.ell) for n in g.nodes] for g in graphs},
        xi_store={g.id: [list(n.xi) for n in g.nodes] for g in graphs},
        _attr_keys=attr_keys,
    )
