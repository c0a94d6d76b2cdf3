"""Rule application in reverse topological order with an incremental view.

Rewriting never touches the loaded graph. Every effect lands in a per-graph
delta: a mini-database of new nodes and edges, recorded content updates
(label assignment, value appends, keyed property writes), a deleted-object
set, and a replacement map from substituted objects to their successors.
Bindings are read through the delta, so a rule firing nearer the root sees
the substitutions made deeper in the graph; the transitive closure of the
replacement map resolves any stale binding to its current object, or to
DELETED when the chain ends in a removed, unreplaced object.

Per entry node (visited children first) the rules fire in declaration
order, and morphisms of one entry in table row order. A morphism is
skipped, with a trace entry, when any of its bindings resolves to DELETED
or the rule's condition fails. Operations run in order of appearance with
deletions deferred to the end of the instance; replacement targets are
never left in the deleted set.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

from .model import EDGE, NODE, GsmGraph, ObjectId, edge_id, node_id
from .rules import (
    And,
    AppendXi,
    Bound,
    Compare,
    Concat,
    Cond,
    DelEdge,
    DelNode,
    EllContains,
    Expr,
    LabelOf,
    NewEdge,
    NewNode,
    Not,
    Or,
    PropOf,
    Replace,
    Rule,
    RuleSet,
    SetLabel,
    SetProp,
    StrLit,
    XiOf,
    op_vars,
)
from .matching import RuleMatches
from .store import ColumnarStore

RESERVED_ID_BASE = 1_000_000


class _Deleted:
    """Sentinel for bindings whose object was removed and never replaced."""

    __slots__ = ()

    def __repr__(self) -> str:
        return "DELETED"


DELETED = _Deleted()


class EngineFault(RuntimeError):
    """A rule evaluated an expression over a dead binding, or the engine
    hit an internal inconsistency. Carries rule and entry context."""


@dataclass(frozen=True, slots=True)
class DeltaEdge:
    id: ObjectId
    src: ObjectId
    dst: ObjectId
    label: str


@dataclass
class Delta:
    """Incremental view of one graph's rewrite effects."""

    graph: int
    new_nodes: list[ObjectId] = field(default_factory=list)
    new_edges: list[DeltaEdge] = field(default_factory=list)
    ell_sets: dict[ObjectId, list[str]] = field(default_factory=dict)
    xi_appends: dict[ObjectId, list[str]] = field(default_factory=dict)
    pi_writes: dict[ObjectId, dict[str, str]] = field(default_factory=dict)
    deleted: set[ObjectId] = field(default_factory=set)
    re: dict[ObjectId, ObjectId] = field(default_factory=dict)
    _next_node: int = RESERVED_ID_BASE
    _next_edge: int = RESERVED_ID_BASE

    def is_empty(self) -> bool:
        return not (
            self.new_nodes or self.new_edges or self.ell_sets or self.xi_appends
            or self.pi_writes or self.deleted or self.re
        )

    def fresh_node(self) -> ObjectId:
        oid = node_id(self.graph, self._next_node)
        self._next_node += 1
        self.new_nodes.append(oid)
        return oid

    def fresh_edge(self, src: ObjectId, dst: ObjectId, label: str) -> DeltaEdge:
        edge = DeltaEdge(edge_id(self.graph, self._next_edge), src, dst, label)
        self._next_edge += 1
        self.new_edges.append(edge)
        return edge

    def is_new_node(self, x: ObjectId) -> bool:
        return x.kind == NODE and x.local >= RESERVED_ID_BASE

    def canonical_text(self) -> str:
        """Deterministic serialisation used by equality and golden tests."""
        doc = {
            "graph": self.graph,
            "new_nodes": [str(x) for x in self.new_nodes],
            "new_edges": [
                {"id": str(e.id), "src": str(e.src), "dst": str(e.dst), "label": e.label}
                for e in self.new_edges
            ],
            "ell": {str(k): v for k, v in sorted(self.ell_sets.items(), key=lambda p: p[0].key())},
            "xi": {str(k): v for k, v in sorted(self.xi_appends.items(), key=lambda p: p[0].key())},
            "pi": {
                str(k): {kk: vv for kk, vv in sorted(v.items())}
                for k, v in sorted(self.pi_writes.items(), key=lambda p: p[0].key())
            },
            "deleted": [str(x) for x in sorted(self.deleted, key=lambda x: x.key())],
            "re": {
                str(k): str(v) for k, v in sorted(self.re.items(), key=lambda p: p[0].key())
            },
        }
        return json.dumps(doc, separators=(",", ":"), ensure_ascii=False)


def resolve(delta: Delta, x: ObjectId):
    """Follow the replacement map to its fixpoint.

    Returns the terminal object id, or DELETED when that terminal is in
    the deleted set. Pure in (delta, x); idempotent on live results.
    """
    seen: set[ObjectId] = set()
    while x in delta.re:
        if x in seen:
            raise EngineFault(f"replacement cycle through {x}")
        seen.add(x)
        x = delta.re[x]
    return DELETED if x in delta.deleted else x


@dataclass(frozen=True, slots=True)
class TraceEntry:
    rule: str
    entry: ObjectId
    status: str  # fired | skipped
    reason: str = ""

    def line(self) -> str:
        return f"{self.rule},{self.entry},{self.status},{self.reason}"


def trace_to_text(trace: list[TraceEntry]) -> str:
    return "\n".join(t.line() for t in trace) + ("\n" if trace else "")


# ---------------------------------------------------------------------------
# Expression and condition evaluation, reading through the delta


class _EvalContext:
    def __init__(self, graph: GsmGraph, delta: Delta):
        self.graph = graph
        self.delta = delta
        self._new_edge_by_id = {}

    def _live(self, x: ObjectId | None):
        if x is None:
            return None
        return resolve(self.delta, x)

    def ell(self, x: ObjectId) -> list[str]:
        override = self.delta.ell_sets.get(x)
        if override is not None:
            return override
        if self.delta.is_new_node(x):
            return []
        return self.graph.node(x.local).ell

    def xi(self, x: ObjectId) -> list[str]:
        base = [] if self.delta.is_new_node(x) else list(self.graph.node(x.local).xi)
        return base + self.delta.xi_appends.get(x, [])

    def prop(self, x: ObjectId, key: str) -> str | None:
        writes = self.delta.pi_writes.get(x)
        if writes is not None and key in writes:
            return writes[key]
        if self.delta.is_new_node(x):
            return None
        return self.graph.node(x.local).pi.get(key)

    def label(self, x: ObjectId) -> str:
        if x.kind == EDGE:
            if x.local >= RESERVED_ID_BASE:
                if not self._new_edge_by_id:
                    self._new_edge_by_id = {e.id: e for e in self.delta.new_edges}
                return self._new_edge_by_id[x].label
            return self.graph.edge(x.local).label
        ell = self.ell(x)
        return ell[0] if ell else ""


def _eval_expr(ctx: _EvalContext, env: dict[str, ObjectId | None], e: Expr, where: str) -> str | None:
    if isinstance(e, StrLit):
        return e.value
    if isinstance(e, Concat):
        left = _eval_expr(ctx, env, e.left, where)
        right = _eval_expr(ctx, env, e.right, where)
        if left is None or right is None:
            return None
        return left + right
    target = env.get(e.var)
    if target is None:
        return None
    live = resolve(ctx.delta, target)
    if live is DELETED:
        raise EngineFault(f"{where}: expression reads deleted object {target}")
    assert isinstance(live, ObjectId)
    if isinstance(e, XiOf):
        return " ".join(ctx.xi(live))
    if isinstance(e, LabelOf):
        return ctx.label(live)
    return ctx.prop(live, e.key)


def _eval_cond(ctx: _EvalContext, env: dict[str, ObjectId | None], c: Cond, where: str) -> bool:
    if isinstance(c, Bound):
        return env.get(c.var) is not None
    if isinstance(c, Not):
        return not _eval_cond(ctx, env, c.inner, where)
    if isinstance(c, And):
        return _eval_cond(ctx, env, c.left, where) and _eval_cond(ctx, env, c.right, where)
    if isinstance(c, Or):
        return _eval_cond(ctx, env, c.left, where) or _eval_cond(ctx, env, c.right, where)
    if isinstance(c, EllContains):
        target = env.get(c.var)
        value = _eval_expr(ctx, env, c.value, where)
        if target is None or value is None:
            return False
        live = resolve(ctx.delta, target)
        if live is DELETED:
            raise EngineFault(f"{where}: condition reads deleted object {target}")
        assert isinstance(live, ObjectId)
        return value in ctx.ell(live)
    # comparison; anything touching NULL is false, bound() is the escape hatch
    left = _eval_expr(ctx, env, c.left, where)
    right = _eval_expr(ctx, env, c.right, where)
    if left is None or right is None:
        return False
    if c.op == "=":
        return left == right
    if c.op == "!=":
        return left != right
    try:
        lnum, rnum = float(left), float(right)
    except ValueError:
        return False
    if c.op == "<":
        return lnum < rnum
    if c.op == "<=":
        return lnum <= rnum
    if c.op == ">":
        return lnum > rnum
    return lnum >= rnum


# ---------------------------------------------------------------------------
# Production execution


def apply_op(
    delta: Delta,
    bindings: dict[str, ObjectId | None],
    op,
    *,
    graph: GsmGraph,
    deferred: list[ObjectId],
    where: str = "rule",
) -> None:
    """Run one production operation against the delta.

    ``bindings`` maps pattern and prior ``new`` variables to live objects;
    an operation touching a NULL binding (or an expression evaluating to
    NULL) is skipped. Deletions are queued on ``deferred``; the caller
    applies them when the instance ends.
    """
    ctx = _EvalContext(graph, delta)

    if isinstance(op, NewNode):
        bindings[op.var] = delta.fresh_node()
        return

    def live(var: str) -> ObjectId | None:
        x = bindings.get(var)
        if x is None:
            return None
        r = resolve(delta, x)
        if r is DELETED:
            raise EngineFault(f"{where}: operation targets deleted object {x}")
        assert isinstance(r, ObjectId)
        return r

    if isinstance(op, SetLabel):
        target = live(op.var)
        value = _eval_expr(ctx, bindings, op.value, where)
        if target is None or value is None:
            return
        delta.ell_sets[target] = [value]
    elif isinstance(op, AppendXi):
        target = live(op.var)
        value = _eval_expr(ctx, bindings, op.value, where)
        if target is None or value is None:
            return
        delta.xi_appends.setdefault(target, []).append(value)
    elif isinstance(op, SetProp):
        target = live(op.var)
        key = _eval_expr(ctx, bindings, op.key, where)
        value = _eval_expr(ctx, bindings, op.value, where)
        if target is None or key is None or value is None:
            return
        delta.pi_writes.setdefault(target, {})[key] = value
    elif isinstance(op, NewEdge):
        src = live(op.src_var)
        dst = live(op.dst_var)
        label = _eval_expr(ctx, bindings, op.label, where)
        if src is None or dst is None or label is None:
            return
        delta.fresh_edge(src, dst, label)
    elif isinstance(op, (DelNode, DelEdge)):
        target = live(op.var)
        if target is None:
            return
        deferred.append(target)
    elif isinstance(op, Replace):
        old = live(op.old)
        new = live(op.new)
        if old is None or new is None:
            return
        if old == new:
            return
        probe = new
        while probe in delta.re:
            probe = delta.re[probe]
            if probe == old:
                raise EngineFault(f"{where}: replacement of {old} with {new} closes a cycle")
        delta.re[old] = new
        delta.deleted.discard(new)
    else:
        raise EngineFault(f"{where}: unknown operation {op!r}")


def _apply_deferred(delta: Delta, deferred: list[ObjectId]) -> None:
    # A replacement target is alive by definition; deleting it is undone.
    targets = set(delta.re.values())
    for x in deferred:
        if x not in targets:
            delta.deleted.add(x)


def _fire_morphism(
    store: ColumnarStore,
    graph: GsmGraph,
    delta: Delta,
    rule: Rule,
    entry: ObjectId,
    outer: tuple,
    nests: tuple,
    matches: RuleMatches,
    trace: list[TraceEntry],
) -> None:
    table = matches.table
    where = f"rule {rule.name} at {entry}"

    bindings: dict[str, ObjectId | None] = {}
    dead = False
    for var, value in zip(table.outer_header, outer):
        if value is None:
            bindings[var] = None
            continue
        live = resolve(delta, value)
        if live is DELETED:
            dead = True
            break
        bindings[var] = live
    resolved_nests: list[list[dict[str, ObjectId | None]]] = []
    if not dead:
        for header, nest_rows in zip(table.nest_headers, nests):
            resolved_rows: list[dict[str, ObjectId | None]] = []
            for row in nest_rows:
                resolved: dict[str, ObjectId | None] = {}
                for var, value in zip(header, row):
                    if value is None:
                        resolved[var] = None
                        continue
                    live = resolve(delta, value)
                    if live is DELETED:
                        dead = True
                        break
                    resolved[var] = live
                if dead:
                    break
                resolved_rows.append(resolved)
            if dead:
                break
            resolved_nests.append(resolved_rows)
    if dead:
        trace.append(TraceEntry(rule.name, entry, "skipped", "deleted-binding"))
        return

    ctx = _EvalContext(graph, delta)
    if rule.condition is not None and not _eval_cond(ctx, bindings, rule.condition, where):
        trace.append(TraceEntry(rule.name, entry, "skipped", "condition"))
        return

    nest_of_var = {
        var: k for k, header in enumerate(table.nest_headers) for var in header
    }
    deferred: list[ObjectId] = []
    for op in rule.ops:
        touched_nests = {nest_of_var[v] for v in op_vars(op) if v in nest_of_var}
        if not touched_nests:
            apply_op(delta, bindings, op, graph=graph, deferred=deferred, where=where)
            continue
        k = touched_nests.pop()
        for row_bindings in resolved_nests[k]:
            merged = dict(bindings)
            merged.update(row_bindings)
            apply_op(delta, merged, op, graph=graph, deferred=deferred, where=where)
    _apply_deferred(delta, deferred)
    trace.append(TraceEntry(rule.name, entry, "fired", ""))


def rewrite_graph(
    store: ColumnarStore,
    graph_id: int,
    ruleset: RuleSet,
    matches: dict[str, RuleMatches],
) -> tuple[Delta, list[TraceEntry]]:
    """Visit the graph's nodes in reverse topological order and fire every
    applicable morphism, accumulating effects in a fresh delta."""
    graph = store.graphs[graph_id]
    if len(graph.nodes) >= RESERVED_ID_BASE or len(graph.edges) >= RESERVED_ID_BASE:
        raise EngineFault(f"graph {graph_id} exceeds the reserved fresh-id range")
    delta = Delta(graph_id)
    trace: list[TraceEntry] = []
    for local in reversed(store.vtopo[graph_id]):
        entry = node_id(graph_id, local)
        for rule in ruleset:
            rm = matches[rule.name]
            block = rm.index.get(entry)
            if block is None:
                continue
            for outer, nests in rm.table.rows[block[0]:block[1]]:
                _fire_morphism(store, graph, delta, rule, entry, outer, nests, rm, trace)
    return delta, trace
