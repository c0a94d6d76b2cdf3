"""Pattern evaluation as relational joins over the columnar store.

One scan per distinct edge-atom signature feeds flat morphism tables whose
header lists the pattern's node and edge variables and whose rows are one
binding each. Required atoms combine by natural equi-join (smallest table
first), optional atom groups by left outer join with NULL padding, and
aggregated destinations are folded into nested sub-tables by grouping on
the non-descendant variables. The final table is sorted on the entry
variable and block-indexed by entry object.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import product

from .model import ObjectId, edge_id, node_id
from .rules import EdgeAtom, Pattern, Rule, RuleSet, optional_groups
from .store import ColumnarStore

Row = tuple[ObjectId | None, ...]

NULL_MARK = "⊥"  # printed for unmatched optional bindings


def _cell_key(cell: ObjectId | None) -> tuple:
    return (1,) if cell is None else (0,) + cell.key()


def row_key(row: Row) -> tuple:
    return tuple(_cell_key(c) for c in row)


@dataclass
class FlatMorphismTable:
    """Relational morphism table: one row per match, NULL only on optionals."""

    header: tuple[str, ...]
    rows: list[Row]

    def column(self, var: str) -> int:
        return self.header.index(var)

    def as_binding_set(self) -> set[frozenset[tuple[str, ObjectId | None]]]:
        return {frozenset(zip(self.header, row)) for row in self.rows}


@dataclass
class NestedMorphismTable:
    """Morphism table with per-aggregation nested sub-tables.

    ``rows[i]`` pairs an outer binding with one tuple of nested rows per
    aggregated variable, aligned with ``nest_headers``.
    """

    outer_header: tuple[str, ...]
    agg_vars: tuple[str, ...]
    nest_headers: tuple[tuple[str, ...], ...]
    rows: list[tuple[Row, tuple[tuple[Row, ...], ...]]]

    def column(self, var: str) -> int:
        return self.outer_header.index(var)


class PatternCache:
    """Per-graph scan memo: each distinct atom signature hits PhiTables once."""

    def __init__(self, store: ColumnarStore, graph: int):
        self.store = store
        self.graph = graph
        self.hits = 0
        self.misses = 0
        self._results: dict[tuple, list[tuple[int, int, int]]] = {}

    def scan(self, labels: tuple[str, ...], src_label: str | None = None) -> list[tuple[int, int, int]]:
        key = (labels, src_label)
        cached = self._results.get(key)
        if cached is not None:
            self.hits += 1
            return cached
        rows: list[tuple[int, int, int]] = []
        for lam in labels:
            for r in self.store.scan_edges(self.graph, lam, src_label):
                rows.append((r.src, r.edge, r.dst))
        self._results[key] = rows
        self.misses += 1
        return rows


def _atom_signature(atom: EdgeAtom) -> tuple[str, ...]:
    return tuple(sorted(set(atom.labels)))


def _canonical(table: FlatMorphismTable) -> FlatMorphismTable:
    table.rows = sorted(set(table.rows), key=row_key)
    return table


def scan_atom(
    store: ColumnarStore, graph: int, atom: EdgeAtom, cache: PatternCache | None = None
) -> FlatMorphismTable:
    """Bind one edge atom against a graph.

    Header is (src, edge?, dst) with repeated variables collapsed; rows come
    from the PhiTables of the atom's label disjunction.
    """
    if cache is None:
        cache = PatternCache(store, graph)
    raw = cache.scan(_atom_signature(atom))

    slots = [(atom.src_var, 0), (atom.dst_var, 2)]
    if atom.edge_var is not None:
        slots.insert(1, (atom.edge_var, 1))
    header: list[str] = []
    positions: dict[str, list[int]] = {}
    for var, pos in slots:
        positions.setdefault(var, []).append(pos)
        if var not in header:
            header.append(var)

    def make(pos: int, triple: tuple[int, int, int]) -> ObjectId:
        if pos == 1:
            return edge_id(graph, triple[1])
        return node_id(graph, triple[0] if pos == 0 else triple[2])

    rows: list[Row] = []
    for triple in raw:
        cells: list[ObjectId | None] = []
        ok = True
        for var in header:
            values = {make(p, triple) for p in positions[var]}
            if len(values) != 1:
                ok = False
                break
            cells.append(values.pop())
        if ok:
            rows.append(tuple(cells))
    return _canonical(FlatMorphismTable(tuple(header), rows))


def _natural_join(a: FlatMorphismTable, b: FlatMorphismTable) -> FlatMorphismTable:
    shared = [v for v in a.header if v in b.header]
    b_extra = [v for v in b.header if v not in a.header]
    header = a.header + tuple(b_extra)
    a_idx = [a.column(v) for v in shared]
    b_idx = [b.column(v) for v in shared]
    b_extra_idx = [b.column(v) for v in b_extra]

    buckets: dict[tuple, list[Row]] = {}
    for row in b.rows:
        buckets.setdefault(tuple(row[i] for i in b_idx), []).append(row)
    rows: list[Row] = []
    for row in a.rows:
        for match in buckets.get(tuple(row[i] for i in a_idx), ()):
            rows.append(row + tuple(match[i] for i in b_extra_idx))
    return _canonical(FlatMorphismTable(header, rows))


def join_required(tables: list[FlatMorphismTable]) -> FlatMorphismTable:
    """Equi-join of the required atoms' tables, ascending cardinality first
    (declaration order on ties; the row set is order-independent)."""
    if not tables:
        return FlatMorphismTable((), [])
    ordered = sorted(tables, key=lambda t: len(t.rows))
    acc = ordered[0]
    for t in ordered[1:]:
        acc = _natural_join(acc, t)
    return _canonical(acc)


def join_optional(required: FlatMorphismTable, opt: FlatMorphismTable) -> FlatMorphismTable:
    """Left outer join: every required row survives, unmatched optional
    variables become NULL, matched rows multiply per binding."""
    shared = [v for v in required.header if v in opt.header]
    extra = [v for v in opt.header if v not in required.header]
    header = required.header + tuple(extra)
    r_idx = [required.column(v) for v in shared]
    o_idx = [opt.column(v) for v in shared]
    extra_idx = [opt.column(v) for v in extra]

    buckets: dict[tuple, list[Row]] = {}
    for row in opt.rows:
        buckets.setdefault(tuple(row[i] for i in o_idx), []).append(row)
    padding: Row = tuple(None for _ in extra)
    rows: list[Row] = []
    for row in required.rows:
        matches = buckets.get(tuple(row[i] for i in r_idx))
        if matches:
            for match in matches:
                rows.append(row + tuple(match[i] for i in extra_idx))
        else:
            rows.append(row + padding)
    return _canonical(FlatMorphismTable(header, rows))


def _distinct_nodes_only(table: FlatMorphismTable, pattern: Pattern) -> FlatMorphismTable:
    node_idx = [table.column(v) for v in pattern.node_vars() if v in table.header]
    rows = []
    for row in table.rows:
        bound = [row[i] for i in node_idx if row[i] is not None]
        if len(bound) == len(set(bound)):
            rows.append(row)
    return FlatMorphismTable(table.header, rows)


def evaluate_pattern(
    store: ColumnarStore,
    graph: int,
    pattern: Pattern,
    cache: PatternCache | None = None,
    mode: str = "homomorphic",
) -> FlatMorphismTable:
    """Scan + equi-joins + left joins for one pattern, before nesting."""
    if cache is None:
        cache = PatternCache(store, graph)
    required = [scan_atom(store, graph, a, cache) for a in pattern.required_atoms]
    acc = join_required(required)
    for group in optional_groups(pattern):
        tables = [scan_atom(store, graph, a, cache) for a in group]
        group_table = join_required(tables) if len(tables) > 1 else tables[0]
        acc = join_optional(acc, group_table)
    if mode == "isomorphic":
        acc = _distinct_nodes_only(acc, pattern)
    return _canonical(acc)


def nest(table: FlatMorphismTable, pattern: Pattern) -> NestedMorphismTable:
    """Group by the variables outside every aggregated subtree and pack the
    descendant bindings into per-aggregation nested tables.

    Without aggregated variables the result is the trivial nesting of the
    input. Flattening a nested table restores the flat row multiset.
    """
    agg_vars = tuple(pattern.aggregated_vars())
    nested_sets = [pattern.descendant_vars(h) for h in agg_vars]
    all_nested = set().union(*nested_sets) if nested_sets else set()

    outer_header = tuple(v for v in table.header if v not in all_nested)
    nest_headers = tuple(
        tuple(v for v in table.header if v in ns) for ns in nested_sets
    )
    outer_idx = [table.column(v) for v in outer_header]
    nest_idx = [[table.column(v) for v in nh] for nh in nest_headers]

    if not agg_vars:
        rows = [(row, ()) for row in table.rows]
        return NestedMorphismTable(outer_header, (), (), rows)

    groups: dict[Row, list[set[Row]]] = {}
    order: list[Row] = []
    for row in table.rows:
        okey = tuple(row[i] for i in outer_idx)
        bucket = groups.get(okey)
        if bucket is None:
            bucket = [set() for _ in agg_vars]
            groups[okey] = bucket
            order.append(okey)
        for k, idxs in enumerate(nest_idx):
            bucket[k].add(tuple(row[i] for i in idxs))

    rows_out: list[tuple[Row, tuple[tuple[Row, ...], ...]]] = []
    for okey in sorted(order, key=row_key):
        nests = tuple(tuple(sorted(s, key=row_key)) for s in groups[okey])
        rows_out.append((okey, nests))
    return NestedMorphismTable(outer_header, agg_vars, nest_headers, rows_out)


def flatten(table: NestedMorphismTable) -> FlatMorphismTable:
    """Inverse of nest: outer rows crossed with their nested rows."""
    header = table.outer_header + tuple(v for nh in table.nest_headers for v in nh)
    rows: list[Row] = []
    for outer, nests in table.rows:
        if not nests:
            rows.append(outer)
            continue
        for combo in product(*nests):
            rows.append(outer + tuple(c for part in combo for c in part))
    return _canonical(FlatMorphismTable(header, rows))


def build_index(table: NestedMorphismTable, entry_var: str) -> dict[ObjectId, tuple[int, int]]:
    """Sort the table on the entry column (then full row key) and map every
    distinct entry object to its contiguous block of rows."""
    col = table.column(entry_var)

    def sort_key(item: tuple[Row, tuple[tuple[Row, ...], ...]]) -> tuple:
        outer, nests = item
        return (_cell_key(outer[col]), row_key(outer), tuple(tuple(row_key(r) for r in nest) for nest in nests))

    table.rows.sort(key=sort_key)
    blocks: dict[ObjectId, tuple[int, int]] = {}
    start = 0
    for i in range(1, len(table.rows) + 1):
        if i == len(table.rows) or table.rows[i][0][col] != table.rows[start][0][col]:
            entry = table.rows[start][0][col]
            assert entry is not None
            blocks[entry] = (start, i)
            start = i
    return blocks


@dataclass
class RuleMatches:
    rule: Rule
    table: NestedMorphismTable
    index: dict[ObjectId, tuple[int, int]]


def match_rule(
    store: ColumnarStore, graph: int, rule: Rule, cache: PatternCache | None = None, mode: str = "homomorphic"
) -> RuleMatches:
    effective = "isomorphic" if (mode == "isomorphic" or rule.all_distinct) else "homomorphic"
    flat = evaluate_pattern(store, graph, rule.pattern, cache, effective)
    nested = nest(flat, rule.pattern)
    index = build_index(nested, rule.pattern.entry_var)
    return RuleMatches(rule, nested, index)


def match_ruleset(
    store: ColumnarStore, graph: int, ruleset: RuleSet, mode: str = "homomorphic"
) -> dict[str, RuleMatches]:
    """Match every rule of the grammar against one graph, sharing scans."""
    cache = PatternCache(store, graph)
    return {rule.name: match_rule(store, graph, rule, cache, mode) for rule in ruleset}


# ---------------------------------------------------------------------------
# Debug dumps


def _cell_text(cell: ObjectId | None) -> str:
    return NULL_MARK if cell is None else str(cell)


def dump_flat(table: FlatMorphismTable) -> str:
    lines = ["|".join(table.header)]
    lines += ["|".join(_cell_text(c) for c in row) for row in table.rows]
    return "\n".join(lines) + "\n"


def dump_nested(table: NestedMorphismTable) -> str:
    head = list(table.outer_header)
    head += ["[" + "|".join(nh) + "]" for nh in table.nest_headers]
    lines = ["|".join(head)]
    for outer, nests in table.rows:
        cells = [_cell_text(c) for c in outer]
        for nested in nests:
            inner = ";".join("|".join(_cell_text(c) for c in row) for row in nested)
            cells.append(f"[{inner}]")
        lines.append("|".join(cells))
    return "\n".join(lines) + "\n"
