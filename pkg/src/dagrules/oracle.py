"""Exhaustive reference matcher used to validate the join pipeline.

Plain nested-loop enumeration with no pruning beyond label filters, kept
deliberately independent of the store and of the join machinery so the two
routes can disagree. Only meant for tests on small graphs.
"""

from __future__ import annotations

from itertools import product

from .model import GsmGraph, ObjectId
from .rules import EdgeAtom, Pattern

Binding = dict[str, ObjectId | None]

MAX_NODES = 12


def _edge_candidates(g: GsmGraph, atom: EdgeAtom) -> list:
    wanted = set(atom.labels)
    return [e for e in g.edges if e.label in wanted]


def _consistent(binding: Binding, var: str, value: ObjectId) -> bool:
    return binding.get(var, value) == value


def _assignments(g: GsmGraph, atoms: list[EdgeAtom], fixed: Binding) -> list[Binding]:
    """All bindings extending ``fixed`` that satisfy every atom."""
    results: list[Binding] = []
    candidate_lists = [_edge_candidates(g, a) for a in atoms]
    for combo in product(*candidate_lists):
        binding = dict(fixed)
        ok = True
        for atom, edge in zip(atoms, combo):
            pairs = [(atom.src_var, edge.src), (atom.dst_var, edge.dst)]
            if atom.edge_var is not None:
                pairs.append((atom.edge_var, edge.id))
            for var, value in pairs:
                if not _consistent(binding, var, value):
                    ok = False
                    break
                binding[var] = value
            if not ok:
                break
        if ok:
            results.append(binding)
    return results


def _groups(pattern: Pattern) -> list[list[EdgeAtom]]:
    """Optional atoms grouped by shared variables the required part does
    not bind. Recomputed here on purpose; the oracle trusts nothing."""
    required_vars: set[str] = set()
    for a in pattern.required_atoms:
        required_vars |= {a.src_var, a.dst_var}
        if a.edge_var:
            required_vars.add(a.edge_var)
    groups: list[list[EdgeAtom]] = []
    group_vars: list[set[str]] = []
    for a in pattern.optional_atoms:
        own = ({a.src_var, a.dst_var} | ({a.edge_var} if a.edge_var else set())) - required_vars
        hit = [i for i, gv in enumerate(group_vars) if gv & own]
        if not hit:
            groups.append([a])
            group_vars.append(own)
        else:
            first = hit[0]
            groups[first].append(a)
            group_vars[first] |= own
            for i in reversed(hit[1:]):
                groups[first].extend(groups.pop(i))
                group_vars[first] |= group_vars.pop(i)
    groups.sort(key=lambda grp: pattern.atoms.index(grp[0]))
    return groups


def _named_vars(pattern: Pattern) -> list[str]:
    out: list[str] = []
    for a in pattern.atoms:
        for v in (a.src_var, a.edge_var, a.dst_var):
            if v is not None and v not in out:
                out.append(v)
    return out


def enumerate_morphisms_bruteforce(
    g: GsmGraph, pattern: Pattern, mode: str = "homomorphic"
) -> set[frozenset[tuple[str, ObjectId | None]]]:
    """Every morphism of ``pattern`` into ``g`` as a set of bindings.

    Optional groups contribute NULL-padded rows exactly when no extension
    of that group exists, otherwise every extension. ``isomorphic`` mode
    additionally requires the non-NULL node bindings of a row to be
    pairwise distinct. Guarded to graphs of at most 12 nodes.
    """
    if len(g.nodes) > MAX_NODES:
        raise ValueError(f"oracle limited to {MAX_NODES} nodes, got {len(g.nodes)}")
    if mode not in ("homomorphic", "isomorphic"):
        raise ValueError(f"unknown mode {mode!r}")

    header = _named_vars(pattern)
    node_vars = set(pattern.node_vars())
    groups = _groups(pattern)

    rows: set[frozenset[tuple[str, ObjectId | None]]] = set()
    for base in _assignments(g, list(pattern.required_atoms), {}):
        parts: list[list[Binding]] = []
        for group in groups:
            group_only = {
                v for a in group for v in (a.src_var, a.edge_var, a.dst_var)
                if v is not None and v not in base
            }
            extensions = _assignments(g, group, base)
            if extensions:
                parts.append([{v: ext.get(v) for v in group_only} for ext in extensions])
            else:
                parts.append([{v: None for v in group_only}])
        for combo in product(*parts) if parts else [()]:
            merged: Binding = dict(base)
            for part in combo:
                merged.update(part)
            if mode == "isomorphic":
                bound_nodes = [merged[v] for v in node_vars if merged.get(v) is not None]
                if len(bound_nodes) != len(set(bound_nodes)):
                    continue
            rows.add(frozenset((v, merged.get(v)) for v in header))
    return rows
