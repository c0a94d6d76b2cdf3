from __future__ import annotations

from pathlib import Path

import pytest

from dagrules import GsmEdge, GsmGraph, GsmNode, edge_id, node_id

ROOT = Path(__file__).resolve().parent.parent
FIXTURES = ROOT / "fixtures"
RULES = ROOT / "rules"


@pytest.fixture(scope="session")
def fixtures_dir() -> Path:
    return FIXTURES


@pytest.fixture(scope="session")
def rules_dir() -> Path:
    return RULES


@pytest.fixture(scope="session")
def compact_rules_text() -> str:
    return (RULES / "compact_deps.gqr").read_text(encoding="utf-8")


def build_graph(
    n_nodes: int,
    edges: list[tuple[int, int, str]],
    graph_id: int = 0,
    ells: dict[int, list[str]] | None = None,
    pis: dict[int, dict[str, str]] | None = None,
    xis: dict[int, list[str]] | None = None,
    root: int | None = None,
) -> GsmGraph:
    """Small-graph builder for unit tests: edges as (src, dst, label)."""
    ells = ells or {}
    pis = pis or {}
    xis = xis or {}
    nodes = [
        GsmNode(node_id(graph_id, i), ell=list(ells.get(i, [])), xi=list(xis.get(i, [])), pi=dict(pis.get(i, {})))
        for i in range(n_nodes)
    ]
    gsm_edges = [
        GsmEdge(edge_id(graph_id, k), node_id(graph_id, s), node_id(graph_id, d), lab)
        for k, (s, d, lab) in enumerate(edges)
    ]
    return GsmGraph(
        id=graph_id,
        nodes=nodes,
        edges=gsm_edges,
        root=node_id(graph_id, root) if root is not None else None,
    )


def component_count(g: GsmGraph) -> int:
    """Weakly connected components of a graph."""
    adj: dict[int, set[int]] = {i: set() for i in range(len(g.nodes))}
    for e in g.edges:
        adj[e.src.local].add(e.dst.local)
        adj[e.dst.local].add(e.src.local)
    seen: set[int] = set()
    count = 0
    for start in adj:
        if start in seen:
            continue
        count += 1
        stack = [start]
        while stack:
            v = stack.pop()
            if v in seen:
                continue
            seen.add(v)
            stack.extend(adj[v])
    return count
