from __future__ import annotations

import pytest

from dagrules import (
    Delta,
    MaterialiseCycleError,
    from_conllu,
    index_collection,
    match_ruleset,
    materialise,
    node_id,
    parse_graph_collection,
    parse_rules,
    rewrite_graph,
    run_collection,
    serialize_graph,
    validate_acyclic,
)
from dagrules.materialize import provenance_to_text

from conftest import FIXTURES, RULES, build_graph, component_count


def rewrite(graph, rules_text):
    store = index_collection([graph])
    ruleset = parse_rules(rules_text)
    matches = match_ruleset(store, graph.id, ruleset)
    delta, _ = rewrite_graph(store, graph.id, ruleset, matches)
    return materialise(store.graphs[graph.id], delta)


def test_empty_delta_identity():
    g = build_graph(3, [(0, 1, "a"), (1, 2, "b")], ells={0: ["x"]}, pis={1: {"k": "v"}}, root=0)
    out, prov = materialise(g, Delta(0))
    assert out == g
    assert prov == {**{n.id: n.id.local for n in g.nodes}, **{e.id: e.id.local for e in g.edges}}


def test_simple_sentence_materialises_to_one_component():
    (g,) = parse_graph_collection((FIXTURES / "alice_bob.gsm").read_text())
    out, prov = rewrite(g, (RULES / "compact_deps.gqr").read_text())
    assert len(out.nodes) == 4
    assert len(out.edges) == 3
    assert component_count(out) == 1
    assert validate_acyclic(out) is None
    labels = sorted(e.label for e in out.edges)
    assert labels == ["orig", "orig", "play"]
    (entity,) = [n for n in out.nodes if n.ell == ["entity"]]
    assert entity.xi == ["Alice", "Bob"]


def test_complex_sentence_single_component():
    (g,) = from_conllu((FIXTURES / "complex.conllu").read_text())
    out, _ = rewrite(g, (RULES / "compact_deps.gqr").read_text())
    assert component_count(out) == 1
    assert len(out.nodes) == 22
    assert len(out.edges) == 21
    assert validate_acyclic(out) is None
    # deleted machinery stays gone
    forms = [n.xi[0] for n in out.nodes if n.xi]
    assert "and" not in forms and "or" not in forms and "either" not in forms


def test_provenance_excludes_deleted_objects():
    (g,) = parse_graph_collection((FIXTURES / "alice_bob.gsm").read_text())
    out, prov = rewrite(g, (RULES / "compact_deps.gqr").read_text())
    old_node_ids = {oid.local for oid in prov if oid.kind == "node"}
    assert 1 not in old_node_ids  # "and" was deleted unreplaced
    assert 3 not in old_node_ids  # the verb was deleted unreplaced
    # new nodes appear exactly once, from the reserved range
    new = [oid for oid in prov if oid.local >= 1_000_000 and oid.kind == "node"]
    assert len(new) == 1
    # map is a bijection onto the output per kind
    node_images = sorted(v for k, v in prov.items() if k.kind == "node")
    assert node_images == list(range(len(out.nodes)))


def test_untouched_nodes_keep_content():
    (g,) = parse_graph_collection((FIXTURES / "alice_bob.gsm").read_text())
    out, prov = rewrite(g, (RULES / "compact_deps.gqr").read_text())
    cricket_new = prov[node_id(0, 4)]
    assert out.node(cricket_new).pi == g.node(4).pi
    assert out.node(cricket_new).ell == g.node(4).ell
    assert out.node(cricket_new).xi == g.node(4).xi


def test_root_survives_or_drops():
    g = build_graph(2, [(0, 1, "a")], root=0)
    out, _ = rewrite(g, 'rule r { (X)-["a"]->(Y) entry X rewrite del node Y; }')
    assert out.root is not None and out.root.local == 0
    out2, _ = rewrite(g, 'rule r { (X)-["a"]->(Y) entry X rewrite del node X; }')
    assert out2.root is None


def test_introduced_cycle_reported():
    g = build_graph(2, [(0, 1, "a")])
    with pytest.raises(MaterialiseCycleError) as exc:
        rewrite(g, 'rule r { (X)-["a"]->(Y) entry X rewrite edge (Y)-["up"]->(X); }')
    assert exc.value.witness[0] == exc.value.witness[-1]


def test_duplicate_edges_kept_distinct():
    g = build_graph(2, [(0, 1, "a")])
    out, _ = rewrite(
        g,
        'rule r { (X)-["a"]->(Y) entry X rewrite edge (X)-["a"]->(Y); }',
    )
    assert len(out.edges) == 2
    assert [(e.src.local, e.dst.local, e.label) for e in out.edges] == [(0, 1, "a")] * 2


def test_replaced_node_keeps_orig_edge_unredirected():
    # an edge created before the replacement keeps pointing at the old node
    g = build_graph(2, [(0, 1, "conj")], xis={0: ["z"], 1: ["h"]})
    rules_text = """
    rule c {
      (Z)-[e:"conj"]->(*H)
      entry Z
      rewrite new N; edge (N)-["orig"]->(Z); del edge e; replace Z with N;
    }
    """
    out, prov = rewrite(g, rules_text)
    orig = [e for e in out.edges if e.label == "orig"]
    assert len(orig) == 1
    assert orig[0].dst.local == prov[node_id(0, 0)]


def test_output_reloads_through_serializer():
    (g,) = parse_graph_collection((FIXTURES / "alice_bob.gsm").read_text())
    out, _ = rewrite(g, (RULES / "compact_deps.gqr").read_text())
    (back,) = parse_graph_collection(serialize_graph(out))
    assert back == out


def test_provenance_text_format():
    (g,) = parse_graph_collection((FIXTURES / "alice_bob.gsm").read_text())
    _, prov = rewrite(g, (RULES / "compact_deps.gqr").read_text())
    lines = provenance_to_text(prov).splitlines()
    assert lines[0] == "node,0,0"
    assert all(len(line.split(",")) == 3 for line in lines)
    assert "node,1000000,3" in lines


def test_chained_collections_reindex():
    # materialised output feeds straight back into the loader and store
    (g,) = parse_graph_collection((FIXTURES / "alice_bob.gsm").read_text())
    ruleset = parse_rules((RULES / "compact_deps.gqr").read_text())
    _, runs, _ = run_collection([g], ruleset)
    again = index_collection([runs[0].output])
    assert len(again.activity) == 4
