from __future__ import annotations

import itertools
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dagrules import (
    FlatMorphismTable,
    PatternCache,
    build_index,
    edge_id,
    enumerate_morphisms_bruteforce,
    evaluate_pattern,
    flatten,
    from_conllu,
    index_collection,
    join_optional,
    join_required,
    match_ruleset,
    nest,
    node_id,
    parse_graph_collection,
    parse_rules,
    scan_atom,
)
from dagrules.matching import dump_flat, dump_nested
from dagrules.rules import EdgeAtom, Pattern

from conftest import FIXTURES, RULES, build_graph
from strategies import random_dag


def atom(src, labels, dst, edge_var=None, optional=False, aggregated=False):
    return EdgeAtom(src, edge_var, tuple(labels), dst, optional, aggregated)


def rows_as_sets(table: FlatMorphismTable):
    return table.as_binding_set()


@pytest.fixture(scope="module")
def match_base_store():
    graphs = parse_graph_collection((FIXTURES / "match_base.gsm").read_text())
    return index_collection(graphs)


@pytest.fixture(scope="module")
def alice_store():
    graphs = parse_graph_collection((FIXTURES / "alice_bob.gsm").read_text())
    return index_collection(graphs)


def test_single_atom_six_morphisms(match_base_store):
    table = scan_atom(match_base_store, 0, atom("a", ["t"], "c", edge_var="b"))
    assert table.header == ("a", "b", "c")
    expected = {
        (node_id(0, 0), edge_id(0, 0), node_id(0, 1)),
        (node_id(0, 0), edge_id(0, 1), node_id(0, 2)),
        (node_id(0, 1), edge_id(0, 2), node_id(0, 2)),
        (node_id(0, 1), edge_id(0, 3), node_id(0, 3)),
        (node_id(0, 2), edge_id(0, 4), node_id(0, 3)),
        (node_id(0, 0), edge_id(0, 5), node_id(0, 4)),
    }
    assert set(table.rows) == expected


def test_label_disjunction_scan():
    g = build_graph(4, [(0, 1, "det"), (2, 3, "poss"), (0, 2, "nsubj")])
    store = index_collection([g])
    table = scan_atom(store, 0, atom("x", ["det", "poss"], "y"))
    assert len(table.rows) == 2


def test_scan_empty_graph():
    store = index_collection([build_graph(0, [])])
    table = scan_atom(store, 0, atom("a", ["t"], "b"))
    assert table.rows == []


def test_repeated_variable_atom_filters():
    g = build_graph(2, [(0, 1, "x")])
    store = index_collection([g])
    table = scan_atom(store, 0, atom("a", ["x"], "a"))
    assert table.header == ("a",)
    assert table.rows == []


def test_join_alice_nsubj_obj(alice_store):
    nsubj = scan_atom(alice_store, 0, atom("V", ["nsubj"], "S"))
    obj = scan_atom(alice_store, 0, atom("V", ["obj"], "O"))
    joined = join_required([nsubj, obj])
    assert len(joined.rows) == 1
    (row,) = joined.rows
    binding = dict(zip(joined.header, row))
    assert binding == {"V": node_id(0, 3), "S": node_id(0, 0), "O": node_id(0, 4)}


def test_join_with_empty_annihilates(alice_store):
    nsubj = scan_atom(alice_store, 0, atom("V", ["nsubj"], "S"))
    empty = scan_atom(alice_store, 0, atom("V", ["zzz"], "W"))
    assert join_required([nsubj, empty]).rows == []


def test_join_self_idempotent(alice_store):
    t = scan_atom(alice_store, 0, atom("V", ["nsubj"], "S", edge_var="e"))
    joined = join_required([t, FlatMorphismTable(t.header, list(t.rows))])
    assert rows_as_sets(joined) == rows_as_sets(t)


def test_left_join_pads_nulls():
    required = FlatMorphismTable(("A",), [(node_id(0, 0),)])
    opt = FlatMorphismTable(("A", "B"), [])
    out = join_optional(required, opt)
    assert out.rows == [(node_id(0, 0), None)]


def test_left_join_multiplies():
    required = FlatMorphismTable(("A",), [(node_id(0, 0),)])
    opt = FlatMorphismTable(
        ("A", "B"),
        [(node_id(0, 0), node_id(0, 1)), (node_id(0, 0), node_id(0, 2))],
    )
    out = join_optional(required, opt)
    assert len(out.rows) == 2


def test_intransitive_verb_gets_null_object():
    graphs = from_conllu(
        "1\ttraffic\ttraffic\tNOUN\t_\t_\t3\tnsubj\t_\t_\n"
        "2\tis\tbe\tAUX\t_\t_\t3\taux\t_\t_\n"
        "3\tflowing\tflow\tVERB\t_\t_\t0\troot\t_\t_\n"
    )
    store = index_collection(graphs)
    pattern = Pattern(
        (atom("V", ["nsubj"], "S"), atom("V", ["obj", "dobj"], "O", edge_var="o", optional=True)),
        entry_var="V",
    )
    table = evaluate_pattern(store, 0, pattern)
    assert len(table.rows) == 1
    binding = dict(zip(table.header, table.rows[0]))
    assert binding["O"] is None and binding["o"] is None
    assert binding["S"] == node_id(0, 0)


def test_nest_alice_conjuncts(alice_store):
    rs = parse_rules((RULES / "compact_deps.gqr").read_text())
    coalesce = rs.rules[2]
    flat = evaluate_pattern(alice_store, 0, coalesce.pattern)
    nested = nest(flat, coalesce.pattern)
    assert nested.agg_vars == ("H",)
    assert len(nested.rows) == 1  # one conjunction head (Alice)
    outer, nests = nested.rows[0]
    binding = dict(zip(nested.outer_header, outer))
    assert binding["Z"] == node_id(0, 0)
    assert len(nests[0]) == 1  # a single conjunct row: Bob with its cc
    nested_binding = dict(zip(nested.nest_headers[0], nests[0][0]))
    assert nested_binding["H"] == node_id(0, 2)
    assert nested_binding["C"] == node_id(0, 1)


def test_nest_trivial_without_aggregation(alice_store):
    pattern = Pattern((atom("V", ["nsubj"], "S"),), entry_var="V")
    flat = evaluate_pattern(alice_store, 0, pattern)
    nested = nest(flat, pattern)
    assert nested.agg_vars == ()
    assert [outer for outer, _ in nested.rows] == flat.rows


def test_nest_complex_sentence_groups():
    graphs = from_conllu((FIXTURES / "complex.conllu").read_text())
    store = index_collection(graphs)
    rs = parse_rules((RULES / "compact_deps.gqr").read_text())
    coalesce = rs.rules[2]
    nested = nest(evaluate_pattern(store, 0, coalesce.pattern), coalesce.pattern)
    # one outer row per conjunction head: Matt, Alice, Carl(15), play
    heads = {dict(zip(nested.outer_header, outer))["Z"].local for outer, _ in nested.rows}
    assert heads == {0, 6, 14, 11}
    sizes = {
        dict(zip(nested.outer_header, outer))["Z"].local: len(nests[0])
        for outer, nests in nested.rows
    }
    assert sizes == {0: 1, 6: 2, 14: 1, 11: 1}


def test_flatten_inverts_nest(alice_store):
    rs = parse_rules((RULES / "compact_deps.gqr").read_text())
    coalesce = rs.rules[2]
    flat = evaluate_pattern(alice_store, 0, coalesce.pattern)
    nested = nest(flat, coalesce.pattern)
    assert rows_as_sets(flatten(nested)) == rows_as_sets(flat)


def test_build_index_blocks():
    t = nest(
        FlatMorphismTable(
            ("E", "X"),
            [
                (node_id(0, 7), node_id(0, 1)),
                (node_id(0, 7), node_id(0, 2)),
                (node_id(0, 9), node_id(0, 3)),
            ],
        ),
        Pattern((atom("E", ["x"], "X"),), entry_var="E"),
    )
    blocks = build_index(t, "E")
    assert blocks == {node_id(0, 7): (0, 2), node_id(0, 9): (2, 3)}


def test_build_index_empty():
    t = nest(FlatMorphismTable(("E",), []), Pattern((atom("E", ["x"], "Y"),), entry_var="E"))
    assert build_index(t, "E") == {}


def test_two_determiner_blocks():
    graphs = from_conllu(
        "1\tthe\tthe\tDET\t_\t_\t2\tdet\t_\t_\n"
        "2\tcat\tcat\tNOUN\t_\t_\t3\tnsubj\t_\t_\n"
        "3\tsaw\tsee\tVERB\t_\t_\t0\troot\t_\t_\n"
        "4\ta\ta\tDET\t_\t_\t5\tdet\t_\t_\n"
        "5\tdog\tdog\tNOUN\t_\t_\t3\tobj\t_\t_\n"
    )
    store = index_collection(graphs)
    rs = parse_rules((RULES / "compact_deps.gqr").read_text())
    matches = match_ruleset(store, 0, rs)
    blocks = matches["inject"].index
    assert blocks == {node_id(0, 1): (0, 1), node_id(0, 4): (1, 2)}


def test_pattern_cache_scans_once(alice_store):
    text = """
    rule r1 { (A)-["conj"]->(B) entry A rewrite }
    rule r2 { (X)-["conj"]->(Y) entry X rewrite }
    rule r3 { (X)-["conj"]->(Y) (X)-["cc"]->(Z) entry X rewrite }
    """
    rs = parse_rules(text)
    cache = PatternCache(alice_store, 0)
    for rule in rs:
        for a in rule.pattern.atoms:
            scan_atom(alice_store, 0, a, cache)
    # "conj" scanned once despite three uses; "cc" once
    assert cache.misses == 2
    assert cache.hits == 2


def test_match_ruleset_shares_cache_row_counts(alice_store):
    rs = parse_rules((RULES / "compact_deps.gqr").read_text())
    matches = match_ruleset(alice_store, 0, rs)
    assert {name: len(m.table.rows) for name, m in matches.items()} == {
        "inject": 0,
        "binverb": 1,
        "coalesce": 1,
    }


def test_homomorphic_rows_are_valid_images(match_base_store):
    pattern = Pattern(
        (atom("a", ["t"], "b", edge_var="e1"), atom("b", ["t"], "c", edge_var="e2")),
        entry_var="a",
    )
    table = evaluate_pattern(match_base_store, 0, pattern)
    g = match_base_store.graphs[0]
    for row in table.rows:
        binding = dict(zip(table.header, row))
        for src_var, edge_var, dst_var in (("a", "e1", "b"), ("b", "e2", "c")):
            e = g.edge(binding[edge_var].local)
            assert e.src == binding[src_var]
            assert e.dst == binding[dst_var]
            assert e.label == "t"


def test_join_order_invariance():
    rng = random.Random(7)
    g = random_dag(rng, max_nodes=7, max_edges=11)
    store = index_collection([g])
    atoms = [
        atom("a", ["a", "b"], "b", edge_var="e1"),
        atom("b", ["c"], "c"),
        atom("a", ["c"], "d"),
    ]
    tables = [scan_atom(store, 0, a) for a in atoms]
    reference = rows_as_sets(join_required(tables))
    for perm in itertools.permutations(tables):
        permuted = join_required(list(perm))
        assert rows_as_sets(permuted) == reference


PATTERNS = [
    Pattern((atom("a", ["a"], "b", edge_var="e"),), entry_var="a"),
    Pattern((atom("a", ["a"], "b"), atom("b", ["b"], "c")), entry_var="a"),
    Pattern(
        (atom("a", ["a", "b"], "b"), atom("b", ["c"], "c", edge_var="oc", optional=True)),
        entry_var="a",
    ),
    Pattern(
        (
            atom("a", ["a"], "b"),
            atom("a", ["b"], "c"),
            atom("b", ["c"], "d"),
            atom("c", ["a"], "d"),
        ),
        entry_var="a",
    ),
    Pattern(
        (
            atom("a", ["a"], "b"),
            atom("b", ["b"], "c", optional=True),
            atom("b", ["c"], "d", edge_var="od", optional=True),
        ),
        entry_var="a",
    ),
]


@pytest.mark.parametrize("pattern_idx", range(len(PATTERNS)))
def test_engine_matches_oracle_sample(pattern_idx):
    pattern = PATTERNS[pattern_idx]
    for seed in range(25):
        g = random_dag(random.Random(seed * 977 + pattern_idx))
        store = index_collection([g])
        engine = rows_as_sets(evaluate_pattern(store, 0, pattern))
        oracle = enumerate_morphisms_bruteforce(g, pattern, "homomorphic")
        assert engine == oracle, f"seed={seed}"


@pytest.mark.parametrize("pattern_idx", range(len(PATTERNS)))
def test_isomorphic_mode_matches_oracle(pattern_idx):
    pattern = PATTERNS[pattern_idx]
    for seed in range(10):
        g = random_dag(random.Random(seed * 31 + 5 * pattern_idx))
        store = index_collection([g])
        engine = rows_as_sets(evaluate_pattern(store, 0, pattern, mode="isomorphic"))
        oracle = enumerate_morphisms_bruteforce(g, pattern, "isomorphic")
        assert engine == oracle, f"seed={seed}"


@given(seed=st.integers(0, 2**32 - 1))
@settings(max_examples=60, deadline=None)
def test_flatten_nest_identity_property(seed):
    g = random_dag(random.Random(seed))
    store = index_collection([g])
    pattern = Pattern(
        (atom("z", ["a"], "h", edge_var="c", aggregated=True),
         atom("h", ["b"], "k", optional=True)),
        entry_var="z",
    )
    flat = evaluate_pattern(store, 0, pattern)
    assert rows_as_sets(flatten(nest(flat, pattern))) == rows_as_sets(flat)


def test_dump_flat_golden(alice_store):
    t = scan_atom(alice_store, 0, atom("V", ["nsubj"], "S", edge_var="e"))
    assert dump_flat(t) == "V|e|S\nN0:3|E0:0|N0:0\n"


def test_dump_nested_golden(alice_store):
    rs = parse_rules((RULES / "compact_deps.gqr").read_text())
    coalesce = rs.rules[2]
    nested = nest(evaluate_pattern(alice_store, 0, coalesce.pattern), coalesce.pattern)
    build_index(nested, "Z")
    text = dump_nested(nested)
    assert text.splitlines()[0] == "Z|k2|C2|[c|H|k|C]"
    assert "⊥" in text  # the missing preconjunction prints as NULL
    assert "[E0:2|N0:2|E0:1|N0:1]" in text
