from __future__ import annotations

from pathlib import Path

import pytest

from dagrules import parse_graph_collection
from dagrules.cli import main

from conftest import FIXTURES, RULES, component_count

ALICE = str(FIXTURES / "alice_bob.gsm")
COMPLEX = str(FIXTURES / "complex.conllu")
COMPACT = str(RULES / "compact_deps.gqr")
EMPTY = str(RULES / "empty.gqr")


def run_cli(tmp_path: Path, *extra: str, graphs: str = ALICE, rules: str = COMPACT,
            fmt: str | None = None) -> tuple[int, Path, Path, Path]:
    tmp_path.mkdir(parents=True, exist_ok=True)
    out = tmp_path / "out.gsm"
    stats = tmp_path / "stats.csv"
    argv = ["--graphs", graphs, "--rules", rules, "--out", str(out), "--stats", str(stats)]
    if fmt:
        argv += ["--format", fmt]
    argv += list(extra)
    code = main(argv)
    return code, out, stats, Path(str(out) + ".prov")


def test_golden_run(tmp_path):
    code, out, stats, prov = run_cli(tmp_path)
    assert code == 0
    (g,) = parse_graph_collection(out.read_text())
    assert component_count(g) == 1
    assert len(g.nodes) == 4 and len(g.edges) == 3
    assert prov.exists()
    header, row, agg = stats.read_text().splitlines()
    assert header == "graph_id,load_index_ms,query_ms,materialise_ms,total_ms"
    assert row.startswith("0,") and agg.startswith("all,")


def test_empty_ruleset_identity(tmp_path):
    code, out, _, _ = run_cli(tmp_path, rules=EMPTY)
    assert code == 0
    assert parse_graph_collection(out.read_text()) == parse_graph_collection(Path(ALICE).read_text())


def test_determinism_two_runs(tmp_path):
    _, out1, _, prov1 = run_cli(tmp_path / "a")
    _, out2, _, prov2 = run_cli(tmp_path / "b")
    assert out1.read_bytes() == out2.read_bytes()
    assert prov1.read_bytes() == prov2.read_bytes()


def test_conllu_format_and_bench(tmp_path):
    code, out, stats, _ = run_cli(tmp_path, "--bench", "5", graphs=COMPLEX, fmt="conllu")
    assert code == 0
    (g,) = parse_graph_collection(out.read_text())
    assert component_count(g) == 1
    lines = stats.read_text().splitlines()
    assert len(lines) == 3  # header, graph 0, aggregate


def test_trace_flag(tmp_path):
    trace = tmp_path / "trace.txt"
    code, *_ = run_cli(tmp_path, "--trace", str(trace))
    assert code == 0
    lines = trace.read_text().splitlines()
    assert "coalesce,N0:0,fired," in lines
    assert "binverb,N0:3,fired," in lines


def test_parallel_matches_sequential(tmp_path):
    import json

    # a two-graph collection: the same sentence twice
    doc = json.loads(Path(ALICE).read_text())
    doc["graphs"].append(json.loads(json.dumps(doc["graphs"][0])))
    doc["graphs"][1]["id"] = 1
    doc_path = tmp_path / "two.gsm"
    doc_path.write_text(json.dumps(doc))
    code1, out1, _, _ = run_cli(tmp_path / "seq", graphs=str(doc_path))
    code2, out2, _, _ = run_cli(tmp_path / "par", "--parallel", graphs=str(doc_path))
    assert code1 == code2 == 0
    assert out1.read_bytes() == out2.read_bytes()
    assert len(parse_graph_collection(out1.read_text())) == 2


def test_stats_to_stdout(tmp_path, capsys):
    out = tmp_path / "o.gsm"
    code = main(["--graphs", ALICE, "--rules", COMPACT, "--out", str(out)])
    assert code == 0
    captured = capsys.readouterr()
    assert captured.out.startswith("graph_id,")


def test_isomorphic_mode_flag(tmp_path):
    code, out, _, _ = run_cli(tmp_path, "--mode", "isomorphic")
    assert code == 0
    (g,) = parse_graph_collection(out.read_text())
    assert component_count(g) == 1


def test_exit_code_missing_file(tmp_path, capsys):
    code = main(["--graphs", str(tmp_path / "nope.gsm"), "--rules", COMPACT])
    assert code == 8
    assert "dagrules" in capsys.readouterr().err


def test_exit_code_bad_graph_json(tmp_path, capsys):
    bad = tmp_path / "bad.gsm"
    bad.write_text("{nope")
    assert main(["--graphs", str(bad), "--rules", COMPACT]) == 3


def test_exit_code_cyclic_graph(tmp_path):
    cyc = tmp_path / "cyc.gsm"
    cyc.write_text(
        '{"graphs":[{"id":0,"nodes":[{"id":0},{"id":1}],"edges":['
        '{"id":0,"src":0,"dst":1,"label":"x"},{"id":1,"src":1,"dst":0,"label":"x"}]}]}'
    )
    assert main(["--graphs", str(cyc), "--rules", COMPACT]) == 4


def test_exit_code_bad_rules(tmp_path):
    bad = tmp_path / "bad.gqr"
    bad.write_text("rule { broken")
    assert main(["--graphs", ALICE, "--rules", str(bad)]) == 5


def test_exit_code_rewrite_cycle(tmp_path):
    rules = tmp_path / "up.gqr"
    rules.write_text('rule up { (X)-["nsubj"]->(Y) entry X rewrite edge (Y)-["up"]->(X); }')
    assert main(["--graphs", ALICE, "--rules", str(rules)]) == 7


def test_usage_error_exit_code():
    with pytest.raises(SystemExit) as exc:
        main(["--graphs"])
    assert exc.value.code == 2
