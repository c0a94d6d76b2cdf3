#!/usr/bin/env python3
"""Phase-timing experiment over the shipped sentence fixtures.

Loads each fixture once, repeats the query (match + rewrite) and
materialisation phases N times, and prints mean per-phase milliseconds.
Run from the repository root:

    python3 scripts/bench.py [N]
"""

from __future__ import annotations

import sys
import time
from pathlib import Path

ROOT = Path(__file__).resolve().parent.parent
sys.path.insert(0, str(ROOT / "src"))

from dagrules import from_conllu, index_collection, parse_rules, run_graph  # noqa: E402

FIXTURES = [
    ("simple", ROOT / "fixtures" / "alice_bob.conllu"),
    ("complex", ROOT / "fixtures" / "complex.conllu"),
]


def bench(reps: int) -> None:
    ruleset = parse_rules((ROOT / "rules" / "compact_deps.gqr").read_text())
    print(f"{'fixture':<10} {'load_index':>12} {'querying':>12} {'materialise':>12} {'total':>12}")
    for name, path in FIXTURES:
        t0 = time.perf_counter()
        graphs = from_conllu(path.read_text())
        store = index_collection(graphs)
        load_ms = (time.perf_counter() - t0) * 1000.0

        query, mat = [], []
        for _ in range(reps):
            run = run_graph(store, graphs[0].id, ruleset)
            query.append(run.query_ms)
            mat.append(run.materialise_ms)
        mean_q = sum(query) / reps
        mean_m = sum(mat) / reps
        total = load_ms + mean_q + mean_m
        print(f"{name:<10} {load_ms:>10.3f}ms {mean_q:>10.3f}ms {mean_m:>10.3f}ms {total:>10.3f}ms")


if __name__ == "__main__":
    bench(int(sys.argv[1]) if len(sys.argv) > 1 else 100)
