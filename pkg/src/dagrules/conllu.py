"""CoNLL-U frontend: dependency-parsed sentences as graphs.

Each sentence block becomes one graph: a node per token (labels and values
hold the surface form; ``upos``, ``lemma`` and the 1-based token position
``idx`` land in the property map) and an edge head -> dependent labelled
with the dependency relation. The token with head 0 becomes the graph
root. Comment lines start with ``#``; blank lines separate sentences.
Multiword token ranges and empty nodes are rejected rather than guessed
at.
"""

from __future__ import annotations

from .model import CycleError, GsmEdge, GsmGraph, GsmNode, edge_id, node_id, validate_acyclic


class ConlluFormatError(ValueError):
    def __init__(self, message: str, line: int):
        self.line = line
        super().__init__(f"line {line}: {message}")


def _parse_sentence(rows: list[tuple[int, list[str]]], graph_id: int) -> GsmGraph:
    tokens: list[tuple[int, str, str, str, int, str]] = []
    for lineno, cols in rows:
        if len(cols) != 10:
            raise ConlluFormatError(f"expected 10 tab-separated columns, found {len(cols)}", lineno)
        raw_id = cols[0]
        if "-" in raw_id or "." in raw_id:
            raise ConlluFormatError(f"multiword/empty token id {raw_id!r} not supported", lineno)
        try:
            tid = int(raw_id)
        except ValueError:
            raise ConlluFormatError(f"bad token id {raw_id!r}", lineno) from None
        try:
            head = int(cols[6])
        except ValueError:
            raise ConlluFormatError(f"bad head {cols[6]!r}", lineno) from None
        tokens.append((tid, cols[1], cols[2], cols[3], head, cols[7]))

    first_line = rows[0][0]
    ids = [t[0] for t in tokens]
    if ids != list(range(1, len(tokens) + 1)):
        raise ConlluFormatError("token ids must be 1..n in order", first_line)

    nodes: list[GsmNode] = []
    for tid, form, lemma, upos, _head, _deprel in tokens:
        nodes.append(GsmNode(
            id=node_id(graph_id, tid - 1),
            ell=[form],
            xi=[form],
            pi={"idx": str(tid), "lemma": lemma, "upos": upos},
        ))

    edges: list[GsmEdge] = []
    root_local: int | None = None
    for tid, _form, _lemma, _upos, head, deprel in tokens:
        if head == 0:
            if root_local is None:
                root_local = tid - 1
            continue
        if head < 0 or head > len(tokens):
            raise ConlluFormatError(f"head {head} out of range for token {tid}", first_line)
        edges.append(GsmEdge(
            id=edge_id(graph_id, len(edges)),
            src=node_id(graph_id, head - 1),
            dst=node_id(graph_id, tid - 1),
            label=deprel,
        ))
    g = GsmGraph(
        id=graph_id,
        nodes=nodes,
        edges=edges,
        root=node_id(graph_id, root_local) if root_local is not None else None,
    )
    witness = validate_acyclic(g)
    if witness is not None:
        raise CycleError(graph_id, witness)
    if root_local is None:
        raise ConlluFormatError("sentence has no root token (head 0)", first_line)
    return g


def from_conllu(text: str) -> list[GsmGraph]:
    """Parse CoNLL-U text into one graph per sentence."""
    graphs: list[GsmGraph] = []
    block: list[tuple[int, list[str]]] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.rstrip("\r")
        if line.startswith("#"):
            continue
        if not line.strip():
            if block:
                graphs.append(_parse_sentence(block, len(graphs)))
                block = []
            continue
        block.append((lineno, line.split("\t")))
    if block:
        graphs.append(_parse_sentence(block, len(graphs)))
    return graphs
