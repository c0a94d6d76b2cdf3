"""dagrules: declarative matching and rewriting for labelled DAG collections.

Graphs of semistructured nodes are indexed into columnar tables, patterns
evaluate as relational joins into (possibly nested) morphism tables, rules
fire per graph in reverse topological order into an incremental delta, and
a final merge materialises one rewritten output graph per input graph.
"""

from .conllu import ConlluFormatError, from_conllu
from .materialize import MaterialiseCycleError, materialise, provenance_to_text
from .matching import (
    FlatMorphismTable,
    NestedMorphismTable,
    PatternCache,
    RuleMatches,
    build_index,
    evaluate_pattern,
    flatten,
    join_optional,
    join_required,
    match_rule,
    match_ruleset,
    nest,
    scan_atom,
)
from .model import (
    EDGE,
    NODE,
    CycleError,
    GraphFormatError,
    GsmEdge,
    GsmGraph,
    GsmNode,
    ObjectId,
    edge_id,
    node_id,
    parse_graph_collection,
    serialize_collection,
    serialize_graph,
    validate_acyclic,
)
from .oracle import enumerate_morphisms_bruteforce
from .pipeline import GraphRun, run_collection, run_graph
from .rewriting import (
    DELETED,
    Delta,
    EngineFault,
    TraceEntry,
    apply_op,
    resolve,
    rewrite_graph,
    trace_to_text,
)
from .rules import (
    Diagnostic,
    EdgeAtom,
    Pattern,
    Rule,
    RuleSet,
    RuleSyntaxError,
    RuleValidationError,
    format_ruleset,
    parse_rules,
    validate_ruleset,
)
from .store import ColumnarStore, index_collection, topo_sort

__version__ = "0.1.0"

__all__ = [
    "EDGE",
    "NODE",
    "DELETED",
    "ColumnarStore",
    "ConlluFormatError",
    "CycleError",
    "Delta",
    "Diagnostic",
    "EdgeAtom",
    "EngineFault",
    "FlatMorphismTable",
    "GraphFormatError",
    "GraphRun",
    "GsmEdge",
    "GsmGraph",
    "GsmNode",
    "MaterialiseCycleError",
    "NestedMorphismTable",
    "ObjectId",
    "Pattern",
    "PatternCache",
    "Rule",
    "RuleMatches",
    "RuleSet",
    "RuleSyntaxError",
    "RuleValidationError",
    "TraceEntry",
    "apply_op",
    "build_index",
    "edge_id",
    "enumerate_morphisms_bruteforce",
    "evaluate_pattern",
    "flatten",
    "format_ruleset",
    "from_conllu",
    "index_collection",
    "join_optional",
    "join_required",
    "match_rule",
    "match_ruleset",
    "materialise",
    "nest",
    "node_id",
    "parse_graph_collection",
    "parse_rules",
    "provenance_to_text",
    "resolve",
    "rewrite_graph",
    "run_collection",
    "run_graph",
    "scan_atom",
    "serialize_collection",
    "serialize_graph",
    "topo_sort",
    "trace_to_text",
    "validate_acyclic",
    "validate_ruleset",
]
