"""The declarative rewrite-rule language: parsing, validation, printing.

A rule pairs a match pattern (edge atoms over node and edge variables,
some optional, destinations optionally aggregated with ``*``), an optional
``where`` condition, a designated entry variable, and an ordered list of
production operations. Grammar::

    ruleset  := rule* ;
    rule     := "rule" NAME "distinct"? "{" match+ ("where" cond)?
                "entry" VAR "rewrite" op* "}" ;
    match    := "optional"? "(" VAR ")" "-[" (VAR ":")? labels "]->"
                "(" "*"? VAR ")" ;
    labels   := STRING ("||" STRING)* ;
    op       := "new" VAR
              | "label" VAR "=" expr
              | "value" VAR "+=" expr
              | "prop" VAR "[" expr "]" "=" expr
              | "edge" "(" VAR "each"? ")" "-[" expr "]->" "(" VAR "each"? ")"
              | "del" "node" VAR | "del" "edge" VAR
              | "replace" VAR "with" VAR ;
    expr     := term ("++" term)* ;
    term     := STRING | "xi" "(" VAR ")" | "label" "(" VAR ")"
              | "prop" "(" VAR "," STRING ")" ;
    cond     := conj ("or" conj)* ;
    conj     := unary ("and" unary)* ;
    unary    := "not" unary | "(" cond ")" | atom ;
    atom     := "bound" "(" VAR ")"
              | "ell" "(" VAR ")" "contains" expr
              | expr ("=" | "!=" | "<" | "<=" | ">" | ">=") expr ;

``#`` starts a comment running to end of line. Semicolons between clauses
and operations are optional separators. ``distinct`` asks for isomorphic
matching (pairwise-distinct node bindings); the default is homomorphic.
The ``each`` marker documents iteration over an aggregation's nested rows;
any operation touching nested variables iterates whether or not the marker
is written.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Union

# ---------------------------------------------------------------------------
# AST


@dataclass(frozen=True)
class StrLit:
    value: str


@dataclass(frozen=True)
class XiOf:
    var: str


@dataclass(frozen=True)
class LabelOf:
    var: str


@dataclass(frozen=True)
class PropOf:
    var: str
    key: str


@dataclass(frozen=True)
class Concat:
    left: "Expr"
    right: "Expr"


Expr = Union[StrLit, XiOf, LabelOf, PropOf, Concat]


@dataclass(frozen=True)
class Bound:
    var: str


@dataclass(frozen=True)
class EllContains:
    var: str
    value: Expr


@dataclass(frozen=True)
class Compare:
    op: str  # = != < <= > >=
    left: Expr
    right: Expr


@dataclass(frozen=True)
class Not:
    inner: "Cond"


@dataclass(frozen=True)
class And:
    left: "Cond"
    right: "Cond"


@dataclass(frozen=True)
class Or:
    left: "Cond"
    right: "Cond"


Cond = Union[Bound, EllContains, Compare, Not, And, Or]


@dataclass(frozen=True)
class EdgeAtom:
    src_var: str
    edge_var: str | None
    labels: tuple[str, ...]
    dst_var: str
    optional: bool = False
    dst_aggregated: bool = False
    loc: tuple[int, int] = field(default=(0, 0), compare=False)


@dataclass(frozen=True)
class NewNode:
    var: str
    loc: tuple[int, int] = field(default=(0, 0), compare=False)


@dataclass(frozen=True)
class SetLabel:
    var: str
    value: Expr
    loc: tuple[int, int] = field(default=(0, 0), compare=False)


@dataclass(frozen=True)
class AppendXi:
    var: str
    value: Expr
    loc: tuple[int, int] = field(default=(0, 0), compare=False)


@dataclass(frozen=True)
class SetProp:
    var: str
    key: Expr
    value: Expr
    loc: tuple[int, int] = field(default=(0, 0), compare=False)


@dataclass(frozen=True)
class NewEdge:
    src_var: str
    label: Expr
    dst_var: str
    src_each: bool = False
    dst_each: bool = False
    loc: tuple[int, int] = field(default=(0, 0), compare=False)


@dataclass(frozen=True)
class DelNode:
    var: str
    loc: tuple[int, int] = field(default=(0, 0), compare=False)


@dataclass(frozen=True)
class DelEdge:
    var: str
    loc: tuple[int, int] = field(default=(0, 0), compare=False)


@dataclass(frozen=True)
class Replace:
    old: str
    new: str
    loc: tuple[int, int] = field(default=(0, 0), compare=False)


ProductionOp = Union[NewNode, SetLabel, AppendXi, SetProp, NewEdge, DelNode, DelEdge, Replace]


def expr_vars(e: Expr) -> set[str]:
    if isinstance(e, StrLit):
        return set()
    if isinstance(e, (XiOf, LabelOf)):
        return {e.var}
    if isinstance(e, PropOf):
        return {e.var}
    return expr_vars(e.left) | expr_vars(e.right)


def cond_vars(c: Cond) -> set[str]:
    if isinstance(c, Bound):
        return {c.var}
    if isinstance(c, EllContains):
        return {c.var} | expr_vars(c.value)
    if isinstance(c, Compare):
        return expr_vars(c.left) | expr_vars(c.right)
    if isinstance(c, Not):
        return cond_vars(c.inner)
    return cond_vars(c.left) | cond_vars(c.right)


def op_vars(op: ProductionOp) -> set[str]:
    """Every variable an operation reads or writes, including in expressions."""
    if isinstance(op, NewNode):
        return {op.var}
    if isinstance(op, (SetLabel, AppendXi)):
        return {op.var} | expr_vars(op.value)
    if isinstance(op, SetProp):
        return {op.var} | expr_vars(op.key) | expr_vars(op.value)
    if isinstance(op, NewEdge):
        return {op.src_var, op.dst_var} | expr_vars(op.label)
    if isinstance(op, (DelNode, DelEdge)):
        return {op.var}
    return {op.old, op.new}


@dataclass(frozen=True)
class Pattern:
    atoms: tuple[EdgeAtom, ...]
    entry_var: str

    @property
    def required_atoms(self) -> tuple[EdgeAtom, ...]:
        return tuple(a for a in self.atoms if not a.optional)

    @property
    def optional_atoms(self) -> tuple[EdgeAtom, ...]:
        return tuple(a for a in self.atoms if a.optional)

    def node_vars(self) -> list[str]:
        out: list[str] = []
        for a in self.atoms:
            for v in (a.src_var, a.dst_var):
                if v not in out:
                    out.append(v)
        return out

    def edge_vars(self) -> list[str]:
        out: list[str] = []
        for a in self.atoms:
            if a.edge_var is not None and a.edge_var not in out:
                out.append(a.edge_var)
        return out

    def aggregated_vars(self) -> list[str]:
        out: list[str] = []
        for a in self.atoms:
            if a.dst_aggregated and a.dst_var not in out:
                out.append(a.dst_var)
        return out

    def descendant_vars(self, agg_var: str) -> set[str]:
        """Variables packed into ``agg_var``'s nest.

        Node variables reachable from the aggregated destination, the edge
        variable of its binding atom, and every edge variable of an atom
        incident to a reachable node.
        """
        nodes = {agg_var}
        changed = True
        while changed:
            changed = False
            for a in self.atoms:
                if a.src_var in nodes and a.dst_var not in nodes:
                    nodes.add(a.dst_var)
                    changed = True
        out = set(nodes)
        for a in self.atoms:
            if a.edge_var is None:
                continue
            if a.src_var in nodes or a.dst_var in nodes:
                out.add(a.edge_var)
        return out

    def nested_vars(self) -> set[str]:
        out: set[str] = set()
        for h in self.aggregated_vars():
            out |= self.descendant_vars(h)
        return out


@dataclass(frozen=True)
class Rule:
    name: str
    pattern: Pattern
    condition: Cond | None
    ops: tuple[ProductionOp, ...]
    all_distinct: bool = False
    loc: tuple[int, int] = field(default=(0, 0), compare=False)

    def new_vars(self) -> list[str]:
        return [op.var for op in self.ops if isinstance(op, NewNode)]


@dataclass(frozen=True)
class RuleSet:
    rules: tuple[Rule, ...]

    def __iter__(self):
        return iter(self.rules)

    def __len__(self) -> int:
        return len(self.rules)


# ---------------------------------------------------------------------------
# Tokenizer


class RuleSyntaxError(ValueError):
    def __init__(self, message: str, line: int, col: int):
        self.line = line
        self.col = col
        super().__init__(f"line {line}, column {col}: {message}")


@dataclass(frozen=True)
class _Token:
    kind: str  # name | string | sym | eof
    text: str
    line: int
    col: int


_TWO_CHAR = ("||", "++", "+=", "!=", "<=", ">=", "->")
_ONE_CHAR = "{}()[]*:;,=<>-"


def _tokenize(text: str) -> list[_Token]:
    tokens: list[_Token] = []
    line, col = 1, 1
    i = 0
    n = len(text)
    while i < n:
        ch = text[i]
        if ch == "\n":
            line += 1
            col = 1
            i += 1
            continue
        if ch in " \t\r":
            i += 1
            col += 1
            continue
        if ch == "#":
            while i < n and text[i] != "\n":
                i += 1
            continue
        if ch == '"':
            start_line, start_col = line, col
            i += 1
            col += 1
            buf: list[str] = []
            while True:
                if i >= n or text[i] == "\n":
                    raise RuleSyntaxError("unterminated string", start_line, start_col)
                c = text[i]
                if c == "\\":
                    if i + 1 >= n:
                        raise RuleSyntaxError("unterminated escape", line, col)
                    nxt = text[i + 1]
                    buf.append({"n": "\n", "t": "\t"}.get(nxt, nxt))
                    i += 2
                    col += 2
                    continue
                if c == '"':
                    i += 1
                    col += 1
                    break
                buf.append(c)
                i += 1
                col += 1
            tokens.append(_Token("string", "".join(buf), start_line, start_col))
            continue
        if ch.isalpha() or ch == "_":
            start_col = col
            j = i
            while j < n and (text[j].isalnum() or text[j] in "_'"):
                j += 1
            tokens.append(_Token("name", text[i:j], line, start_col))
            col += j - i
            i = j
            continue
        two = text[i:i + 2]
        if two in _TWO_CHAR:
            tokens.append(_Token("sym", two, line, col))
            i += 2
            col += 2
            continue
        if ch in _ONE_CHAR:
            tokens.append(_Token("sym", ch, line, col))
            i += 1
            col += 1
            continue
        raise RuleSyntaxError(f"unexpected character {ch!r}", line, col)
    tokens.append(_Token("eof", "", line, col))
    return tokens


# ---------------------------------------------------------------------------
# Parser

_EXPR_HEADS = {"xi", "label", "prop"}
_OP_HEADS = {"new", "label", "value", "prop", "edge", "del", "replace"}


class _Parser:
    def __init__(self, text: str):
        self.tokens = _tokenize(text)
        self.pos = 0

    # token helpers -------------------------------------------------------
    def peek(self, ahead: int = 0) -> _Token:
        return self.tokens[min(self.pos + ahead, len(self.tokens) - 1)]

    def advance(self) -> _Token:
        tok = self.tokens[self.pos]
        if tok.kind != "eof":
            self.pos += 1
        return tok

    def error(self, message: str, tok: _Token | None = None) -> RuleSyntaxError:
        tok = tok or self.peek()
        return RuleSyntaxError(message, tok.line, tok.col)

    def accept(self, kind: str, text: str | None = None) -> _Token | None:
        tok = self.peek()
        if tok.kind == kind and (text is None or tok.text == text):
            return self.advance()
        return None

    def expect(self, kind: str, text: str | None = None) -> _Token:
        tok = self.accept(kind, text)
        if tok is None:
            want = text if text is not None else kind
            got = self.peek().text or self.peek().kind
            raise self.error(f"expected {want!r}, found {got!r}")
        return tok

    def expect_name(self, what: str = "identifier") -> _Token:
        tok = self.peek()
        if tok.kind != "name":
            raise self.error(f"expected {what}, found {tok.text or tok.kind!r}")
        return self.advance()

    def skip_semis(self) -> None:
        while self.accept("sym", ";"):
            pass

    # grammar -------------------------------------------------------------
    def parse_ruleset(self) -> RuleSet:
        rules: list[Rule] = []
        self.skip_semis()
        while self.peek().kind != "eof":
            rules.append(self.parse_rule())
            self.skip_semis()
        return RuleSet(tuple(rules))

    def parse_rule(self) -> Rule:
        kw = self.expect("name", "rule")
        name = self.expect_name("rule name").text
        distinct = self.accept("name", "distinct") is not None
        self.expect("sym", "{")

        atoms: list[EdgeAtom] = []
        while self.peek().text == "optional" or self.peek().text == "(":
            atoms.append(self.parse_atom())
            self.skip_semis()
        if not atoms:
            raise self.error("a rule needs at least one match atom")

        condition: Cond | None = None
        if self.accept("name", "where"):
            condition = self.parse_cond()
            self.skip_semis()

        self.expect("name", "entry")
        entry = self.expect_name("entry variable").text
        self.skip_semis()

        ops: list[ProductionOp] = []
        if self.accept("name", "rewrite"):
            self.skip_semis()
            while self.peek().text in _OP_HEADS:
                ops.append(self.parse_op())
                self.skip_semis()
        self.expect("sym", "}")

        rule = Rule(
            name=name,
            pattern=Pattern(tuple(atoms), entry),
            condition=condition,
            ops=tuple(ops),
            all_distinct=distinct,
            loc=(kw.line, kw.col),
        )
        self.check_scoping(rule)
        return rule

    def parse_atom(self) -> EdgeAtom:
        optional = self.accept("name", "optional") is not None
        lp = self.expect("sym", "(")
        src = self.expect_name("source variable").text
        self.expect("sym", ")")
        self.expect("sym", "-")
        self.expect("sym", "[")
        edge_var: str | None = None
        if self.peek().kind == "name" and self.peek(1).text == ":":
            edge_var = self.advance().text
            self.expect("sym", ":")
        labels = [self.expect("string").text]
        while self.accept("sym", "||"):
            labels.append(self.expect("string").text)
        self.expect("sym", "]")
        self.expect("sym", "->")
        self.expect("sym", "(")
        aggregated = self.accept("sym", "*") is not None
        dst = self.expect_name("destination variable").text
        self.expect("sym", ")")
        return EdgeAtom(src, edge_var, tuple(labels), dst, optional, aggregated, loc=(lp.line, lp.col))

    def parse_op(self) -> ProductionOp:
        tok = self.advance()
        loc = (tok.line, tok.col)
        head = tok.text
        if head == "new":
            return NewNode(self.expect_name().text, loc=loc)
        if head == "label":
            var = self.expect_name().text
            self.expect("sym", "=")
            return SetLabel(var, self.parse_expr(), loc=loc)
        if head == "value":
            var = self.expect_name().text
            self.expect("sym", "+=")
            return AppendXi(var, self.parse_expr(), loc=loc)
        if head == "prop":
            var = self.expect_name().text
            self.expect("sym", "[")
            key = self.parse_expr()
            self.expect("sym", "]")
            self.expect("sym", "=")
            return SetProp(var, key, self.parse_expr(), loc=loc)
        if head == "edge":
            self.expect("sym", "(")
            src = self.expect_name().text
            src_each = self.accept("name", "each") is not None
            self.expect("sym", ")")
            self.expect("sym", "-")
            self.expect("sym", "[")
            label = self.parse_expr()
            self.expect("sym", "]")
            self.expect("sym", "->")
            self.expect("sym", "(")
            dst = self.expect_name().text
            dst_each = self.accept("name", "each") is not None
            self.expect("sym", ")")
            return NewEdge(src, label, dst, src_each, dst_each, loc=loc)
        if head == "del":
            what = self.expect_name("'node' or 'edge'")
            var = self.expect_name().text
            if what.text == "node":
                return DelNode(var, loc=loc)
            if what.text == "edge":
                return DelEdge(var, loc=loc)
            raise self.error("expected 'node' or 'edge' after 'del'", what)
        if head == "replace":
            old = self.expect_name().text
            self.expect("name", "with")
            return Replace(old, self.expect_name().text, loc=loc)
        raise self.error(f"unknown operation {head!r}", tok)

    def parse_expr(self) -> Expr:
        expr = self.parse_term()
        while self.accept("sym", "++"):
            expr = Concat(expr, self.parse_term())
        return expr

    def parse_term(self) -> Expr:
        tok = self.peek()
        if tok.kind == "string":
            return StrLit(self.advance().text)
        if tok.text in _EXPR_HEADS:
            head = self.advance().text
            self.expect("sym", "(")
            var = self.expect_name().text
            self.accept("name", "each")  # marker only; iteration is implicit
            if head == "prop":
                self.expect("sym", ",")
                key = self.expect("string").text
                self.expect("sym", ")")
                return PropOf(var, key)
            self.expect("sym", ")")
            return XiOf(var) if head == "xi" else LabelOf(var)
        raise self.error(f"expected an expression, found {tok.text or tok.kind!r}")

    def parse_cond(self) -> Cond:
        cond = self.parse_conj()
        while self.accept("name", "or"):
            cond = Or(cond, self.parse_conj())
        return cond

    def parse_conj(self) -> Cond:
        cond = self.parse_cond_unary()
        while self.accept("name", "and"):
            cond = And(cond, self.parse_cond_unary())
        return cond

    def parse_cond_unary(self) -> Cond:
        if self.accept("name", "not"):
            return Not(self.parse_cond_unary())
        if self.peek().text == "(":
            self.advance()
            inner = self.parse_cond()
            self.expect("sym", ")")
            return inner
        return self.parse_cond_atom()

    def parse_cond_atom(self) -> Cond:
        tok = self.peek()
        if tok.text == "bound":
            self.advance()
            self.expect("sym", "(")
            var = self.expect_name().text
            self.expect("sym", ")")
            return Bound(var)
        if tok.text == "ell":
            self.advance()
            self.expect("sym", "(")
            var = self.expect_name().text
            self.expect("sym", ")")
            self.expect("name", "contains")
            return EllContains(var, self.parse_expr())
        left = self.parse_expr()
        op_tok = self.peek()
        if op_tok.text in ("=", "!=", "<", "<=", ">", ">="):
            self.advance()
            return Compare(op_tok.text, left, self.parse_expr())
        raise self.error("expected a comparison operator", op_tok)

    # scoping --------------------------------------------------------------
    def check_scoping(self, rule: Rule) -> None:
        """Reject references to variables a rule never introduces."""
        known = set(rule.pattern.node_vars()) | set(rule.pattern.edge_vars())
        if rule.pattern.entry_var not in known:
            raise RuleSyntaxError(
                f"rule {rule.name}: unknown entry variable {rule.pattern.entry_var!r}",
                *rule.loc,
            )
        if rule.condition is not None:
            for v in sorted(cond_vars(rule.condition)):
                if v not in known:
                    raise RuleSyntaxError(
                        f"rule {rule.name}: unknown variable {v!r} in condition", *rule.loc
                    )
        scope = set(known)
        for op in rule.ops:
            if isinstance(op, NewNode):
                used: set[str] = set()
            else:
                used = op_vars(op)
            for v in sorted(used):
                if v not in scope:
                    raise RuleSyntaxError(
                        f"rule {rule.name}: unknown variable {v!r} in production", *op.loc
                    )
            if isinstance(op, NewNode):
                scope.add(op.var)


# ---------------------------------------------------------------------------
# Validation


@dataclass(frozen=True)
class Diagnostic:
    rule: str
    message: str
    loc: tuple[int, int]

    def __str__(self) -> str:
        return f"rule {self.rule} (line {self.loc[0]}, column {self.loc[1]}): {self.message}"


class RuleValidationError(ValueError):
    def __init__(self, diagnostics: list[Diagnostic]):
        self.diagnostics = diagnostics
        super().__init__("; ".join(str(d) for d in diagnostics))


def _connected(atoms: tuple[EdgeAtom, ...]) -> bool:
    if len(atoms) <= 1:
        return True
    parent: dict[str, str] = {}

    def find(x: str) -> str:
        while parent.setdefault(x, x) != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for a in atoms:
        parent[find(a.src_var)] = find(a.dst_var)
    roots = {find(a.src_var) for a in atoms}
    return len(roots) == 1


def optional_groups(pattern: Pattern) -> list[list[EdgeAtom]]:
    """Optional atoms grouped by connectivity over optional-only variables.

    Two optional atoms belong together when they share a variable the
    required part does not bind; groups are ordered by first atom.
    """
    required_vars: set[str] = set()
    for a in pattern.required_atoms:
        required_vars |= {a.src_var, a.dst_var}
        if a.edge_var:
            required_vars.add(a.edge_var)
    opts = list(pattern.optional_atoms)
    groups: list[list[EdgeAtom]] = []
    group_vars: list[set[str]] = []
    for a in opts:
        own = ({a.src_var, a.dst_var} | ({a.edge_var} if a.edge_var else set())) - required_vars
        merged: list[int] = [i for i, gv in enumerate(group_vars) if gv & own]
        if not merged:
            groups.append([a])
            group_vars.append(own)
        else:
            target = merged[0]
            groups[target].append(a)
            group_vars[target] |= own
            for i in reversed(merged[1:]):
                groups[target].extend(groups.pop(i))
                group_vars[target] |= group_vars.pop(i)
    groups.sort(key=lambda g: pattern.atoms.index(g[0]))
    return groups


def validate_ruleset(rs: RuleSet) -> list[Diagnostic]:
    """Structural checks beyond parsing. Returns every violation found."""
    diags: list[Diagnostic] = []
    seen_names: set[str] = set()
    for rule in rs.rules:
        if rule.name in seen_names:
            diags.append(Diagnostic(rule.name, "duplicate rule name", rule.loc))
        seen_names.add(rule.name)
        diags.extend(_validate_rule(rule))
    return diags


def _validate_rule(rule: Rule) -> list[Diagnostic]:
    diags: list[Diagnostic] = []
    pat = rule.pattern
    node_vars = set(pat.node_vars())
    edge_vars = set(pat.edge_vars())

    def report(message: str, loc: tuple[int, int] | None = None) -> None:
        diags.append(Diagnostic(rule.name, message, loc or rule.loc))

    overlap = node_vars & edge_vars
    for v in sorted(overlap):
        report(f"variable {v!r} used as both node and edge")

    seen_edge_vars: set[str] = set()
    binding_count: dict[str, int] = {}
    for a in pat.atoms:
        if a.edge_var is not None:
            if a.edge_var in seen_edge_vars:
                report(f"edge variable {a.edge_var!r} bound by more than one atom", a.loc)
            seen_edge_vars.add(a.edge_var)
        binding_count[a.dst_var] = binding_count.get(a.dst_var, 0) + 1
    for a in pat.atoms:
        if a.dst_aggregated and binding_count[a.dst_var] != 1:
            report(f"aggregated variable {a.dst_var!r} needs exactly one binding atom", a.loc)

    required_node_vars = {v for a in pat.required_atoms for v in (a.src_var, a.dst_var)}
    if pat.entry_var in edge_vars:
        report(f"entry variable {pat.entry_var!r} must be a node variable")
    elif pat.entry_var not in required_node_vars:
        report(f"entry variable {pat.entry_var!r} does not occur in any required atom")
    if not _connected(pat.required_atoms):
        report("required atoms do not form a connected pattern")

    nested = pat.nested_vars()
    agg = pat.aggregated_vars()
    for i, h in enumerate(agg):
        for other in agg[i + 1:]:
            if pat.descendant_vars(h) & pat.descendant_vars(other):
                report(f"aggregated variables {h!r} and {other!r} have overlapping subtrees")
    if pat.entry_var in nested:
        report(f"entry variable {pat.entry_var!r} lies inside an aggregated subtree")

    if rule.condition is not None:
        for v in sorted(cond_vars(rule.condition) & nested):
            report(f"condition refers to nested variable {v!r}")
        diags.extend(_check_expr_kinds_in_cond(rule, rule.condition, node_vars, edge_vars))

    required_vars = required_node_vars | {a.edge_var for a in pat.required_atoms if a.edge_var}
    for group in optional_groups(pat):
        gv: set[str] = set()
        for a in group:
            gv |= {a.src_var, a.dst_var}
        if not gv & required_vars:
            report("optional atoms share no variable with the required pattern", group[0].loc)

    new_vars: set[str] = set()

    def kind_of(v: str) -> str:
        if v in new_vars:
            return "new"
        if v in node_vars:
            return "node"
        return "edge" if v in edge_vars else "?"

    for op in rule.ops:
        if isinstance(op, NewNode):
            if op.var in node_vars or op.var in edge_vars or op.var in new_vars:
                report(f"'new {op.var}' shadows an existing variable", op.loc)
            new_vars.add(op.var)
            continue
        if isinstance(op, (SetLabel, AppendXi, SetProp)):
            if kind_of(op.var) == "edge":
                report(f"cannot set content on edge variable {op.var!r}", op.loc)
        if isinstance(op, NewEdge):
            for v in (op.src_var, op.dst_var):
                if kind_of(v) == "edge":
                    report(f"edge endpoint {v!r} must be a node variable", op.loc)
        if isinstance(op, DelNode) and kind_of(op.var) == "edge":
            report(f"'del node' on edge variable {op.var!r}", op.loc)
        if isinstance(op, DelEdge) and kind_of(op.var) != "edge":
            report(f"'del edge' on non-edge variable {op.var!r}", op.loc)
        if isinstance(op, Replace):
            if op.new not in new_vars:
                report(f"replacement target {op.new!r} was not introduced by 'new' in this rule", op.loc)
            if kind_of(op.old) == "edge":
                report(f"cannot replace edge variable {op.old!r}", op.loc)
        touched = op_vars(op) & nested
        nests_hit = {h for h in agg if touched & pat.descendant_vars(h)}
        if len(nests_hit) > 1:
            report("operation mixes variables from different aggregated subtrees", op.loc)
    for op in rule.ops:
        diags.extend(_check_expr_kinds_in_op(rule, op, node_vars | new_vars, edge_vars))
    return diags


def _op_exprs(op: ProductionOp) -> list[Expr]:
    if isinstance(op, (SetLabel, AppendXi)):
        return [op.value]
    if isinstance(op, SetProp):
        return [op.key, op.value]
    if isinstance(op, NewEdge):
        return [op.label]
    return []


def _expr_kind_diags(rule: Rule, e: Expr, node_like: set[str], edge_vars: set[str], loc: tuple[int, int]) -> list[Diagnostic]:
    diags: list[Diagnostic] = []
    if isinstance(e, (XiOf, PropOf)) and e.var in edge_vars:
        what = "xi" if isinstance(e, XiOf) else "prop"
        diags.append(Diagnostic(rule.name, f"{what}() needs a node variable, got edge {e.var!r}", loc))
    if isinstance(e, Concat):
        diags.extend(_expr_kind_diags(rule, e.left, node_like, edge_vars, loc))
        diags.extend(_expr_kind_diags(rule, e.right, node_like, edge_vars, loc))
    return diags


def _check_expr_kinds_in_cond(rule: Rule, c: Cond, node_vars: set[str], edge_vars: set[str]) -> list[Diagnostic]:
    diags: list[Diagnostic] = []
    if isinstance(c, EllContains):
        if c.var in edge_vars:
            diags.append(Diagnostic(rule.name, f"ell() needs a node variable, got edge {c.var!r}", rule.loc))
        diags.extend(_expr_kind_diags(rule, c.value, node_vars, edge_vars, rule.loc))
    elif isinstance(c, Compare):
        diags.extend(_expr_kind_diags(rule, c.left, node_vars, edge_vars, rule.loc))
        diags.extend(_expr_kind_diags(rule, c.right, node_vars, edge_vars, rule.loc))
    elif isinstance(c, Not):
        diags.extend(_check_expr_kinds_in_cond(rule, c.inner, node_vars, edge_vars))
    elif isinstance(c, (And, Or)):
        diags.extend(_check_expr_kinds_in_cond(rule, c.left, node_vars, edge_vars))
        diags.extend(_check_expr_kinds_in_cond(rule, c.right, node_vars, edge_vars))
    return diags


def _check_expr_kinds_in_op(rule: Rule, op: ProductionOp, node_like: set[str], edge_vars: set[str]) -> list[Diagnostic]:
    diags: list[Diagnostic] = []
    for e in _op_exprs(op):
        diags.extend(_expr_kind_diags(rule, e, node_like, edge_vars, op.loc))
    return diags


def parse_rules(text: str, validate: bool = True) -> RuleSet:
    """Parse a rule file. With ``validate`` (default) structural problems
    raise RuleValidationError carrying every diagnostic at once."""
    rs = _Parser(text).parse_ruleset()
    if validate:
        diags = validate_ruleset(rs)
        if diags:
            raise RuleValidationError(diags)
    return rs


# ---------------------------------------------------------------------------
# Pretty printer


def _quote(s: str) -> str:
    return '"' + s.replace("\\", "\\\\").replace('"', '\\"') + '"'


def format_expr(e: Expr) -> str:
    if isinstance(e, StrLit):
        return _quote(e.value)
    if isinstance(e, XiOf):
        return f"xi({e.var})"
    if isinstance(e, LabelOf):
        return f"label({e.var})"
    if isinstance(e, PropOf):
        return f"prop({e.var}, {_quote(e.key)})"
    return f"{format_expr(e.left)} ++ {format_expr(e.right)}"


def format_cond(c: Cond) -> str:
    if isinstance(c, Bound):
        return f"bound({c.var})"
    if isinstance(c, EllContains):
        return f"ell({c.var}) contains {format_expr(c.value)}"
    if isinstance(c, Compare):
        return f"{format_expr(c.left)} {c.op} {format_expr(c.right)}"
    if isinstance(c, Not):
        return f"not ({format_cond(c.inner)})"
    if isinstance(c, And):
        return f"({format_cond(c.left)} and {format_cond(c.right)})"
    return f"({format_cond(c.left)} or {format_cond(c.right)})"


def _format_atom(a: EdgeAtom) -> str:
    labels = " || ".join(_quote(s) for s in a.labels)
    edge = f"{a.edge_var}:" if a.edge_var else ""
    star = "*" if a.dst_aggregated else ""
    opt = "optional " if a.optional else ""
    return f"{opt}({a.src_var})-[{edge}{labels}]->({star}{a.dst_var})"


def _format_op(op: ProductionOp) -> str:
    if isinstance(op, NewNode):
        return f"new {op.var};"
    if isinstance(op, SetLabel):
        return f"label {op.var} = {format_expr(op.value)};"
    if isinstance(op, AppendXi):
        return f"value {op.var} += {format_expr(op.value)};"
    if isinstance(op, SetProp):
        return f"prop {op.var}[{format_expr(op.key)}] = {format_expr(op.value)};"
    if isinstance(op, NewEdge):
        src = f"{op.src_var} each" if op.src_each else op.src_var
        dst = f"{op.dst_var} each" if op.dst_each else op.dst_var
        return f"edge ({src})-[{format_expr(op.label)}]->({dst});"
    if isinstance(op, DelNode):
        return f"del node {op.var};"
    if isinstance(op, DelEdge):
        return f"del edge {op.var};"
    return f"replace {op.old} with {op.new};"


def format_ruleset(rs: RuleSet) -> str:
    """Canonical text; ``parse_rules(format_ruleset(rs))`` equals ``rs``."""
    chunks: list[str] = []
    for rule in rs.rules:
        head = f"rule {rule.name} distinct {{" if rule.all_distinct else f"rule {rule.name} {{"
        lines = [head]
        for a in rule.pattern.atoms:
            lines.append(f"  {_format_atom(a)}")
        if rule.condition is not None:
            lines.append(f"  where {format_cond(rule.condition)}")
        lines.append(f"  entry {rule.pattern.entry_var}")
        lines.append("  rewrite")
        for op in rule.ops:
            lines.append(f"    {_format_op(op)}")
        lines.append("}")
        chunks.append("\n".join(lines))
    return "\n\n".join(chunks) + ("\n" if chunks else "")
