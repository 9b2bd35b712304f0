"""A small expression language for fields and coefficients.

Grammar (highest binding first)::

    atom    := number | name | name "(" expr ")" | "(" expr ")"
    power   := atom [ "^" unary ]          right associative
    unary   := "-" unary | power
    term    := unary { ("*" | "/") unary }
    expr    := term { ("+" | "-") term }

Names resolve to a coordinate, the reserved time symbol ``t``, a function
from :data:`FUNCTION_NAMES`, or a coefficient looked up in a
:class:`CoefficientTable`.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Any, Callable, Iterable, Mapping, Sequence

from . import diff
from .errors import ArityError, DomainError, ExprSyntaxError, UnknownIdentifierError

TIME = "t"
FUNCTION_NAMES = frozenset(diff.FUNCTIONS)

LITERAL = "literal"
VARIABLE = "variable"
COEFFICIENT = "coefficient"
UNARY = "unary"
BINARY = "binary"
CALL = "call"


@dataclass(frozen=True)
class Node:
    kind: str
    payload: Any = None
    children: tuple["Node", ...] = ()

    def __str__(self) -> str:
        return pretty_print(self)


def literal(value: float) -> Node:
    return Node(LITERAL, float(value))


def variable(name: str) -> Node:
    return Node(VARIABLE, name)


def coefficient(name: str) -> Node:
    return Node(COEFFICIENT, name)


def unary(child: Node) -> Node:
    return Node(UNARY, "-", (child,))


def binary(op: str, left: Node, right: Node) -> Node:
    return Node(BINARY, op, (left, right))


def call(name: str, arg: Node) -> Node:
    return Node(CALL, name, (arg,))


# ---------------------------------------------------------------------------
# tokenizer / parser

_TOKEN = re.compile(
    r"\s*(?:"
    r"(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)"
    r"|(?P<name>[A-Za-z_][A-Za-z_0-9]*)"
    r"|(?P<op>[-+*/^(),])"
    r")"
)


@dataclass
class _Tok:
    kind: str
    text: str
    pos: int


def _tokenize(text: str) -> list[_Tok]:
    toks = []
    pos = 0
    while pos < len(text):
        if text[pos:].strip() == "":
            break
        m = _TOKEN.match(text, pos)
        if m is None or m.end() == pos:
            bad = len(text) - len(text[pos:].lstrip())
            raise ExprSyntaxError(f"unexpected character {text[bad]!r}", bad, text)
        kind = m.lastgroup
        start = m.start(kind)
        toks.append(_Tok(kind, m.group(kind), start))
        pos = m.end()
    toks.append(_Tok("end", "", len(text)))
    return toks


class _Parser:
    def __init__(self, text: str, coords: Sequence[str], coefficients: Iterable[str] | None):
        self.text = text
        self.toks = _tokenize(text)
        self.i = 0
        self.coords = set(coords)
        self.coefficients = None if coefficients is None else set(coefficients)

    @property
    def tok(self) -> _Tok:
        return self.toks[self.i]

    def advance(self) -> _Tok:
        t = self.toks[self.i]
        self.i += 1
        return t

    def expect(self, text: str) -> None:
        if self.tok.text != text:
            what = self.tok.text or "end of input"
            raise ExprSyntaxError(f"expected {text!r}, found {what!r}", self.tok.pos, self.text)
        self.advance()

    def parse(self) -> Node:
        node = self.expr()
        if self.tok.kind != "end":
            raise ExprSyntaxError(f"unexpected {self.tok.text!r}", self.tok.pos, self.text)
        return node

    def expr(self) -> Node:
        node = self.term()
        while self.tok.text in ("+", "-") and self.tok.kind == "op":
            op = self.advance().text
            node = binary(op, node, self.term())
        return node

    def term(self) -> Node:
        node = self.unary()
        while self.tok.text in ("*", "/") and self.tok.kind == "op":
            op = self.advance().text
            node = binary(op, node, self.unary())
        return node

    def unary(self) -> Node:
        if self.tok.kind == "op" and self.tok.text == "-":
            self.advance()
            return unary(self.unary())
        return self.power()

    def power(self) -> Node:
        base = self.atom()
        if self.tok.kind == "op" and self.tok.text == "^":
            self.advance()
            return binary("^", base, self.unary())
        return base

    def atom(self) -> Node:
        tok = self.tok
        if tok.kind == "num":
            self.advance()
            return literal(float(tok.text))
        if tok.kind == "name":
            self.advance()
            return self.name(tok)
        if tok.text == "(":
            self.advance()
            node = self.expr()
            self.expect(")")
            return node
        what = tok.text or "end of input"
        raise ExprSyntaxError(f"unexpected {what!r}", tok.pos, self.text)

    def name(self, tok: _Tok) -> Node:
        name = tok.text
        if name in FUNCTION_NAMES:
            if self.tok.text != "(":
                raise ArityError(f"function {name!r} needs one argument", tok.pos, self.text)
            self.advance()
            if self.tok.text == ")":
                raise ArityError(f"function {name!r} takes exactly one argument, got 0",
                                 tok.pos, self.text)
            arg = self.expr()
            if self.tok.text == ",":
                raise ArityError(f"function {name!r} takes exactly one argument",
                                 tok.pos, self.text)
            self.expect(")")
            return call(name, arg)
        if self.tok.text == "(":
            raise UnknownIdentifierError(f"unknown function {name!r}", tok.pos, self.text)
        if name in self.coords or name == TIME:
            return variable(name)
        if self.coefficients is None or name in self.coefficients:
            return coefficient(name)
        raise UnknownIdentifierError(f"unknown identifier {name!r}", tok.pos, self.text)


def _check_coords(coords: Sequence[str]) -> None:
    if len(set(coords)) != len(coords):
        raise ValueError(f"coordinate names must be distinct: {list(coords)}")
    for c in coords:
        if c == TIME or c in FUNCTION_NAMES:
            raise ValueError(f"{c!r} is reserved and cannot name a coordinate")
        if not re.fullmatch(r"[A-Za-z_][A-Za-z_0-9]*", c):
            raise ValueError(f"invalid coordinate name {c!r}")


def parse(text: str, coords: Sequence[str], coefficients: Iterable[str] | None = None) -> Node:
    """Parse ``text`` into a tree.

    With ``coefficients=None`` every unknown bare name becomes a coefficient
    reference, resolved when the tree is evaluated.  Passing a collection of
    names makes any other identifier a parse error.
    """
    if not text or not text.strip():
        raise ExprSyntaxError("empty expression", 0, text)
    _check_coords(coords)
    try:
        return _Parser(text, coords, coefficients).parse()
    except RecursionError:
        raise ExprSyntaxError("expression nested too deeply", 0, text) from None


# ---------------------------------------------------------------------------
# printing

_PREC = {"+": 1, "-": 1, "*": 2, "/": 2, "^": 4}


def _prec(node: Node) -> int:
    if node.kind == BINARY:
        return _PREC[node.payload]
    if node.kind == UNARY:
        return 3
    return 5


def _fmt_number(v: float) -> str:
    if v.is_integer() and abs(v) < 1e16:
        return str(int(v))
    return repr(v)


def pretty_print(node: Node) -> str:
    k = node.kind
    if k == LITERAL:
        if node.payload < 0:
            raise ValueError("literals are non-negative; use a unary minus node")
        return _fmt_number(node.payload)
    if k in (VARIABLE, COEFFICIENT):
        return node.payload
    if k == CALL:
        return f"{node.payload}({pretty_print(node.children[0])})"
    if k == UNARY:
        child = node.children[0]
        s = pretty_print(child)
        return f"-({s})" if _prec(child) < 3 else f"-{s}"
    left, right = node.children
    op = node.payload
    ls, rs = pretty_print(left), pretty_print(right)
    if op == "^":
        if _prec(left) < 5:
            ls = f"({ls})"
        if _prec(right) < 3:
            rs = f"({rs})"
        return f"{ls}^{rs}"
    p = _PREC[op]
    if _prec(left) < p:
        ls = f"({ls})"
    if _prec(right) <= p:
        rs = f"({rs})"
    return f"{ls} {op} {rs}"


# ---------------------------------------------------------------------------
# evaluation

def references(node: Node, kind: str) -> set[str]:
    out = set()
    stack = [node]
    while stack:
        n = stack.pop()
        if n.kind == kind:
            out.add(n.payload)
        stack.extend(n.children)
    return out


def uses_time(node: Node) -> bool:
    return TIME in references(node, VARIABLE)


@dataclass
class CoefficientTable:
    """Named functions of time only.  Bare numbers are constants."""

    entries: dict[str, Node] = field(default_factory=dict)

    def __post_init__(self):
        self._compiled = {name: _compile(node, {}, None) for name, node in self.entries.items()}

    @classmethod
    def from_mapping(cls, mapping: Mapping[str, Any] | None) -> "CoefficientTable":
        entries = {}
        for name, value in (mapping or {}).items():
            if isinstance(value, Node):
                node = value
            elif isinstance(value, (int, float)) and not isinstance(value, bool):
                node = literal(abs(value)) if value >= 0 else unary(literal(-value))
            else:
                node = parse(str(value), [], coefficients=())
            entries[name] = node
        return cls(entries)

    def with_values(self, **values: Any) -> "CoefficientTable":
        merged = dict(self.entries)
        merged.update(CoefficientTable.from_mapping(values).entries)
        return CoefficientTable(merged)

    def __contains__(self, name: str) -> bool:
        return name in self.entries

    def names(self) -> list[str]:
        return list(self.entries)

    def value(self, name: str, time: float) -> float:
        try:
            fn = self._compiled[name]
        except KeyError:
            raise UnknownIdentifierError(f"unresolved coefficient {name!r}", 0) from None
        return fn((), time)

    def time_dependent(self, name: str) -> bool:
        return uses_time(self.entries[name])


def _compile(node: Node, index: Mapping[str, int], table: CoefficientTable | None) -> Callable:
    """Turn a tree into a closure ``f(point, time)`` over any carrier."""
    k = node.kind
    if k == LITERAL:
        v = node.payload
        return lambda p, t: v
    if k == VARIABLE:
        if node.payload == TIME:
            return lambda p, t: t
        i = index[node.payload]
        return lambda p, t: p[i]
    if k == COEFFICIENT:
        name = node.payload
        if table is None or name not in table:
            raise UnknownIdentifierError(f"unresolved coefficient {name!r}", 0)
        return lambda p, t: table.value(name, t)
    if k == UNARY:
        f = _compile(node.children[0], index, table)
        return lambda p, t: -f(p, t)
    if k == CALL:
        fn = diff.FUNCTIONS[node.payload]
        f = _compile(node.children[0], index, table)

        def _call(p, t):
            x = f(p, t)
            try:
                return fn(x)
            except (DomainError, OverflowError, ValueError) as exc:
                raise DomainError(str(exc), pretty_print(node)) from None
        return _call
    op = node.payload
    if op in ("+", "-", "*"):
        return _compile_chain(node, index, table)
    f = _compile(node.children[0], index, table)
    g = _compile(node.children[1], index, table)
    if op == "/":
        def _div(p, t):
            num = f(p, t)
            den = g(p, t)
            if diff.base_value(den) == 0.0:
                raise DomainError("division by zero", pretty_print(node))
            return num / den
        return _div

    ex_node = node.children[1]
    if ex_node.kind == LITERAL and ex_node.payload.is_integer() and 0 < ex_node.payload <= 1024:
        # the common case of a literal positive integer exponent
        kk = int(ex_node.payload)
        if kk == 1:
            return f
        if kk == 2:
            def _square(p, t):
                b = f(p, t)
                return b * b
            return _square
        return lambda p, t: diff.ipow(f(p, t), kk)

    # an exponent that depends on coordinates always takes the exp/ln route, so
    # the real and jet carriers agree on where the power is defined
    const_exponent = not (references(node.children[1], VARIABLE) - {TIME})

    def _pow(p, t):
        base = f(p, t)
        ex = g(p, t)
        if const_exponent and float(ex).is_integer() and abs(ex) <= 1024:
            k = int(ex)
            if k < 0 and diff.base_value(base) == 0.0:
                raise DomainError("division by zero", pretty_print(node))
            return diff.ipow(base, k)
        if diff.base_value(base) <= 0.0:
            raise DomainError("non-integer power of non-positive base", pretty_print(node))
        return diff.exp(ex * diff.ln(base))
    return _pow


def _compile_chain(node: Node, index: Mapping[str, int], table: CoefficientTable | None) -> Callable:
    """Left-associated runs of + and - (or of *) as one loop, same evaluation order."""
    group = ("+", "-") if node.payload in ("+", "-") else ("*",)
    ops = []
    while node.kind == BINARY and node.payload in group:
        ops.append((node.payload, _compile(node.children[1], index, table)))
        node = node.children[0]
    first = _compile(node, index, table)
    ops.reverse()
    if group == ("*",):
        factors = [g for _, g in ops]

        def _product(p, t):
            acc = first(p, t)
            for g in factors:
                acc = acc * g(p, t)
            return acc
        return _product
    if len(ops) == 1:
        op, g = ops[0]
        if op == "+":
            return lambda p, t: first(p, t) + g(p, t)
        return lambda p, t: first(p, t) - g(p, t)
    terms = [(op == "+", g) for op, g in ops]

    def _sum(p, t):
        acc = first(p, t)
        for plus, g in terms:
            acc = acc + g(p, t) if plus else acc - g(p, t)
        return acc
    return _sum


# ---------------------------------------------------------------------------
# code generation: the same operations in the same order as :func:`_compile`,
# emitted as one Python function so evaluation avoids a call per node

def _div_helper(nodes):
    def _div(a, b, i):
        if (b if type(b) is float else diff.base_value(b)) == 0.0:
            raise DomainError("division by zero", pretty_print(nodes[i]))
        return a / b
    return _div


def _pow_helper(nodes):
    def _pow(base, ex, const_exponent, i):
        if const_exponent and float(ex).is_integer() and abs(ex) <= 1024:
            k = int(ex)
            if k < 0 and diff.base_value(base) == 0.0:
                raise DomainError("division by zero", pretty_print(nodes[i]))
            return diff.ipow(base, k)
        if diff.base_value(base) <= 0.0:
            raise DomainError("non-integer power of non-positive base", pretty_print(nodes[i]))
        return diff.exp(ex * diff.ln(base))
    return _pow


def _call_helper(nodes):
    def _call(fn, x, i):
        try:
            return fn(x)
        except (DomainError, OverflowError, ValueError) as exc:
            raise DomainError(str(exc), pretty_print(nodes[i])) from None
    return _call


class _CodeGen:
    def __init__(self, index: Mapping[str, int], table: CoefficientTable | None):
        self.index = index
        self.table = table
        self.nodes: list[Node] = []
        self.consts: list[Any] = []
        self.names = 0

    def const(self, value: Any) -> str:
        if isinstance(value, float) and value == value and abs(value) != float("inf"):
            return f"({value!r})"
        self.consts.append(value)
        return f"_k[{len(self.consts) - 1}]"

    def site(self, node: Node) -> int:
        self.nodes.append(node)
        return len(self.nodes) - 1

    def emit(self, node: Node) -> str:
        k = node.kind
        if k == LITERAL:
            return self.const(node.payload)
        if k == VARIABLE:
            return "t" if node.payload == TIME else f"p[{self.index[node.payload]}]"
        if k == COEFFICIENT:
            name = node.payload
            if self.table is None or name not in self.table:
                raise UnknownIdentifierError(f"unresolved coefficient {name!r}", 0)
            if self.table.time_dependent(name):
                return f"_coef({name!r}, t)"
            return self.const(self.table.value(name, 0.0))
        if k == UNARY:
            return f"(-{self.emit(node.children[0])})"
        if k == CALL:
            fn = self.const(diff.FUNCTIONS[node.payload])
            return f"_call({fn}, {self.emit(node.children[0])}, {self.site(node)})"
        op = node.payload
        if op in ("+", "-", "*"):
            group = ("+", "-") if op in ("+", "-") else ("*",)
            parts = []
            while node.kind == BINARY and node.payload in group:
                parts.append((node.payload, self.emit(node.children[1])))
                node = node.children[0]
            text = self.emit(node)
            for o, s in reversed(parts):
                text += f" {o} {s}"
            return f"({text})"
        if op == "/":
            return f"_div({self.emit(node.children[0])}, {self.emit(node.children[1])}, {self.site(node)})"
        base, ex = node.children
        if ex.kind == LITERAL and ex.payload.is_integer() and 0 < ex.payload <= 1024:
            kk = int(ex.payload)
            b = self.emit(base)
            if kk == 1:
                return b
            if kk <= 8:
                # repeated multiplication, left to right, as in diff.ipow
                name = f"_s{self.names}"
                self.names += 1
                return "((" + f"{name} := {b})" + f" * {name}" * (kk - 1) + ")"
            return f"_ipow({b}, {kk})"
        const_exponent = not (references(ex, VARIABLE) - {TIME})
        return f"_pow({self.emit(base)}, {self.emit(ex)}, {const_exponent}, {self.site(node)})"


def _generate(node: Node, index: Mapping[str, int], table: CoefficientTable | None) -> Callable:
    gen = _CodeGen(index, table)
    body = gen.emit(node)
    env = {
        "_k": gen.consts, "_div": _div_helper(gen.nodes), "_pow": _pow_helper(gen.nodes),
        "_call": _call_helper(gen.nodes), "_ipow": diff.ipow,
        "_coef": table.value if table is not None else None,
    }
    code = compile(f"def _field(p, t):\n    return {body}\n", "<expr>", "exec")
    exec(code, env)
    return env["_field"]


def compile_node(node: Node, coords: Sequence[str], table: CoefficientTable | None = None) -> Callable:
    index = {c: i for i, c in enumerate(coords)}
    missing = references(node, VARIABLE) - set(index) - {TIME}
    if missing:
        raise UnknownIdentifierError(f"unknown identifier {sorted(missing)[0]!r}", 0)
    try:
        return _generate(node, index, table)
    except (RecursionError, SyntaxError, MemoryError):
        # nesting beyond what the Python compiler accepts
        return _compile(node, index, table)


def evaluate(node: Node, point: Sequence, time: float, table: CoefficientTable | None = None,
             coords: Sequence[str] | None = None, carrier: str = "real"):
    """Evaluate a tree at ``point``.

    ``carrier="real"`` returns a float; ``carrier="jet"`` seeds every
    coordinate and returns a :class:`~nambuhj.diff.Jet` whose partials are
    the gradient.  When ``coords`` is omitted the variables are taken in
    order of first appearance, which only suits single-variable trees.
    """
    if coords is None:
        coords = _appearance_order(node)
    if len(point) != len(coords):
        raise ValueError(f"point has {len(point)} entries, expected {len(coords)}")
    fn = compile_node(node, coords, table)
    if carrier == "real":
        return float(fn([float(v) for v in point], time))
    if carrier == "jet":
        return fn(diff.seed([float(v) for v in point]), time)
    raise ValueError(f"unknown carrier {carrier!r}")


def _appearance_order(node: Node) -> list[str]:
    seen: list[str] = []

    def walk(n: Node):
        if n.kind == VARIABLE and n.payload != TIME and n.payload not in seen:
            seen.append(n.payload)
        for c in n.children:
            walk(c)
    walk(node)
    return seen
