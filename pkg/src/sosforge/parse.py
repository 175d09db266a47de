"""Polynomial expression parser.

Grammar (implicit multiplication is not supported)::

    expr   := ['-'] term (('+' | '-') term)*
    term   := factor ('*' factor)*
    factor := base ('^' uint)?
    base   := number | ident | '(' expr ')'

Identifiers listed in ``dvars`` are lowered to decision variables, all
others to independent variables.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Iterable, Union

from .dpvar import DPoly, PPoly, add, mul, scale
from .errors import NonlinearityError, ParseError

_TOKEN = re.compile(
    r"\s*(?:"
    r"(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)"
    r"|(?P<ident>[A-Za-z_][A-Za-z0-9_]*)"
    r"|(?P<op>[-+*^()])"
    r")"
)


@dataclass(frozen=True)
class Num:
    value: float


@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class Sum:
    terms: tuple["PolyExpr", ...]
    signs: tuple[int, ...]


@dataclass(frozen=True)
class Product:
    factors: tuple["PolyExpr", ...]


@dataclass(frozen=True)
class Power:
    base: "PolyExpr"
    exponent: int


PolyExpr = Union[Num, Var, Sum, Product, Power]


def _tokenize(text: str) -> list[tuple[str, str, int]]:
    raw = text.encode()
    toks = []
    pos = 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None or m.end() == pos:
            if text[pos:].strip() == "":
                break
            off = pos + len(text[pos:]) - len(text[pos:].lstrip())
            raise ParseError(f"unexpected character {text[off]!r}", len(text[:off].encode()))
        kind = m.lastgroup
        if kind is None:
            break
        start = m.start(kind)
        toks.append((kind, m.group(kind), len(text[:start].encode())))
        pos = m.end()
    toks.append(("end", "", len(raw)))
    return toks


class _Parser:
    def __init__(self, text: str):
        self.toks = _tokenize(text)
        self.i = 0

    def peek(self):
        return self.toks[self.i]

    def take(self):
        tok = self.toks[self.i]
        self.i += 1
        return tok

    def expect_op(self, op: str):
        kind, val, off = self.take()
        if kind != "op" or val != op:
            raise ParseError(f"expected {op!r}, found {val or 'end of input'!r}", off)

    def expr(self) -> PolyExpr:
        terms, signs = [], []
        sign = 1
        kind, val, _ = self.peek()
        if kind == "op" and val == "-":
            self.take()
            sign = -1
        terms.append(self.term())
        signs.append(sign)
        while True:
            kind, val, _ = self.peek()
            if kind == "op" and val in "+-":
                self.take()
                terms.append(self.term())
                signs.append(1 if val == "+" else -1)
            else:
                break
        if len(terms) == 1 and signs[0] == 1:
            return terms[0]
        return Sum(tuple(terms), tuple(signs))

    def term(self) -> PolyExpr:
        factors = [self.factor()]
        while self.peek()[0] == "op" and self.peek()[1] == "*":
            self.take()
            factors.append(self.factor())
        return factors[0] if len(factors) == 1 else Product(tuple(factors))

    def factor(self) -> PolyExpr:
        base = self.base()
        if self.peek()[0] == "op" and self.peek()[1] == "^":
            self.take()
            kind, val, off = self.take()
            if kind != "num" or not val.isdigit():
                raise ParseError("exponent must be a nonnegative integer", off)
            return Power(base, int(val))
        return base

    def base(self) -> PolyExpr:
        kind, val, off = self.take()
        if kind == "num":
            return Num(float(val))
        if kind == "ident":
            return Var(val)
        if kind == "op" and val == "(":
            inner = self.expr()
            self.expect_op(")")
            return inner
        raise ParseError(f"unexpected {val or 'end of input'!r}", off)


def parse_expr(text: str) -> PolyExpr:
    """Parse ``text`` into an expression tree."""
    p = _Parser(text)
    tree = p.expr()
    kind, val, off = p.peek()
    if kind != "end":
        raise ParseError(f"unexpected {val!r}", off)
    return tree


def lower(tree: PolyExpr, dvars: Iterable[str] = ()) -> DPoly:
    """Evaluate an expression tree into a scalar :class:`DPoly`."""
    dvars = frozenset(dvars)

    def go(node) -> DPoly:
        if isinstance(node, Num):
            return DPoly.constant(node.value)
        if isinstance(node, Var):
            return DPoly.decvar(node.name) if node.name in dvars else DPoly.var(node.name)
        if isinstance(node, Sum):
            out = None
            for t, s in zip(node.terms, node.signs):
                part = go(t)
                if s < 0:
                    part = scale(part, -1.0)
                out = part if out is None else add(out, part)
            return out
        if isinstance(node, Product):
            out = go(node.factors[0])
            for f in node.factors[1:]:
                out = mul(out, go(f))
            return out
        if isinstance(node, Power):
            b = go(node.base)
            if b.q and node.exponent > 1:
                raise NonlinearityError("power of an expression containing decision variables")
            out = DPoly.constant(1.0)
            for _ in range(node.exponent):
                out = mul(out, b)
            return out
        raise TypeError(f"unknown node {node!r}")

    return go(tree)


def parse_poly(text: str) -> PPoly:
    """Parse a known polynomial (no decision variables)."""
    return PPoly.of(lower(parse_expr(text)))


def parse_dpoly(text: str, dvars: Iterable[str]) -> DPoly:
    """Parse a scalar polynomial whose identifiers in ``dvars`` are decision variables."""
    return lower(parse_expr(text), dvars)
