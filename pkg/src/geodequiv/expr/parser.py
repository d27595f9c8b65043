"""Precedence-climbing parser for the expression grammar.

    ^  (right assoc)  >  unary -  >  *, /  >  +, -

Identifiers are chart coordinates, declared opaque functions, or the
elementary functions exp, log, sin, cos, sqrt, abs.  Formal derivatives are
written ``D(name, coord, order)``, ``D(f(x1, x2), coord, order)`` or with
primes, ``sigma''(x1)``.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Mapping, Sequence

import sympy as sp

ELEMENTARY = {
    "exp": sp.exp,
    "log": sp.log,
    "sin": sp.sin,
    "cos": sp.cos,
    "sqrt": sp.sqrt,
    "abs": sp.Abs,
}
RESERVED = set(ELEMENTARY) | {"D"}

_BINARY = {"+": (1, "left"), "-": (1, "left"), "*": (2, "left"), "/": (2, "left"), "^": (4, "right")}
_UNARY_PREC = 3

_TOKEN = re.compile(
    r"""(?P<ws>\s+)
      |(?P<num>\d+)
      |(?P<name>[A-Za-z][A-Za-z0-9_]*)(?P<primes>'*)
      |(?P<op>[-+*/^(),])
    """,
    re.VERBOSE,
)


class ParseError(ValueError):
    def __init__(self, message: str, text: str, pos: int):
        self.message = message
        self.pos = pos
        self.line = text.count("\n", 0, pos) + 1
        self.column = pos - (text.rfind("\n", 0, pos) + 1) + 1
        super().__init__(f"{message} (line {self.line}, column {self.column})")


@dataclass(frozen=True)
class Namespace:
    """Identifiers visible to the parser: coordinates and opaque functions (name -> arity)."""

    coords: Sequence[str]
    functions: Mapping[str, int]


@dataclass
class _Tok:
    kind: str
    text: str
    pos: int
    primes: int = 0


def tokenize(text: str) -> list[_Tok]:
    toks = []
    pos = 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m:
            raise ParseError(f"unexpected character {text[pos]!r}", text, pos)
        kind = m.lastgroup if m.lastgroup != "primes" else "name"
        if m.group("name"):
            toks.append(_Tok("name", m.group("name"), pos, len(m.group("primes"))))
        elif kind != "ws":
            toks.append(_Tok(kind, m.group(kind), pos))
        pos = m.end()
    toks.append(_Tok("end", "", len(text)))
    return toks


def parse(text: str, chart) -> sp.Expr:
    """Parse ``text`` over a chart (anything with ``coords`` and ``functions``)."""
    return _Parser(text, chart).parse()


class _Parser:
    def __init__(self, text, chart):
        self.text = text
        self.toks = tokenize(text)
        self.i = 0
        self.coords = {c: sp.Symbol(c) for c in chart.coords}
        self.functions = dict(getattr(chart, "functions", {}) or {})

    @property
    def tok(self):
        return self.toks[self.i]

    def error(self, msg, tok=None):
        raise ParseError(msg, self.text, (tok or self.tok).pos)

    def expect(self, text):
        if self.tok.text != text or self.tok.kind == "end":
            self.error(f"expected {text!r}, found {self.tok.text or 'end of input'!r}")
        self.i += 1

    def parse(self):
        if self.tok.kind == "end":
            self.error("empty expression")
        e = self.expression(0)
        if self.tok.kind != "end":
            self.error(f"unexpected {self.tok.text!r}")
        return e

    def expression(self, min_prec):
        lhs = self.unary()
        while self.tok.kind == "op" and self.tok.text in _BINARY:
            prec, assoc = _BINARY[self.tok.text]
            if prec < min_prec:
                break
            op_tok = self.tok
            self.i += 1
            rhs = self.expression(prec + 1 if assoc == "left" else prec)
            if op_tok.text == "/" and rhs == 0:
                self.error("division by literal zero", op_tok)
            lhs = _apply(op_tok.text, lhs, rhs)
        return lhs

    def unary(self):
        if self.tok.text == "-" and self.tok.kind == "op":
            self.i += 1
            return -self.expression(_UNARY_PREC)
        if self.tok.text == "+" and self.tok.kind == "op":
            self.i += 1
            return self.expression(_UNARY_PREC)
        return self.primary()

    def primary(self):
        tok = self.tok
        if tok.kind == "num":
            self.i += 1
            return sp.Integer(int(tok.text))
        if tok.text == "(":
            self.i += 1
            e = self.expression(0)
            self.expect(")")
            return e
        if tok.kind == "name":
            self.i += 1
            return self.name(tok)
        self.error(f"unexpected {tok.text or 'end of input'!r}")

    def arguments(self):
        self.expect("(")
        args = []
        if self.tok.text != ")":
            args.append(self.expression(0))
            while self.tok.text == ",":
                self.i += 1
                args.append(self.expression(0))
        self.expect(")")
        return args

    def name(self, tok):
        name = tok.text
        called = self.tok.text == "("
        if tok.primes and name not in self.functions:
            self.error(f"primes on non-function {name!r}", tok)
        if name == "D" and called and "D" not in self.functions:
            return self.derivative(tok)
        if name in ELEMENTARY and called:
            args = self.arguments()
            if len(args) != 1:
                self.error(f"{name} takes one argument, got {len(args)}", tok)
            return ELEMENTARY[name](args[0])
        if name in self.coords:
            if called:
                self.error(f"coordinate {name!r} is not a function", tok)
            return self.coords[name]
        if name in self.functions:
            return self.application(tok, called)
        self.error(f"unknown identifier {name!r}", tok)

    def application(self, tok, called):
        name, arity = tok.text, self.functions[tok.text]
        args = self.arguments() if called else []
        if len(args) != arity:
            self.error(f"{name} expects {arity} argument(s), got {len(args)}", tok)
        if arity == 0:
            if tok.primes:
                self.error(f"constant {name!r} has no derivatives", tok)
            return sp.Symbol(name)
        for a in args:
            if not a.is_Symbol or a.name not in self.coords:
                self.error(f"arguments of {name} must be coordinates", tok)
        if len(set(args)) != len(args):
            self.error(f"repeated argument in {name}", tok)
        f = sp.Function(name)(*args)
        if tok.primes:
            if arity != 1:
                self.error(f"prime notation needs a unary function, {name} has arity {arity}", tok)
            return sp.diff(f, args[0], tok.primes)
        return f

    def derivative(self, tok):
        self.expect("(")
        inner_tok = self.tok
        if inner_tok.kind == "name" and inner_tok.text in self.functions and self.toks[self.i + 1].text == ",":
            self.i += 1
            fname = inner_tok.text
            if self.functions[fname] != 1:
                self.error(f"D({fname}, ...) needs a unary function; write D({fname}(...), ...)", inner_tok)
            target = None
        else:
            target = self.expression(0)
        self.expect(",")
        coord_tok = self.tok
        if coord_tok.kind != "name" or coord_tok.text not in self.coords:
            self.error("second argument of D must be a coordinate", coord_tok)
        self.i += 1
        coord = self.coords[coord_tok.text]
        self.expect(",")
        order_tok = self.tok
        if order_tok.kind != "num":
            self.error("order of D must be a positive integer", order_tok)
        self.i += 1
        order = int(order_tok.text)
        self.expect(")")
        if order < 1:
            self.error("order of D must be a positive integer", order_tok)
        if target is None:
            target = sp.Function(inner_tok.text)(coord)
        from .core import is_jet

        if not is_jet(target):
            self.error("D applies to opaque functions only", inner_tok)
        return sp.diff(target, coord, order)


def _apply(op, a, b):
    if op == "+":
        return a + b
    if op == "-":
        return a - b
    if op == "*":
        return a * b
    if op == "/":
        return a / b
    return a**b
