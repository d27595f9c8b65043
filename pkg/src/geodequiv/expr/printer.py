"""Render expressions in the toolkit's input grammar.

Unary opaque derivatives print with primes (``sigma''(x1)``); partials of
functions of several arguments print as nested ``D(f(x1, x2), x1, 1)``.
"""

from __future__ import annotations

import sympy as sp
from sympy.core.function import AppliedUndef

_PREC_ADD, _PREC_MUL, _PREC_NEG, _PREC_POW, _PREC_ATOM = 1, 2, 3, 4, 5

_ELEMENTARY = {sp.exp: "exp", sp.log: "log", sp.sin: "sin", sp.cos: "cos", sp.Abs: "abs"}

MAX_PRIMES = 3


def to_text(e) -> str:
    return _Printer().show(sp.sympify(e))[0]


def _call(name, args):
    return f"{name}({', '.join(args)})"


class _Printer:
    def show(self, e) -> tuple[str, int]:
        if e.is_Integer:
            return (str(e), _PREC_ATOM) if e >= 0 else (str(e), _PREC_NEG)
        if e.is_Rational:
            text = f"{abs(e.p)}/{e.q}"
            return (text, _PREC_MUL) if e > 0 else ("-" + text, _PREC_NEG)
        if e.is_Symbol:
            return e.name, _PREC_ATOM
        if isinstance(e, AppliedUndef):
            if not e.args:
                return e.func.__name__, _PREC_ATOM
            return _call(e.func.__name__, [self.expr(a) for a in e.args]), _PREC_ATOM
        if isinstance(e, sp.Derivative):
            return self.derivative(e), _PREC_ATOM
        if e.is_Add:
            return self.add(e), _PREC_ADD
        if e.is_Mul:
            return self.mul(e)
        if e.is_Pow:
            return self.pow(e)
        for cls, name in _ELEMENTARY.items():
            if isinstance(e, cls):
                return _call(name, [self.expr(a) for a in e.args]), _PREC_ATOM
        raise ValueError(f"cannot print node {type(e).__name__}: {e}")

    def expr(self, e) -> str:
        return self.show(e)[0]

    def wrap(self, e, prec) -> str:
        text, p = self.show(e)
        return text if p >= prec else f"({text})"

    def derivative(self, d) -> str:
        f = d.expr
        counts = list(d.variable_count)
        if len(f.args) == 1 and len(counts) == 1 and counts[0][1] <= MAX_PRIMES:
            return f"{f.func.__name__}{chr(39) * counts[0][1]}({self.expr(f.args[0])})"
        inner = self.expr(f)
        for var, k in counts:
            inner = f"D({inner}, {var}, {k})"
        return inner

    def add(self, e) -> str:
        terms = e.as_ordered_terms()
        out = self.expr(terms[0])
        for t in terms[1:]:
            c, rest = t.as_coeff_Mul()
            if c.is_negative:
                out += " - " + self.wrap(-t, _PREC_MUL)
            else:
                out += " + " + self.wrap(t, _PREC_MUL)
        return out

    def mul(self, e) -> tuple[str, int]:
        c, rest = e.as_coeff_Mul()
        if c.is_negative:
            return "-" + self.wrap(-e, _PREC_MUL), _PREC_NEG
        num, den = [], []
        for f in e.as_ordered_factors():
            if f.is_Rational:
                if f.p != 1:
                    num.append(sp.Integer(f.p))
                if f.q != 1:
                    den.append(sp.Integer(f.q))
            elif f.is_Pow and f.args[1].is_Rational and f.args[1].is_negative:
                den.append(f.args[0] ** -f.args[1])
            else:
                num.append(f)
        top = " * ".join(self.wrap(f, _PREC_POW if f.is_Pow else _PREC_MUL + 1) for f in num) or "1"
        if not den:
            return top, _PREC_MUL
        bottom = " * ".join(self.wrap(f, _PREC_POW) for f in den)
        if len(den) > 1:
            bottom = f"({bottom})"
        if len(num) > 1:
            top = f"({top})"
        return f"{top}/{bottom}", _PREC_MUL

    def pow(self, e) -> tuple[str, int]:
        base, ex = e.args
        if ex == sp.Rational(1, 2):
            return _call("sqrt", [self.expr(base)]), _PREC_ATOM
        if ex.is_Rational and ex.is_negative:
            return f"1/{self.wrap(base ** -ex, _PREC_POW)}", _PREC_MUL
        b = self.wrap(base, _PREC_ATOM)
        if ex.is_Integer:
            return f"{b}^{ex}", _PREC_POW
        return f"{b}^({self.expr(ex)})", _PREC_POW
