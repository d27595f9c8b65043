"""Exact expression kernel.

Expressions are plain sympy trees restricted to the node kinds the toolkit
needs: rationals, coordinate symbols, opaque function applications and their
formal partials, sums, products, rational powers and the elementary kernels
exp, log, sin, cos, sqrt and abs.

Zero-testing works on a canonical rational form in which every opaque jet
(an opaque function value or one of its formal partials) is an independent
indeterminate.  A structural zero is a proof of the identity for *all*
functions; anything else falls back to high-precision sampling, which can
refute an identity but never certify it.
"""

from __future__ import annotations

import contextlib
import contextvars
import enum
import random
import threading
from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Iterable, Mapping

import mpmath
import sympy as sp
from sympy.core.function import AppliedUndef

Expr = sp.Expr

DEFAULT_PRECISION = 200
ZERO_THRESHOLD = mpmath.mpf("1e-40")
DEFAULT_SAMPLES = 20

_IV_LOCK = threading.RLock()


class EvaluationError(ValueError):
    """Numeric evaluation failed (singular point, missing value, bad domain)."""


class DivisionByZeroError(EvaluationError, ZeroDivisionError):
    pass


class AssumptionError(ValueError):
    """An operation needs a sign or nonvanishing fact the assumptions do not give."""


# ---------------------------------------------------------------------------
# jets
# ---------------------------------------------------------------------------


def is_jet(e: Expr) -> bool:
    """True for opaque function values and their formal partial derivatives."""
    if isinstance(e, AppliedUndef):
        return True
    return isinstance(e, sp.Derivative) and isinstance(e.expr, AppliedUndef)


def jets(e: Expr) -> set[Expr]:
    found = set(e.atoms(AppliedUndef))
    found |= {d for d in e.atoms(sp.Derivative) if is_jet(d)}
    return found


def _normalize_derivative(d: sp.Derivative) -> Expr:
    # sp.diff orders mixed partials canonically; Derivative(...) does not
    return sp.diff(d.expr, *[v for v, k in d.variable_count for _ in range(k)])


def atoms_of(e: Expr) -> set[Expr]:
    """Free indeterminates of ``e``: symbols plus jets (not symbols inside jets)."""
    js = jets(e)
    inner = set()
    for j in js:
        inner |= j.free_symbols
    out = set(js)
    for s in e.free_symbols:
        if s not in inner or _occurs_outside_jets(e, s):
            out.add(s)
    return out


def _occurs_outside_jets(e: Expr, s: sp.Symbol) -> bool:
    if e == s:
        return True
    if is_jet(e):
        return False
    return any(_occurs_outside_jets(a, s) for a in e.args)


# ---------------------------------------------------------------------------
# verdicts
# ---------------------------------------------------------------------------


class VerdictKind(str, enum.Enum):
    ZERO = "zero"
    NONZERO = "nonzero"
    UNKNOWN = "unknown"


@dataclass(frozen=True)
class Verdict:
    """Three-valued outcome of an identity check.

    ``index`` locates the offending tensor component for aggregated checks.
    A NONZERO verdict always carries a witness point and the residual value
    there; an UNKNOWN verdict carries the unresolved residual.
    """

    kind: VerdictKind
    witness: Mapping[str, Fraction] | None = None
    value: mpmath.mpf | None = None
    residual: Expr | None = None
    index: tuple[int, ...] | None = None

    @classmethod
    def zero(cls) -> "Verdict":
        return cls(VerdictKind.ZERO)

    @classmethod
    def nonzero(cls, witness, value, residual=None, index=None) -> "Verdict":
        return cls(VerdictKind.NONZERO, dict(witness), value, residual, index)

    @classmethod
    def unknown(cls, residual, index=None) -> "Verdict":
        return cls(VerdictKind.UNKNOWN, residual=residual, index=index)

    @property
    def is_zero(self) -> bool:
        return self.kind is VerdictKind.ZERO

    @property
    def is_nonzero(self) -> bool:
        return self.kind is VerdictKind.NONZERO

    def at(self, index: tuple[int, ...]) -> "Verdict":
        return replace(self, index=tuple(index))

    def __repr__(self) -> str:
        if self.kind is VerdictKind.ZERO:
            return "Verdict(zero)"
        loc = f" at {self.index}" if self.index is not None else ""
        if self.kind is VerdictKind.NONZERO:
            return f"Verdict(nonzero{loc}, value={mpmath.nstr(self.value, 8)})"
        return f"Verdict(unknown{loc})"


def combine(items: Iterable[tuple[tuple[int, ...], Verdict]]) -> Verdict:
    """Aggregate componentwise verdicts.

    Zero only if every component is Zero; otherwise the NonZero component
    with the lowest index wins, then the lowest Unknown.
    """
    nonzero = unknown = None
    for idx, v in sorted(items, key=lambda p: p[0]):
        if v.is_nonzero and nonzero is None:
            nonzero = v.at(idx)
        elif v.kind is VerdictKind.UNKNOWN and unknown is None:
            unknown = v.at(idx)
    return nonzero or unknown or Verdict.zero()


# ---------------------------------------------------------------------------
# assumptions
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Assumptions:
    """Sign declarations ``e > 0`` / ``e != 0`` plus the point they hold at.

    ``sample`` maps indeterminates (coordinate symbols, constants, jets) to
    rationals; it seeds witness sampling and must satisfy every declaration.
    """

    positive: tuple[Expr, ...] = ()
    nonzero: tuple[Expr, ...] = ()
    sample: Mapping[Expr, sp.Rational] = field(default_factory=dict)

    def with_positive(self, *exprs: Expr) -> "Assumptions":
        return replace(self, positive=self.positive + tuple(sp.sympify(e) for e in exprs))

    def with_nonzero(self, *exprs: Expr) -> "Assumptions":
        return replace(self, nonzero=self.nonzero + tuple(sp.sympify(e) for e in exprs))

    def with_sample(self, values: Mapping[Expr, object]) -> "Assumptions":
        merged = dict(self.sample)
        merged.update({k: sp.Rational(v) for k, v in values.items()})
        return replace(self, sample=merged)

    def merged(self, other: "Assumptions") -> "Assumptions":
        sample = dict(self.sample)
        sample.update(other.sample)
        return Assumptions(
            _dedupe(self.positive + other.positive),
            _dedupe(self.nonzero + other.nonzero),
            sample,
        )

    # -- sign reasoning ----------------------------------------------------

    def sign(self, e: Expr, _depth: int = 0) -> int | None:
        """+1 / -1 if the declarations force the sign of ``e``, else None."""
        e = sp.sympify(e)
        if e.is_Number:
            if e.is_zero:
                return None
            return 1 if e.is_positive else -1
        if isinstance(e, sp.exp):
            return 1
        if isinstance(e, sp.Abs):
            return 1 if self.is_nonzero(e.args[0], _depth + 1) else None
        if e.is_Pow:
            base, ex = e.args
            if ex.is_Integer:
                if ex % 2 == 0:
                    return 1 if self.is_nonzero(base, _depth + 1) else None
                return self.sign(base, _depth + 1)
            if ex.is_Rational:
                return 1 if self.sign(base, _depth + 1) == 1 else None
            return None
        if e.is_Mul:
            s = 1
            for f in e.args:
                fs = self.sign(f, _depth + 1)
                if fs is None:
                    return self._declared_sign(e, _depth)
                s *= fs
            return s
        if e.is_Add:
            signs = {self.sign(t, _depth + 1) for t in e.args}
            if signs == {1} or signs == {-1}:
                return signs.pop()
            # positive terms plus terms that are squares of anything
            if 1 in signs and all(self.sign(t, _depth + 1) == 1 or self._nonnegative(t) for t in e.args):
                return 1
            if -1 in signs and all(self.sign(t, _depth + 1) == -1 or self._nonnegative(-t) for t in e.args):
                return -1
        return self._declared_sign(e, _depth)

    def _nonnegative(self, e: Expr) -> bool:
        if e.is_Number:
            return not e.is_negative
        if e.is_Pow and e.args[1].is_Integer and e.args[1] % 2 == 0:
            return True
        if isinstance(e, (sp.Abs, sp.exp)):
            return True
        if e.is_Mul or e.is_Add:
            return all(self._nonnegative(f) or self.sign(f) == 1 for f in e.args)
        return self.sign(e) == 1

    def _declared_sign(self, e: Expr, depth: int) -> int | None:
        for p in self.positive:
            if _rational_zero(e - p):
                return 1
            if _rational_zero(e + p):
                return -1
        if depth < 2:
            f = _factored(e)
            if f is not None and f != e:
                return self.sign(f, depth + 1)
        return None

    def is_nonzero(self, e: Expr, _depth: int = 0) -> bool:
        e = sp.sympify(e)
        if e.is_Number:
            return e != 0
        if isinstance(e, sp.exp):
            return True
        if e.is_Pow:
            base, ex = e.args
            if ex.is_Rational:
                return self.is_nonzero(base, _depth + 1)
        if e.is_Mul:
            if all(self.is_nonzero(f, _depth + 1) for f in e.args):
                return True
        if self.sign(e, _depth + 1) is not None:
            return True
        for q in self.nonzero + self.positive:
            if _rational_zero(e - q) or _rational_zero(e + q):
                return True
        if _depth < 2:
            f = _factored(e)
            if f is not None and f != e:
                return self.is_nonzero(f, _depth + 1)
        return False

    def holds_at(self, values: Mapping[Expr, object], precision_bits: int = 64) -> bool:
        """Check every declaration at a point (jets included in ``values``)."""
        try:
            for p in self.positive:
                if not eval_interval(p, values, precision_bits=precision_bits).a > 0:
                    return False
            for q in self.nonzero:
                iv = eval_interval(q, values, precision_bits=precision_bits)
                if iv.a <= 0 <= iv.b:
                    return False
        except EvaluationError:
            return False
        return True

    def atoms(self) -> set[Expr]:
        out: set[Expr] = set()
        for e in self.positive + self.nonzero:
            out |= atoms_of(e)
        return out


def _dedupe(exprs):
    seen = []
    for e in exprs:
        if e not in seen:
            seen.append(e)
    return tuple(seen)


def _factored(e: Expr) -> Expr | None:
    forward, back = _jet_dummies(e)
    try:
        f = sp.factor(e.xreplace(forward))
    except (sp.PolynomialError, TypeError, ValueError):
        return None
    return f.xreplace(back)


# ---------------------------------------------------------------------------
# rewriting and canonical form
# ---------------------------------------------------------------------------


def _jet_dummies(e: Expr):
    forward, back = {}, {}
    for j in sorted(jets(e), key=sp.default_sort_key):
        d = sp.Dummy(f"j{len(forward)}")
        forward[j] = d
        back[d] = j
    return forward, back


def rewrite(e: Expr, assumptions: Assumptions | None = None) -> Expr:
    """Apply the assumption-aware simplifications ahead of canonicalization.

    exp(a)*exp(b) -> exp(a+b); log of a product/power of positive factors is
    expanded; log|u| with u merely nonzero becomes log(u^2)/2; abs(u) is
    resolved when the sign of u is declared.  sqrt(u)^2 -> u and
    exp(log u) -> u are done by sympy at construction time.
    """
    a = assumptions or Assumptions()
    e = sp.sympify(e)
    if e.atoms(sp.Derivative):
        e = e.replace(lambda x: isinstance(x, sp.Derivative) and is_jet(x), _normalize_derivative)
    if e.has(sp.Abs):
        e = e.replace(lambda x: isinstance(x, sp.Abs), lambda x: _resolve_abs(x, a))
    if e.has(sp.log):
        e = e.replace(lambda x: isinstance(x, sp.log), lambda x: _expand_log(x.args[0], a))
    if e.has(sp.exp):
        e = sp.powsimp(e, combine="exp", deep=True)
        e = e.replace(lambda x: isinstance(x, sp.exp), lambda x: sp.exp(sp.expand(x.args[0])))
    return e


def _resolve_abs(x: sp.Abs, a: Assumptions) -> Expr:
    u = x.args[0]
    s = a.sign(u)
    if s == 1:
        return u
    if s == -1:
        return -u
    return x


def _expand_log(u: Expr, a: Assumptions) -> Expr:
    if isinstance(u, sp.Abs):
        inner = u.args[0]
        s = a.sign(inner)
        if s == 1:
            return _expand_log(inner, a)
        if s == -1:
            return _expand_log(-inner, a)
        if a.is_nonzero(inner):
            return _expand_log(inner**2, a) / 2
        return sp.log(u)
    if u.is_Pow and u.args[1].is_Rational and a.sign(u.args[0]) == 1:
        return u.args[1] * _expand_log(u.args[0], a)
    if u.is_Mul and all(a.sign(f) == 1 for f in u.args):
        return sp.Add(*[_expand_log(f, a) for f in u.args])
    if u.is_Rational and u > 0 and u != 1:
        # log of a rational is kept as a sum over prime powers for canonical merge
        out = sp.Integer(0)
        for prime, k in sp.factorint(u.p).items():
            out += k * sp.log(sp.Integer(prime))
        for prime, k in sp.factorint(u.q).items():
            out -= k * sp.log(sp.Integer(prime))
        return out
    return sp.log(u)


def _trig_reduce(p: Expr) -> Expr:
    for c in sorted(p.atoms(sp.cos), key=sp.default_sort_key):
        s = sp.sin(c.args[0])
        if p.has(c) and sp.Poly(p, c).degree() >= 2:
            p = sp.expand(sp.rem(p, c**2 + s**2 - 1, c))
    return p


def rational_parts(e: Expr) -> tuple[Expr, Expr]:
    """Expanded numerator and denominator of the canonical rational form."""
    forward, back = _jet_dummies(e)
    r = sp.cancel(e.xreplace(forward))
    num, den = sp.fraction(r)
    num, den = sp.expand(num), sp.expand(den)
    if num.has(sp.cos) or den.has(sp.cos):
        rn, rd = _trig_reduce(num), _trig_reduce(den)
        if (rn, rd) != (num, den):
            num, den = sp.fraction(sp.cancel(rn / rd))
            num, den = sp.expand(num), sp.expand(den)
    return num.xreplace(back), den.xreplace(back)


def canonicalize(e: Expr, assumptions: Assumptions | None = None) -> Expr:
    """Single fraction of expanded polynomials over coordinates, jets and kernels."""
    e = rewrite(sp.sympify(e), assumptions)
    num, den = rational_parts(e)
    if num == 0:
        return sp.Integer(0)
    if den == 1:
        return num
    return num / den


def _rational_zero(e: Expr) -> bool:
    forward, _ = _jet_dummies(e)
    try:
        return sp.cancel(e.xreplace(forward)) == 0
    except sp.PolynomialError:
        return False


# ---------------------------------------------------------------------------
# differentiation
# ---------------------------------------------------------------------------


def differentiate(e: Expr, coord: sp.Symbol, assumptions: Assumptions | None = None) -> Expr:
    """Partial derivative; jets differentiate to formal partials.

    abs(u) must be sign-resolved by the assumptions, and log(u) needs u
    declared positive or nonzero, whenever u depends on ``coord``.
    """
    a = assumptions or Assumptions()
    e = rewrite(sp.sympify(e), a)
    for x in e.atoms(sp.Abs):
        if x.has(coord):
            raise AssumptionError(f"cannot differentiate {x}: sign of {x.args[0]} is not fixed")
    for x in e.atoms(sp.log):
        u = x.args[0]
        if u.has(coord) and not a.is_nonzero(u):
            raise AssumptionError(f"cannot differentiate {x}: {u} is not declared positive or nonzero")
    return sp.diff(e, coord)


# ---------------------------------------------------------------------------
# numeric evaluation
# ---------------------------------------------------------------------------


def _lookup_table(values: Mapping) -> dict:
    from .printer import to_text

    table = {}
    for k, v in values.items():
        key = sp.Symbol(k) if isinstance(k, str) else k
        table[key] = v
        if isinstance(k, str):
            table[k] = v
        else:
            table[to_text(k)] = v
    return table


def eval_interval(e: Expr, values: Mapping, precision_bits: int = DEFAULT_PRECISION):
    """Interval enclosure of ``e`` at a point (mapping atoms -> rationals)."""
    table = _lookup_table(values)
    iv = mpmath.iv
    with _IV_LOCK:
        old = iv.prec
        iv.prec = precision_bits + 16
        try:
            return _Evaluator(table).run(sp.sympify(e))
        finally:
            iv.prec = old


def eval_numeric(
    e: Expr,
    point: Mapping,
    fn_values: Mapping | None = None,
    precision_bits: int = DEFAULT_PRECISION,
) -> mpmath.mpf:
    """Evaluate at a rational point; jets take their values from ``fn_values``."""
    values = dict(point)
    if fn_values:
        values.update(fn_values)
    enclosure = eval_interval(e, values, precision_bits)
    with mpmath.workprec(precision_bits):
        return mpmath.mpf(enclosure.mid.a)


class _Evaluator:
    def __init__(self, table):
        self.table = table
        self.cache = {}

    def run(self, e):
        hit = self.cache.get(e)
        if hit is None:
            hit = self.cache[e] = self._eval(e)
        return hit

    def _leaf(self, e):
        from .printer import to_text

        for key in (e, to_text(e)):
            if key in self.table:
                v = self.table[key]
                return _to_interval(v)
        raise EvaluationError(f"no value assigned to {to_text(e)}")

    def _eval(self, e):
        iv = mpmath.iv
        if e.is_Integer:
            return iv.mpf(int(e))
        if e.is_Rational:
            return iv.mpf(int(e.p)) / int(e.q)
        if e.is_Float:
            return iv.mpf(str(e))
        if e is sp.pi:
            return iv.pi
        if e is sp.E:
            return iv.e
        if e.is_Symbol or is_jet(e):
            return self._leaf(e)
        if e.is_Add:
            out = iv.mpf(0)
            for t in e.args:
                out += self.run(t)
            return out
        if e.is_Mul:
            out = iv.mpf(1)
            for f in e.args:
                out *= self.run(f)
            return out
        if e.is_Pow:
            base, ex = e.args
            b = self.run(base)
            if ex.is_Integer:
                k = int(ex)
                if k < 0:
                    if b.a <= 0 <= b.b:
                        raise DivisionByZeroError(f"division by zero in {e}")
                    return 1 / _ipow(b, -k)
                return _ipow(b, k)
            if not b.a > 0:
                raise EvaluationError(f"non-integer power of a nonpositive value in {e}")
            x = self.run(ex)
            return iv.exp(x * iv.log(b))
        if isinstance(e, sp.exp):
            return iv.exp(self.run(e.args[0]))
        if isinstance(e, sp.log):
            u = self.run(e.args[0])
            if not u.a > 0:
                raise EvaluationError(f"log of a nonpositive value in {e}")
            return iv.log(u)
        if isinstance(e, sp.sin):
            return iv.sin(self.run(e.args[0]))
        if isinstance(e, sp.cos):
            return iv.cos(self.run(e.args[0]))
        if isinstance(e, sp.Abs):
            return abs(self.run(e.args[0]))
        raise EvaluationError(f"unsupported node {type(e).__name__}")


def _ipow(b, k):
    # iv ** int widens through exp/log for intervals straddling zero
    out = mpmath.iv.mpf(1)
    for _ in range(k):
        out *= b
    if k % 2 == 0 and k > 0 and out.a < 0:
        out = mpmath.iv.mpf([0, out.b])
    return out


def _to_interval(v):
    iv = mpmath.iv
    if isinstance(v, Fraction):
        return iv.mpf(v.numerator) / v.denominator
    if isinstance(v, (sp.Rational, sp.Integer)):
        return iv.mpf(int(v.p)) / int(v.q)
    if isinstance(v, int):
        return iv.mpf(v)
    if isinstance(v, str):
        r = sp.Rational(v)
        return iv.mpf(int(r.p)) / int(r.q)
    if isinstance(v, sp.Expr):
        return _Evaluator({}).run(v)
    return iv.mpf(v)


# ---------------------------------------------------------------------------
# zero testing
# ---------------------------------------------------------------------------


def sample_points(
    atoms: Iterable[Expr],
    assumptions: Assumptions,
    count: int,
    seed: int = 0,
    max_tries: int = 400,
) -> list[dict[Expr, sp.Rational]]:
    """Deterministic random rational points satisfying the assumptions.

    Atoms with a declared sample value are drawn from a unit box around it;
    the rest from [1/4, 9/4].  Denominators are kept small so witnesses stay
    readable.
    """
    from .printer import to_text

    ordered = sorted(set(atoms) | assumptions.atoms(), key=to_text)
    rng = random.Random(seed)
    points = []
    tries = 0
    while len(points) < count and tries < max_tries:
        tries += 1
        pt = {}
        for x in ordered:
            centre = assumptions.sample.get(x)
            if centre is None:
                centre = sp.Rational(5, 4)
            offset = sp.Rational(rng.randint(-48, 48), 97)
            pt[x] = sp.Rational(centre) + offset
        if assumptions.holds_at(pt):
            points.append(pt)
    return points


_PRECISION: contextvars.ContextVar[int] = contextvars.ContextVar("precision", default=DEFAULT_PRECISION)


@contextlib.contextmanager
def working_precision(bits: int):
    """Set the interval precision used by ``is_zero`` when none is passed."""
    if bits < 53:
        raise ValueError("precision must be at least 53 bits")
    token = _PRECISION.set(int(bits))
    try:
        yield
    finally:
        _PRECISION.reset(token)


def is_zero(
    e: Expr,
    assumptions: Assumptions | None = None,
    *,
    seed: int = 0,
    precision_bits: int | None = None,
    samples: int = DEFAULT_SAMPLES,
    threshold: mpmath.mpf = ZERO_THRESHOLD,
) -> Verdict:
    """Zero / NonZero(witness) / Unknown(residual); never a silent numeric Zero."""
    from .printer import to_text

    a = assumptions or Assumptions()
    if precision_bits is None:
        precision_bits = _PRECISION.get()
    canon = canonicalize(e, a)
    if canon == 0:
        return Verdict.zero()
    points = sample_points(atoms_of(canon), a, samples, seed=seed)
    for pt in points:
        try:
            value = eval_interval(canon, pt, precision_bits)
        except EvaluationError:
            continue
        if value.a > threshold or value.b < -threshold:
            witness = {to_text(k): Fraction(int(v.p), int(v.q)) for k, v in pt.items()}
            with mpmath.workprec(precision_bits):
                return Verdict.nonzero(witness, mpmath.mpf(value.mid.a), residual=canon)
    return Verdict.unknown(canon)
