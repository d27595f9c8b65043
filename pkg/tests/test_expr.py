from fractions import Fraction

import mpmath
import pytest
import sympy as sp
from hypothesis import given, settings
from hypothesis import strategies as st

from geodequiv.chart import Chart
from geodequiv.expr import (
    AssumptionError,
    Assumptions,
    DivisionByZeroError,
    EvaluationError,
    Namespace,
    ParseError,
    Verdict,
    VerdictKind,
    canonicalize,
    combine,
    differentiate,
    eval_interval,
    eval_numeric,
    is_zero,
    jets,
    parse,
    to_text,
    working_precision,
)

x1, x2, x3 = sp.symbols("x1 x2 x3")
sigma = sp.Function("sigma")
NS = Namespace(("x1", "x2", "x3"), {"sigma": 1, "f": 2, "C": 0})


def P(text):
    return parse(text, NS)


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------


@pytest.mark.parametrize(
    "text, expected",
    [
        ("1 + 2*3", 7),
        ("2^3^2", 2**9),
        ("-2^2", -4),
        ("(-2)^2", 4),
        ("8/4/2", 1),
        ("1 - 2 - 3", -4),
        ("x1^2*x2", x1**2 * x2),
        ("-x1*x2", -x1 * x2),
    ],
)
def test_precedence(text, expected):
    assert P(text) == sp.sympify(expected)


def test_opaque_functions_and_derivatives():
    s = sigma(x1)
    assert P("sigma(x1)") == s
    assert P("sigma'(x1)") == sp.diff(s, x1)
    assert P("sigma''(x1)") == sp.diff(s, x1, 2)
    assert P("D(sigma, x1, 3)") == sp.diff(s, x1, 3)
    f = sp.Function("f")(x1, x2)
    # mixed partials commute canonically
    assert P("D(D(f(x1, x2), x2, 1), x1, 1)") == P("D(D(f(x1, x2), x1, 1), x2, 1)")
    assert P("C") == sp.Symbol("C")


def test_elementary_functions():
    assert P("exp(x1) * log(x2)") == sp.exp(x1) * sp.log(x2)
    assert P("sqrt(x1) + abs(x2)") == sp.sqrt(x1) + sp.Abs(x2)
    assert P("sin(x1)^2 + cos(x1)^2") == sp.sin(x1) ** 2 + sp.cos(x1) ** 2


@pytest.mark.parametrize(
    "text, fragment, column",
    [
        ("x1 + y", "unknown identifier 'y'", 6),
        ("sigma(x1, x2)", "expects 1 argument", 1),
        ("f(x1)", "expects 2 argument", 1),
        ("sigma(x1 + 1)", "must be coordinates", 1),
        ("x1 / 0", "division by literal zero", 4),
        ("(x1 + 2", "expected ')'", 8),
        ("x1 $ 2", "unexpected character", 4),
        ("", "empty expression", 1),
        ("x1(2)", "not a function", 1),
        ("C'", "no derivatives", 1),
    ],
)
def test_parse_errors_report_position(text, fragment, column):
    with pytest.raises(ParseError) as info:
        P(text)
    assert fragment in str(info.value)
    assert info.value.line == 1
    assert info.value.column == column


def test_parse_error_on_later_line():
    with pytest.raises(ParseError) as info:
        P("x1 +\n  zz")
    assert (info.value.line, info.value.column) == (2, 3)


# ---------------------------------------------------------------------------
# printer round trip
# ---------------------------------------------------------------------------


@pytest.mark.parametrize(
    "e",
    [
        x1 / (x2 + 1),
        -x1**2 * sigma(x1) / 3,
        sp.diff(sigma(x1), x1, 2) * sp.exp(-x1),
        sp.diff(sp.Function("f")(x1, x2), x1, x2),
        sp.diff(sigma(x1), x1, 5),
        (x1 - 1) ** 2 * x2 ** sp.Rational(-3),
        sp.sqrt(x1) - sp.log(x2) * sp.sin(x3),
        sp.Rational(-7, 3),
    ],
)
def test_print_parse_round_trip(e):
    assert P(to_text(e)) == e


_leaf = st.sampled_from([x1, x2, x3, sigma(x1), sp.diff(sigma(x1), x1), sp.Symbol("C")])
_num = st.fractions(min_value=-5, max_value=5, max_denominator=7).map(sp.Rational)


def _combine_exprs(children):
    pair = st.tuples(children, children)
    return st.one_of(
        pair.map(lambda t: t[0] + t[1]),
        pair.map(lambda t: t[0] - t[1]),
        pair.map(lambda t: t[0] * t[1]),
        st.tuples(children, st.integers(-3, 3)).map(lambda t: t[0] ** t[1] if t[0] != 0 or t[1] > 0 else t[0]),
    )


exprs = st.recursive(st.one_of(_leaf, _num), _combine_exprs, max_leaves=8)


@settings(max_examples=150, deadline=None)
@given(exprs)
def test_round_trip_property(e):
    assert sp.simplify(P(to_text(e)) - e) == 0


@settings(max_examples=60, deadline=None)
@given(exprs, exprs)
def test_canonical_form_is_representation_independent(a, b):
    left = canonicalize(sp.expand((a + b) * (a - b)))
    right = canonicalize(a**2 - b**2)
    assert left == right


# ---------------------------------------------------------------------------
# canonical forms and rewrites
# ---------------------------------------------------------------------------


def test_trig_reduction():
    assert canonicalize(sp.sin(x1) ** 2 + sp.cos(x1) ** 2 - 1) == 0
    assert canonicalize(sp.cos(x1) ** 4 - (1 - sp.sin(x1) ** 2) ** 2) == 0


def test_abs_and_log_resolution():
    a = Assumptions(positive=(x1,), nonzero=(x2,))
    assert canonicalize(sp.Abs(x1) - x1, a) == 0
    assert canonicalize(sp.log(x1**2 * x3) - 2 * sp.log(x1) - sp.log(x3), Assumptions(positive=(x1, x3))) == 0
    assert canonicalize(sp.exp(sp.log(x1)) - x1, a) == 0
    assert canonicalize(sp.exp(x1) * sp.exp(x2) - sp.exp(x1 + x2)) == 0


def test_sign_inference():
    s = sigma(x1)
    a = Assumptions(positive=(x1, s), nonzero=(x2,))
    assert a.sign(x1 * s + 3) == 1
    assert a.sign(-x1**2) == -1
    assert a.sign(x2**2) == 1
    assert a.sign(x2) is None
    assert a.is_nonzero(x2 * x1)


def test_differentiate():
    s = sigma(x1)
    e = s**2 * x2
    assert differentiate(e, x1) == 2 * s * sp.diff(s, x1) * x2
    a = Assumptions(positive=(x1,))
    assert canonicalize(differentiate(sp.Abs(x1) ** 3, x1, a) - 3 * x1**2) == 0
    with pytest.raises(AssumptionError):
        differentiate(sp.Abs(x2), x2)
    with pytest.raises(AssumptionError):
        differentiate(sp.log(x2), x2)


def test_jets_collects_functions_and_partials():
    s = sigma(x1)
    assert jets(s * sp.diff(s, x1) + x2) == {s, sp.diff(s, x1)}


# ---------------------------------------------------------------------------
# evaluation and the zero test
# ---------------------------------------------------------------------------


def test_eval_interval_contains_exact_value():
    e = sp.Rational(1, 3) + sp.exp(x1)
    enc = eval_interval(e, {x1: sp.Rational(1, 2)}, 200)
    lo, hi = (mpmath.mp.make_mpf(r) for r in enc._mpi_)
    with mpmath.workprec(400):
        exact = mpmath.mpf(1) / 3 + mpmath.exp(mpmath.mpf(1) / 2)
        assert lo <= exact <= hi
        assert hi - lo < mpmath.mpf(2) ** -190


def test_eval_numeric_jet_values():
    e = sigma(x1) * sp.diff(sigma(x1), x1)
    v = eval_numeric(e, {x1: 1}, {"sigma(x1)": 3, "sigma'(x1)": Fraction(1, 2)})
    assert abs(v - mpmath.mpf(1.5)) < 1e-40


def test_division_by_zero_detected():
    with pytest.raises(DivisionByZeroError):
        eval_interval(1 / (x1 - 1), {x1: 1})
    with pytest.raises(EvaluationError):
        eval_interval(x1, {})


def test_is_zero_verdicts():
    assert is_zero(sp.sin(x1) ** 2 + sp.cos(x1) ** 2 - 1).kind is VerdictKind.ZERO
    v = is_zero(x1 - x2)
    assert v.kind is VerdictKind.NONZERO
    w = {sp.Symbol(k): sp.Rational(q) for k, q in v.witness.items()}
    assert abs(eval_numeric(x1 - x2, w) - v.value) < 1e-30
    assert v.residual is not None


def test_is_zero_never_claims_numeric_zero():
    tiny = sp.Rational(1, 10**60)
    v = is_zero(tiny * x1)
    assert v.kind is VerdictKind.UNKNOWN


def test_is_zero_is_seeded_and_deterministic():
    e = x1**2 - x2 * x3
    assert is_zero(e, seed=3).witness == is_zero(e, seed=3).witness
    assert is_zero(e, seed=3).witness != is_zero(e, seed=4).witness


def test_witness_respects_assumptions():
    a = Assumptions(positive=(x1 - 2,)).with_sample({x1: 3})
    v = is_zero(x1 - 5, a)
    assert v.is_nonzero
    assert v.witness["x1"] > 2


def test_working_precision():
    with working_precision(80):
        assert is_zero(x1 + 1).is_nonzero
    with pytest.raises(ValueError):
        with working_precision(10):
            pass


def test_combine_reports_lowest_failing_index():
    z = Verdict.zero()
    nz1 = Verdict.nonzero({"x1": Fraction(1)}, mpmath.mpf(1))
    nz2 = Verdict.nonzero({"x1": Fraction(2)}, mpmath.mpf(2))
    u = Verdict.unknown(x1)
    assert combine([((0,), z), ((2,), nz2), ((1,), nz1)]).index == (1,)
    assert combine([((0,), z), ((1,), u)]).kind is VerdictKind.UNKNOWN
    assert combine([((0,), u), ((3,), nz2)]).kind is VerdictKind.NONZERO
    assert combine([((0,), z)]).is_zero


def test_chart_rejects_bad_sample():
    with pytest.raises(ValueError):
        Chart.make("x1 x2", positive=["x1"], sample={"x1": -1})
