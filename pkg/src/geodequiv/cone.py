"""Metric cones and the parallel-tensor / Frobenius-solution correspondence.

Over a base (M, g) with coordinates x_1..x_n the cone carries coordinates
(r, x_1..x_n), r > 0, and the metric dr^2 + r^2 g.  A symmetric field

    T = [[mu,          -r lambda_j],
         [-r lambda_i,  r^2 a_ij  ]]

is parallel on the cone exactly when (a, lambda, mu) solves

    a_{ij,k} = lambda_i g_jk + lambda_j g_ik,
    lambda_{i,j} = mu g_ij - a_ij,
    mu_{,i} = -2 lambda_i,

i.e. the Frobenius system with B = -1.  No rescaling to B = -1 happens here.
"""

from __future__ import annotations

from dataclasses import dataclass

import sympy as sp

from .chart import Chart, Metric, TensorField, covariant_derivative
from .expr import Verdict, combine
from .projective import MetricPair, SolutionData, check_frobenius, reconstruct_metric, solution_from_a

RADIUS = "r"


class ConeStructureError(ValueError):
    """A field on the cone is not of the lifted form."""

    def __init__(self, message: str, verdict: Verdict | None = None):
        super().__init__(message)
        self.verdict = verdict


@dataclass(frozen=True, eq=False)
class ConeMetric:
    base: Metric
    metric: Metric

    @property
    def chart(self) -> Chart:
        return self.metric.chart

    @property
    def r(self) -> sp.Symbol:
        return sp.Symbol(RADIUS)


def cone_metric(g: Metric) -> ConeMetric:
    if RADIUS in g.chart.coords or RADIUS in g.chart.functions:
        raise ValueError(f"base chart already uses the name {RADIUS!r}")
    base = g.chart
    chart = Chart((RADIUS,) + base.coords, dict(base.functions), base.assumptions)
    chart = chart.extend(positive=[sp.Symbol(RADIUS)], sample={RADIUS: 1})
    r = sp.Symbol(RADIUS)
    n = g.dim
    m = sp.zeros(n + 1)
    m[0, 0] = 1
    m[1:, 1:] = r**2 * g.matrix
    return ConeMetric(g, Metric(chart, m))


def lift_to_cone(cm: ConeMetric, a: TensorField, lam_i: TensorField, mu) -> TensorField:
    ch, r = cm.chart, cm.r
    mu = sp.sympify(mu)

    def comp(al, be):
        if al == 0 and be == 0:
            return mu
        if al == 0:
            return -r * lam_i[be - 1]
        if be == 0:
            return -r * lam_i[al - 1]
        return r**2 * a[al - 1, be - 1]

    return TensorField.build(ch, "ll", lambda al, be: ch.canonical(comp(al, be)))


def lift_solution(cm: ConeMetric, s: SolutionData) -> TensorField:
    if s.mu is None:
        raise ValueError("solution has no mu attached")
    return lift_to_cone(cm, s.a, s.lam_i, s.mu)


def check_parallel(cm: ConeMetric, T: TensorField, seed: int = 0) -> Verdict:
    return covariant_derivative(T, cm.metric).verdict(seed)


def project_from_cone(cm: ConeMetric, T: TensorField, seed: int = 0) -> SolutionData:
    """Read off mu = T_00, lambda_i = -T_0i / r, a_ij = T_ij / r^2.

    The extracted fields must not depend on r; otherwise ConeStructureError
    names the offending component.  The result carries B = -1.
    """
    ch, r, g = cm.chart, cm.r, cm.base
    n = g.dim
    mu = ch.canonical(T[0, 0])
    lam = [ch.canonical(-T[0, i + 1] / r) for i in range(n)]
    a = [[ch.canonical(T[i + 1, j + 1] / r**2) for j in range(n)] for i in range(n)]
    named = [("mu", mu)] + [(f"lambda_{i + 1}", lam[i]) for i in range(n)]
    named += [(f"a_{i + 1}{j + 1}", a[i][j]) for i in range(n) for j in range(i, n)]
    for label, e in named:
        v = ch.is_zero(sp.diff(e, r), seed=seed)
        if not v.is_zero:
            raise ConeStructureError(f"{label} depends on r; T is not a lifted field", v)
    bch = g.chart
    a_t = TensorField.build(bch, "ll", lambda i, j: a[i][j])
    s = solution_from_a(g, a_t)
    lam_t = TensorField.build(bch, "l", lambda i: lam[i])
    return SolutionData(a_t, lam_t, s.lam, s.A, mu=mu, B=sp.Integer(-1))


def check_cone_solution(g: Metric, s: SolutionData, seed: int = 0) -> Verdict:
    """Frobenius system with B = -1 plus lambda_{,i} = lambda_i."""
    if s.B is None or s.B != -1:
        raise ValueError("cone solutions carry B = -1")
    ch = g.chart
    grad = combine(((i,), ch.is_zero(ch.diff(s.lam, i) - s.lam_i[i], seed=seed)) for i in range(g.dim))
    return combine([((0,), check_frobenius(g, s, seed)), ((1,), grad)])


# ---------------------------------------------------------------------------
# explicit instances
# ---------------------------------------------------------------------------


def spherical_cone(n: int = 2) -> ConeMetric:
    from .gallery import sphere

    return cone_metric(sphere(tuple(f"x{k}" for k in range(1, n + 1))))


def cartesian_map(cm: ConeMetric) -> list[sp.Expr]:
    """Cartesian coordinates of R^{n+1} as functions of (r, x_1..x_n) for the
    polar-coordinate sphere used in the gallery."""
    r, xs = cm.r, [sp.Symbol(c) for c in cm.base.chart.coords]
    out, prod = [], r
    for x in xs:
        out.append(prod * sp.cos(x))
        prod = prod * sp.sin(x)
    out.append(prod)
    return out


def pullback_constant(cm: ConeMetric, Q) -> TensorField:
    """Pullback of the constant symmetric matrix Q on Cartesian R^{n+1}; on the
    cone over the unit sphere it is parallel."""
    Q = sp.Matrix(Q)
    X = sp.Matrix(cartesian_map(cm))
    J = X.jacobian(sp.Matrix([sp.Symbol(c) for c in cm.chart.coords]))
    T = J.T * Q * J
    return TensorField.build(cm.chart, "ll", lambda i, j: cm.chart.canonical(T[i, j]))


def rank_one_field(cm: ConeMetric, v) -> TensorField:
    """V_alpha V_beta for V the pullback of the constant covector ``v``."""
    X = cartesian_map(cm)
    coords = [sp.Symbol(c) for c in cm.chart.coords]
    V = [sp.expand(sum(sp.sympify(v[k]) * sp.diff(X[k], c) for k in range(len(X)))) for c in coords]
    return TensorField.build(cm.chart, "ll", lambda i, j: cm.chart.canonical(V[i] * V[j]))


def sphere_cone_pair(Q=(1, 2, 3)) -> MetricPair:
    """Unit S^2 and the metric geodesically equivalent to it that the parallel
    field diag(Q) on the cone induces."""
    cm = spherical_cone(len(Q) - 1)
    s = project_from_cone(cm, pullback_constant(cm, sp.diag(*Q)))
    g = cm.base
    n = g.dim
    det = g.chart.canonical(sp.Matrix(n, n, lambda i, j: s.A[i, j]).det())
    # diag(Q) is positive definite, so A is; record det A > 0 on the chart
    chart = g.chart.extend(positive=[det])
    g2 = g.with_chart(chart)
    A = TensorField.build(chart, "ul", lambda i, j: s.A[i, j])
    return MetricPair(g2, reconstruct_metric(g2, A))
