"""Floating-point cross-checks: geodesic integration, the projective
(reparametrized-geodesic) criterion and finite-difference curvature.

Metrics with opaque functions are first made explicit with ``specialize``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping, Sequence

import mpmath
import numpy as np
import sympy as sp
from sympy.core.function import AppliedUndef

from .chart import Chart, Metric, christoffel, riemann
from .expr import jets

ORDER_TAG = "rk4"


class DomainExitError(ValueError):
    """The trajectory or stencil left the region where the chart assumptions hold."""


# ---------------------------------------------------------------------------
# making metrics explicit
# ---------------------------------------------------------------------------


def _substitute(e: sp.Expr, numeric: Mapping[str, sp.Expr]) -> sp.Expr:
    e = sp.sympify(e)
    consts = {sp.Symbol(k): sp.sympify(v) for k, v in numeric.items() if not _is_function_spec(v)}
    e = e.xreplace(consts)

    def is_target(a):
        return isinstance(a, AppliedUndef) and a.func.__name__ in numeric

    def replace(a):
        spec = sp.sympify(numeric[a.func.__name__])
        if isinstance(spec, sp.Lambda):
            return spec(*a.args)
        # an expression in the chart coordinates, e.g. 1 + x1^2/4 for sigma(x1)
        return spec

    return e.replace(is_target, replace).doit()


def _is_function_spec(v) -> bool:
    v = sp.sympify(v)
    return isinstance(v, sp.Lambda) or bool(v.free_symbols)


def specialize(g: Metric, numeric: Mapping[str, sp.Expr]) -> Metric:
    """Replace opaque functions and constants by explicit expressions."""
    ch = g.chart
    a = ch.assumptions
    pos = [_substitute(e, numeric) for e in a.positive]
    nz = [_substitute(e, numeric) for e in a.nonzero]
    sample = {k: v for k, v in a.sample.items() if isinstance(k, sp.Symbol) and k.name in ch.coords}
    funcs = {k: v for k, v in ch.functions.items() if k not in numeric}
    chart = Chart.make(ch.coords, funcs, [e for e in pos if not e.is_Number], [e for e in nz if not e.is_Number], sample)
    for e in pos:
        if e.is_Number and not e > 0:
            raise ValueError(f"specialization violates a positivity assumption: {e}")
    return Metric(chart, g.matrix.applyfunc(lambda e: _substitute(e, numeric)))


def jet_values(e: sp.Expr, point: Mapping, numeric: Mapping[str, sp.Expr]) -> dict:
    """Exact values of the jets in ``e`` at ``point`` under a specialization."""
    subs = {sp.Symbol(k) if isinstance(k, str) else k: sp.sympify(v) for k, v in point.items()}
    return {j: _substitute(j, numeric).xreplace(subs) for j in jets(sp.sympify(e))}


def evaluate(e: sp.Expr, point: Mapping, numeric: Mapping[str, sp.Expr] | None = None, dps: int = 40) -> mpmath.mpf:
    e = sp.sympify(e)
    subs = {sp.Symbol(k) if isinstance(k, str) else k: sp.sympify(v) for k, v in point.items()}
    if numeric:
        e = e.xreplace(jet_values(e, point, numeric))
        e = e.xreplace({sp.Symbol(k): sp.sympify(v) for k, v in numeric.items() if not _is_function_spec(v)})
    value = sp.N(e.xreplace(subs), dps)
    if value.free_symbols or not value.is_number:
        raise ValueError(f"expression is not numeric at the point: {value}")
    with mpmath.workdps(dps):
        return mpmath.mpf(sp.re(value)) if value.is_real is not False else mpmath.mpf(value)


# ---------------------------------------------------------------------------
# geodesic integration
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class GeodesicRun:
    metric: Metric
    point: Sequence
    velocity: Sequence
    h: float = 1e-3
    N: int = 1000
    order: str = ORDER_TAG

    def __post_init__(self):
        if not self.h > 0:
            raise ValueError("step size must be positive")
        if self.N < 1:
            raise ValueError("step count must be positive")
        if self.order != ORDER_TAG:
            raise ValueError(f"only the {ORDER_TAG!r} integrator is provided")
        n = self.metric.dim
        if len(self.point) != n or len(self.velocity) != n:
            raise ValueError(f"point and velocity need {n} components")
        if self.metric.chart.functions:
            raise ValueError("specialize opaque functions before integrating")


@dataclass(eq=False)
class Trajectory:
    """Samples (t, x, v) of a g-geodesic; ``metric`` is the integrated metric."""

    metric: Metric
    times: np.ndarray
    points: np.ndarray
    velocities: np.ndarray
    _field: "_GeodesicField" = field(repr=False, default=None)

    def __len__(self):
        return len(self.times)

    def __iter__(self):
        return iter(zip(self.points, self.velocities))

    def __getitem__(self, k):
        return self.points[k], self.velocities[k]

    def acceleration(self, k: int) -> np.ndarray:
        return self._field.acceleration(self.points[k], self.velocities[k])


class _GeodesicField:
    """Numeric Christoffel symbols, metric and assumption checks of a metric."""

    def __init__(self, g: Metric):
        n = g.dim
        syms = g.chart.symbols
        G = christoffel(g).components
        flat = [G[i, j, k] for i in range(n) for j in range(n) for k in range(n)]
        self.n = n
        self._gamma = sp.lambdify(syms, flat, modules="math")
        self._metric = sp.lambdify(syms, list(g.matrix), modules="math")
        a = g.chart.assumptions
        self._pos = sp.lambdify(syms, list(a.positive), modules="math") if a.positive else None
        self._nz = sp.lambdify(syms, list(a.nonzero), modules="math") if a.nonzero else None

    def gamma(self, x) -> np.ndarray:
        return np.asarray(self._gamma(*x), dtype=float).reshape(self.n, self.n, self.n)

    def metric(self, x) -> np.ndarray:
        return np.asarray(self._metric(*x), dtype=float).reshape(self.n, self.n)

    def acceleration(self, x, v) -> np.ndarray:
        return -np.einsum("ijk,j,k->i", self.gamma(x), v, v)

    def check_domain(self, x):
        if self._pos is not None and min(self._pos(*x)) <= 0:
            raise DomainExitError(f"positivity assumption fails at {list(x)}")
        if self._nz is not None and min(abs(np.asarray(self._nz(*x), dtype=float))) == 0:
            raise DomainExitError(f"nonvanishing assumption fails at {list(x)}")


def _field_of(g: Metric) -> _GeodesicField:
    return g.memo("numeric_geodesic_field", lambda: _GeodesicField(g))


def _as_float(values) -> np.ndarray:
    return np.array([float(Fraction(v)) if isinstance(v, (int, str, Fraction)) else float(v) for v in values])


def integrate_geodesic(run: GeodesicRun) -> Trajectory:
    """Classical fourth-order Runge-Kutta on x'' = -Gamma(x)(x', x')."""
    F = _field_of(run.metric)
    n = run.metric.dim
    x, v = _as_float(run.point), _as_float(run.velocity)
    F.check_domain(x)
    xs, vs = np.empty((run.N + 1, n)), np.empty((run.N + 1, n))
    xs[0], vs[0] = x, v
    h = run.h
    with np.errstate(all="raise"):
        for k in range(run.N):
            try:
                a1 = F.acceleration(x, v)
                x2, v2 = x + h / 2 * v, v + h / 2 * a1
                a2 = F.acceleration(x2, v2)
                x3, v3 = x + h / 2 * v2, v + h / 2 * a2
                a3 = F.acceleration(x3, v3)
                x4, v4 = x + h * v3, v + h * a3
                a4 = F.acceleration(x4, v4)
            except (ZeroDivisionError, FloatingPointError, ValueError) as exc:
                raise DomainExitError(f"evaluation singularity near {list(x)}: {exc}") from exc
            x = x + h / 6 * (v + 2 * v2 + 2 * v3 + v4)
            v = v + h / 6 * (a1 + 2 * a2 + 2 * a3 + a4)
            F.check_domain(x)
            xs[k + 1], vs[k + 1] = x, v
    return Trajectory(run.metric, h * np.arange(run.N + 1), xs, vs, F)


def energy(traj: Trajectory) -> np.ndarray:
    """g(x', x') along the trajectory."""
    F = traj._field
    return np.array([v @ F.metric(x) @ v for x, v in traj])


def energy_drift(traj: Trajectory) -> float:
    e = energy(traj)
    return float(abs(e[-1] - e[0]))


# ---------------------------------------------------------------------------
# projective criterion
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Deviation:
    maximum: float
    skipped: int
    samples: int


def projective_deviation_details(curve: Trajectory, gbar: Metric, null_tol: float = 1e-12) -> Deviation:
    """abar = x'' + Gammabar(x', x') with x'' taken from the g-geodesic equation.

    The part of abar that is gbar-orthogonal to x' is measured in the
    coordinate Euclidean norm and divided by |x'|^2.
    """
    Fb = _field_of(gbar)
    worst, skipped = 0.0, 0
    for k in range(len(curve)):
        x, v = curve[k]
        abar = curve.acceleration(k) + np.einsum("ijk,j,k->i", Fb.gamma(x), v, v)
        G = Fb.metric(x)
        vv = v @ G @ v
        speed2 = float(v @ v)
        if abs(vv) <= null_tol * max(1.0, speed2) or speed2 == 0:
            skipped += 1
            continue
        perp = abar - (v @ G @ abar) / vv * v
        worst = max(worst, float(np.linalg.norm(perp)) / speed2)
    return Deviation(worst, skipped, len(curve))


def projective_deviation(curve: Trajectory, gbar: Metric) -> float:
    return projective_deviation_details(curve, gbar).maximum


def random_runs(
    g: Metric,
    count: int,
    seed: int = 0,
    h: float = 1e-3,
    N: int = 1000,
    radius: float = 0.1,
    speed: float = 1.0,
) -> list[GeodesicRun]:
    """Initial data drawn near the chart's sample point."""
    rng = np.random.default_rng(seed)
    ch = g.chart
    centre = ch.sample_point()
    base = np.array([float(centre[s]) for s in ch.symbols])
    F = _field_of(g)
    runs = []
    while len(runs) < count:
        x = base + rng.uniform(-radius, radius, g.dim)
        v = rng.normal(size=g.dim)
        v *= speed / np.linalg.norm(v)
        try:
            F.check_domain(x)
        except DomainExitError:
            continue
        runs.append(GeodesicRun(g, list(x), list(v), h, N))
    return runs


# ---------------------------------------------------------------------------
# finite-difference curvature
# ---------------------------------------------------------------------------


def finite_difference_riemann(
    g: Metric,
    point: Mapping,
    step: float = 1e-4,
    numeric: Mapping[str, sp.Expr] | None = None,
    dps: int = 50,
) -> np.ndarray:
    """R^i_jkl from central differences of the metric components.

    First and second derivatives of g_ij use second-order central stencils at
    ``dps`` digits; Christoffel symbols, their derivatives and the Riemann
    tensor then follow from the same index formulas as the symbolic path.
    """
    n = g.dim
    coords = g.chart.symbols
    comps = g.matrix
    if numeric:
        comps = comps.applyfunc(lambda e: _substitute(e, numeric))
    if any(jets(e) for e in comps):
        raise ValueError("metric still contains opaque functions; pass a specialization")
    with mpmath.workdps(dps):
        f = sp.lambdify(coords, list(comps), modules="mpmath")
        x0 = [_mp(_lookup(point, s)) for s in coords]
        hs = mpmath.mpf(step)
        chk = _field_checker(g, numeric)

        def G(x):
            chk(x)
            return mpmath.matrix(_reshape(f(*x), n))

        def shifted(*moves):
            x = list(x0)
            for k, d in moves:
                x[k] += d * hs
            return G(x)

        g0 = G(x0)
        dg = [(shifted((m, 1)) - shifted((m, -1))) / (2 * hs) for m in range(n)]
        ddg = [[None] * n for _ in range(n)]
        for m in range(n):
            ddg[m][m] = (shifted((m, 1)) - 2 * g0 + shifted((m, -1))) / hs**2
            for q in range(m + 1, n):
                ddg[m][q] = ddg[q][m] = (
                    shifted((m, 1), (q, 1)) - shifted((m, 1), (q, -1)) - shifted((m, -1), (q, 1)) + shifted((m, -1), (q, -1))
                ) / (4 * hs**2)
        inv = g0**-1
        dinv = [-inv * dg[m] * inv for m in range(n)]

        def first(l, j, k, D=dg):
            return D[j][l, k] + D[k][l, j] - D[l][j, k]

        gamma = [[[sum(inv[i, l] * first(l, j, k) for l in range(n)) / 2 for k in range(n)] for j in range(n)] for i in range(n)]
        dgamma = [
            [
                [
                    [
                        sum(
                            dinv[m][i, l] * first(l, j, k) + inv[i, l] * (ddg[m][j][l, k] + ddg[m][k][l, j] - ddg[m][l][j, k])
                            for l in range(n)
                        )
                        / 2
                        for k in range(n)
                    ]
                    for j in range(n)
                ]
                for i in range(n)
            ]
            for m in range(n)
        ]
        out = np.empty((n, n, n, n), dtype=float)
        for i in range(n):
            for j in range(n):
                for k in range(n):
                    for l in range(n):
                        v = dgamma[k][i][l][j] - dgamma[l][i][k][j]
                        v += sum(gamma[i][k][s] * gamma[s][l][j] - gamma[i][l][s] * gamma[s][k][j] for s in range(n))
                        out[i, j, k, l] = float(v)
    return out


def _lookup(point: Mapping, s: sp.Symbol):
    return point[s] if s in point else point[s.name]


def _mp(v) -> mpmath.mpf:
    q = sp.Rational(v) if not isinstance(v, float) else None
    return mpmath.mpf(q.p) / q.q if q is not None else mpmath.mpf(v)


def _reshape(flat, n):
    return [[flat[i * n + j] for j in range(n)] for i in range(n)]


def _field_checker(g: Metric, numeric):
    a = g.chart.assumptions
    exprs = [(e, True) for e in a.positive] + [(e, False) for e in a.nonzero]
    if numeric:
        exprs = [(_substitute(e, numeric), pos) for e, pos in exprs]
    fs = [(sp.lambdify(g.chart.symbols, e, modules="mpmath"), pos, e) for e, pos in exprs if not jets(e)]

    def check(x):
        for fn, pos, e in fs:
            v = fn(*x)
            if (pos and not v > 0) or (not pos and v == 0):
                raise DomainExitError(f"stencil point violates {e} {'> 0' if pos else '!= 0'}")

    return check


def symbolic_riemann_at(g: Metric, point: Mapping, numeric: Mapping[str, sp.Expr] | None = None) -> np.ndarray:
    """The symbolic Riemann tensor of ``g`` evaluated at ``point``; jets take
    the values of their specialization."""
    R = riemann(g)
    n = g.dim
    out = np.empty((n,) * 4, dtype=float)
    for idx in R.indices():
        e = R[idx]
        out[idx] = 0.0 if e == 0 else float(evaluate(e, point, numeric))
    return out


def relative_error(symbolic: np.ndarray, oracle: np.ndarray) -> float:
    """max |symbolic - oracle| divided by max(1, max |symbolic|)."""
    scale = max(1.0, float(np.max(np.abs(symbolic))))
    return float(np.max(np.abs(symbolic - oracle))) / scale
