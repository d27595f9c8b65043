"""Explicit metrics and metric pairs used throughout the test-suite.

Base metrics (``flat``, ``ppwave``, ``sphere``) are built over caller-chosen
coordinate names so they can be embedded as blocks of larger metrics.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Sequence

import sympy as sp

from .chart import Chart, Metric, TensorField, covariant_derivative, ricci, scalar_curvature
from .expr import Verdict, VerdictKind
from .projective import MetricPair, reconstruct_metric


class PreconditionError(ValueError):
    def __init__(self, message: str, verdict: Verdict | None = None):
        super().__init__(message)
        self.verdict = verdict


def _coords(names: Sequence[str] | str) -> tuple[str, ...]:
    return tuple(names.split()) if isinstance(names, str) else tuple(names)


def _default_coords(n: int, start: int = 1) -> tuple[str, ...]:
    return tuple(f"x{k}" for k in range(start, start + n))


# ---------------------------------------------------------------------------
# base metrics
# ---------------------------------------------------------------------------


def flat(coords: Sequence[str] | str, signature: Sequence[int] | None = None) -> Metric:
    names = _coords(coords)
    chart = Chart.make(names, sample={c: 1 for c in names})
    diag = signature or [1] * len(names)
    return Metric(chart, sp.diag(*diag))


def ppwave(coords: Sequence[str] | str = "u v y") -> Metric:
    """2 du dv + y^2 du^2 + dy^2 extended by flat directions beyond three coordinates.

    Scalar curvature vanishes identically while the Riemann tensor does not.
    """
    names = _coords(coords)
    if len(names) < 3:
        raise ValueError("a pp-wave needs at least three coordinates")
    u, v, y = (sp.Symbol(c) for c in names[:3])
    m = sp.zeros(len(names))
    m[0, 0] = y**2
    m[0, 1] = m[1, 0] = 1
    for k in range(2, len(names)):
        m[k, k] = 1
    chart = Chart.make(names, sample={c: 1 for c in names})
    return Metric(chart, m)


def sphere(coords: Sequence[str] | str = "x1 x2") -> Metric:
    """Unit round sphere in polar coordinates (dimension = number of coordinates)."""
    names = _coords(coords)
    syms = [sp.Symbol(c) for c in names]
    diag = [sp.Integer(1)]
    for k in range(1, len(names)):
        diag.append(diag[-1] * sp.sin(syms[k - 1]) ** 2)
    positive = [sp.sin(s) for s in syms[:-1]]
    sample = {c: 1 for c in names}
    chart = Chart.make(names, positive=positive, sample=sample)
    return Metric(chart, sp.diag(*diag))


def base_metric(kind: str, coords: Sequence[str] | str) -> Metric:
    kinds = {"flat": flat, "ppwave": ppwave, "sphere": sphere}
    if kind not in kinds:
        raise ValueError(f"unknown base metric {kind!r}; choose from {sorted(kinds)}")
    return kinds[kind](coords)


def _merge_chart(coords, blocks: Sequence[Metric], functions=None, positive=(), nonzero=(), sample=None) -> Chart:
    funcs = {}
    for b in blocks:
        funcs.update(b.chart.functions)
    funcs.update(functions or {})
    chart = Chart.make(coords, funcs, sample={c: 1 for c in coords})
    for b in blocks:
        chart = Chart(chart.coords, funcs, chart.assumptions.merged(b.chart.assumptions))
    return chart.extend(positive, nonzero, sample)


# ---------------------------------------------------------------------------
# pairs
# ---------------------------------------------------------------------------


def flat_projective_pair(n: int = 3, projective_map=None) -> MetricPair:
    """Euclidean metric and its pullback under x -> (M x + b) / (c.x + d).

    ``projective_map`` is (M, b, c, d) with rational entries; the default
    divides by 1 + x1.
    """
    coords = _default_coords(n)
    X = sp.Matrix([sp.Symbol(c) for c in coords])
    if projective_map is None:
        M, b, c, d = sp.eye(n), sp.zeros(n, 1), sp.Matrix([[1] + [0] * (n - 1)]), sp.Integer(1)
    else:
        M, b, c, d = projective_map
        M, b, c, d = sp.Matrix(M), sp.Matrix(b).reshape(n, 1), sp.Matrix(c).reshape(1, n), sp.sympify(d)
    big = M.row_join(b).col_join(c.row_join(sp.Matrix([[d]])))
    if big.det() == 0:
        raise PreconditionError("degenerate projective map")
    denom = sp.expand((c * X)[0, 0] + d)
    positive = [] if denom.is_Number else [denom]
    sample = {co: sp.Rational(1, 2) for co in coords}
    chart = Chart.make(coords, positive=positive, sample=sample)
    if denom.is_Number and denom == 0:
        raise PreconditionError("degenerate projective map")
    image = (M * X + b) / denom
    J = image.jacobian(X)
    gbar = (J.T * J).applyfunc(chart.canonical)
    g = Metric(chart, sp.eye(n))
    return MetricPair(g, Metric(chart, gbar))


def zero_scalar_product_pair(h: Metric) -> MetricPair:
    """dx1^2 + h and dx1^2 + 2h for h of zero scalar curvature (h must not use x1)."""
    v = h.chart.is_zero(scalar_curvature(h))
    if not v.is_zero:
        raise PreconditionError("h must have zero scalar curvature", v)
    coords = ("x1",) + h.chart.coords
    if "x1" in h.chart.coords:
        raise ValueError("h must not use the coordinate name x1")
    chart = _merge_chart(coords, [h])
    m = h.dim
    g = sp.zeros(m + 1)
    gbar = sp.zeros(m + 1)
    g[0, 0] = gbar[0, 0] = 1
    g[1:, 1:] = h.matrix
    gbar[1:, 1:] = 2 * h.matrix
    return MetricPair(Metric(chart, g), Metric(chart, gbar))


def warped_pair(sigma: str | sp.Expr = "sigma", C: str | int | sp.Rational = "C", h: Metric | None = None, n: int = 4) -> MetricPair:
    """g = diag(1, sigma(x1) h) and its geodesically equivalent partner

        gbar = C^{1-n} diag(1/(sigma+C)^2, sigma/((sigma+C) C) h).

    ``sigma`` is an opaque function name or an explicit expression in x1;
    ``C`` a constant name or a rational.  Assumes sigma != 0, C > 0 and
    sigma + C > 0 so every absolute value resolves.
    """
    if h is None:
        h = flat(_default_coords(n - 1, 2))
    n = h.dim + 1
    coords = ("x1",) + h.chart.coords
    x1 = sp.Symbol("x1")
    functions = {}
    sample = {"x1": sp.Rational(1, 2)}
    if isinstance(sigma, str):
        functions[sigma] = 1
        s = sp.Function(sigma)(x1)
        sample[f"{sigma}(x1)"] = 2
    else:
        s = sp.sympify(sigma)
    if isinstance(C, str):
        functions[C] = 0
        c = sp.Symbol(C)
        sample[C] = 1
    else:
        c = sp.Rational(C)
    chart = _merge_chart(coords, [h], functions)
    chart = chart.extend(positive=[c, s + c] if not c.is_Number else [s + c], nonzero=[s], sample=sample)
    g = sp.zeros(n)
    gbar = sp.zeros(n)
    g[0, 0] = 1
    g[1:, 1:] = s * h.matrix
    gbar[0, 0] = 1 / (s + c) ** 2
    gbar[1:, 1:] = s / ((s + c) * c) * h.matrix
    gbar = (gbar / c ** (n - 1)).applyfunc(chart.canonical)
    return MetricPair(Metric(chart, g), Metric(chart, gbar))


def counterexample_pair(n: int = 5, h: Metric | None = None, C=1) -> tuple[MetricPair, TensorField]:
    """g with an anti-diagonal x1 block and (x2 - C)^2 h, the Jordan-type
    endomorphism A, and gbar reconstructed from (g, A).

    h lives on x3..xn, so it is (n-2)-dimensional, and must have zero
    scalar curvature.
    """
    if h is None:
        h = ppwave(_default_coords(n - 2, 3))
    if h.dim != n - 2:
        raise ValueError(f"h must be {n - 2}-dimensional for n = {n}")
    v = h.chart.is_zero(scalar_curvature(h))
    if not v.is_zero:
        raise PreconditionError("h must have zero scalar curvature", v)
    coords = ("x1", "x2") + h.chart.coords
    x1, x2 = sp.symbols("x1 x2")
    functions = {}
    sample = {"x1": 1, "x2": 3}
    if isinstance(C, str):
        functions[C] = 0
        c = sp.Symbol(C)
        sample[C] = 1
    else:
        c = sp.Rational(C)
        if c == 0:
            raise PreconditionError("C must be nonzero")
    chart = _merge_chart(coords, [h], functions)
    # a symbolic C is taken positive so that |det A| has a known sign
    chart = chart.extend(positive=[] if c.is_Number else [c], nonzero=[x1, x2, x2 - c], sample=sample)
    g = sp.zeros(n)
    g[0, 1] = g[1, 0] = x1
    g[2:, 2:] = (x2 - c) ** 2 * h.matrix
    A = sp.zeros(n)
    A[0, 0] = A[1, 1] = x2
    A[0, 1] = x1
    for k in range(2, n):
        A[k, k] = c
    gm = Metric(chart, g)
    At = TensorField.build(chart, "ul", lambda i, j: A[i, j])
    return MetricPair(gm, reconstruct_metric(gm, At)), At


def scaled_pair(g: Metric, c) -> MetricPair:
    """(g, c g) for a positive constant c."""
    c = sp.sympify(c)
    chart = g.chart
    if not c.is_Number:
        name = str(c)
        chart = chart.extend(positive=[c], sample={c: 2}, functions={name: 0})
        g = g.with_chart(chart)
    return MetricPair(g, Metric(chart, c * g.matrix))


@dataclass(frozen=True)
class WarpedObstruction:
    """Structure of the Einstein-tensor difference of a warped pair.

    ``coefficient`` is f with residual_ij = f h_ij on the block i, j >= 2;
    ``block`` certifies that identity; ``multiplicity`` is the power of
    sigma' dividing f; ``vanishes`` is the verdict on the full residual after
    setting sigma' = 0.
    """

    coefficient: sp.Expr
    block: Verdict
    multiplicity: int
    vanishes: Verdict


def warped_obstruction(p: MetricPair, h: Metric, sigma: str = "sigma", seed: int = 0) -> WarpedObstruction:
    from .expr import combine
    from .projective import stress_residual

    ch, n = p.chart, p.dim
    R = stress_residual(p)
    i0, j0 = next((i, j) for i in range(n - 1) for j in range(n - 1) if h.matrix[i, j] != 0)
    f = ch.canonical(R[i0 + 1, j0 + 1] / h.matrix[i0, j0])
    block = combine(
        ((i + 1, j + 1), ch.is_zero(R[i + 1, j + 1] - f * h.matrix[i, j], seed=seed))
        for i in range(n - 1)
        for j in range(n - 1)
    )
    d1 = sp.diff(sp.Function(sigma)(sp.Symbol("x1")), sp.Symbol("x1"))
    num, _ = sp.fraction(sp.factor(f))
    multiplicity = 0
    for factor, k in sp.factor_list(num)[1]:
        if factor == d1:
            multiplicity = k
    vanishes = combine((idx, ch.is_zero(R[idx].xreplace({d1: 0}), seed=seed)) for idx in R.indices())
    return WarpedObstruction(sp.factor(f), block, multiplicity, vanishes)


# ---------------------------------------------------------------------------
# conformal change
# ---------------------------------------------------------------------------


def conformal_ricci(g: Metric, psi, sign: int = -1) -> tuple[TensorField, sp.Expr]:
    """Ricci tensor and scalar curvature of e^{2*sign*psi} g from those of g.

    For the default sign (ghat = e^{-2 psi} g), with D2 = psi_{i,j} g^{ij}
    and D1 = g^{ij} psi_i psi_j:

        Rhat_ij = R_ij + (n-2)(psi_{i,j} + psi_i psi_j) + (D2 - (n-2) D1) g_ij
        Rhat    = e^{2 psi} (R + 2(n-1) D2 - (n-1)(n-2) D1)

    For sign=+1:

        Rhat_ij = R_ij - (n-2)(psi_{i,j} - psi_i psi_j) - (D2 + (n-2) D1) g_ij
        Rhat    = e^{-2 psi} (R - 2(n-1) D2 - (n-1)(n-2) D1)
    """
    if sign not in (1, -1):
        raise ValueError("sign must be +1 or -1")
    ch, n, inv = g.chart, g.dim, g.inverse
    psi = sp.sympify(psi)
    dpsi = covariant_derivative(psi, g)
    H = covariant_derivative(dpsi, g).components
    d = dpsi.components
    D2 = ch.canonical(sum(inv[i, j] * H[i, j] for i in range(n) for j in range(n)))
    D1 = ch.canonical(sum(inv[i, j] * d[i] * d[j] for i in range(n) for j in range(n)))
    Ric, R = ricci(g).components, scalar_curvature(g)
    w = sign  # ghat = e^{2 w psi} g
    Rhat = TensorField.build(
        ch,
        "ll",
        lambda i, j: ch.canonical(
            Ric[i, j] - (n - 2) * w * (H[i, j] - w * d[i] * d[j]) - (w * D2 + (n - 2) * D1) * g[i, j]
        ),
    )
    scalar = ch.canonical(sp.exp(-2 * w * psi) * (R - 2 * (n - 1) * w * D2 - (n - 1) * (n - 2) * D1))
    return Rhat, scalar


def conformal_metric(g: Metric, psi, sign: int = -1) -> Metric:
    return Metric(g.chart, (sp.exp(2 * sign * sp.sympify(psi)) * g.matrix).applyfunc(g.chart.canonical))


# ---------------------------------------------------------------------------
# gallery entries
# ---------------------------------------------------------------------------


Z, NZ = VerdictKind.ZERO, VerdictKind.NONZERO


@dataclass(eq=False)
class GalleryEntry:
    """A named pair with the verdict table the checks must reproduce.

    ``numeric`` maps opaque function names to explicit expressions for the
    floating-point oracles; ``endomorphism`` is the displayed A when the pair
    was built from one.
    """

    name: str
    pair: MetricPair
    expected: dict[str, VerdictKind]
    note: str = ""
    numeric: Mapping[str, sp.Expr] = field(default_factory=dict)
    endomorphism: TensorField | None = None
    min_poly_degree: int | None = None


def _flat_projective_entry(n: int = 3) -> GalleryEntry:
    return GalleryEntry(
        "flat-projective",
        flat_projective_pair(n),
        {"LC": Z, "sinjukov": Z, "integrability": Z, "flat-g": Z, "flat-gbar": Z, "affine": NZ,
         "ricci-relation": Z, "stress": Z, "stress-phi-form": Z, "round-trip": Z},
        note="Euclidean metric and its pullback by x -> x/(1+x1)",
        min_poly_degree=None,
    )


def _product_entry(h: str = "ppwave") -> GalleryEntry:
    base = {"flat": flat("x2 x3 x4"), "ppwave": ppwave("x2 x3 x4")}[h]
    return GalleryEntry(
        "product",
        zero_scalar_product_pair(base),
        {"LC": Z, "affine": Z, "scalar-g": Z, "scalar-gbar": Z, "stress": Z, "ricci-relation": Z,
         "stress-phi-form": Z, "round-trip": Z, "sinjukov": Z},
        note=f"dx1^2 + h and dx1^2 + 2h with h = {h}",
    )


def _warped_entry(n: int = 4, h: str = "flat") -> GalleryEntry:
    base = base_metric(h, _default_coords(n - 1, 2))
    pair = warped_pair("sigma", "C", base)
    return GalleryEntry(
        "warped",
        pair,
        {"LC": Z, "sinjukov": Z, "integrability": Z, "affine": NZ, "ricci-relation": Z,
         "stress": NZ, "round-trip": Z},
        note=f"warped pair, generic sigma, n = {n}, h = {h}",
        numeric={"sigma": 1 + sp.Symbol("x1") ** 2 / 4, "C": sp.Integer(1)},
        min_poly_degree=2,
    )


def _warped_affine_entry(n: int = 4) -> GalleryEntry:
    pair = warped_pair(sp.Integer(3), 1, flat(_default_coords(n - 1, 2)))
    return GalleryEntry(
        "warped-affine",
        pair,
        {"LC": Z, "affine": Z, "stress": Z, "vb": Z, "round-trip": Z, "sinjukov": Z},
        note="warped pair with constant sigma = 3, C = 1",
    )


def _counterexample_entry(n: int = 5, h: str = "ppwave", C=1) -> GalleryEntry:
    base = base_metric(h, _default_coords(n - 2, 3))
    pair, A = counterexample_pair(n, base, C)
    expected = {"LC": Z, "scalar-g": Z, "scalar-gbar": Z, "riemann-equal": Z, "stress": Z, "lambda-zero": NZ,
                "sinjukov": Z, "integrability": Z, "ricci-relation": Z, "stress-phi-form": Z, "vb": Z,
                "x-identity": Z, "round-trip": Z, "endomorphism": Z}
    return GalleryEntry(
        "counterexample",
        pair,
        expected,
        note=f"Jordan-block counterexample, n = {n}, h = {h}, C = {C}",
        endomorphism=A,
        min_poly_degree=3,
    )


def _scaled_entry(c=3) -> GalleryEntry:
    g = sphere("x1 x2 x3")
    return GalleryEntry(
        "scaled",
        scaled_pair(g, c),
        {"LC": Z, "affine": Z, "stress": Z, "ricci-relation": Z, "vb": Z, "round-trip": Z, "sinjukov": Z},
        note=f"unit 3-sphere and {c} times it",
        min_poly_degree=1,
    )


def _sphere_cone_entry() -> GalleryEntry:
    from .cone import sphere_cone_pair

    pair = sphere_cone_pair()
    return GalleryEntry(
        "sphere-cone",
        pair,
        {"LC": Z, "sinjukov": Z, "integrability": Z, "affine": NZ, "ricci-relation": Z, "round-trip": Z},
        note="unit 2-sphere and the partner induced by the parallel field diag(1,2,3) on its cone",
    )


_BUILDERS = {
    "flat-projective": _flat_projective_entry,
    "product": _product_entry,
    "warped": _warped_entry,
    "warped-affine": _warped_affine_entry,
    "counterexample": _counterexample_entry,
    "scaled": _scaled_entry,
    "sphere-cone": _sphere_cone_entry,
}

_SUMMARIES = {
    "flat-projective": "Euclidean metric and a projective pullback (options: n)",
    "product": "dx1^2 + h and dx1^2 + 2h, zero scalar curvature h (options: h)",
    "warped": "warped pair with opaque sigma and constant C (options: n, h)",
    "warped-affine": "warped pair with constant sigma (options: n)",
    "counterexample": "Jordan-block pair with equal curvature tensors (options: n, h, C)",
    "scaled": "unit 3-sphere and a constant multiple (options: C)",
    "sphere-cone": "unit 2-sphere and the partner from a parallel field on its cone",
}


def names() -> list[str]:
    return list(_BUILDERS)


def entry_note(name: str) -> str:
    return _SUMMARIES[name]


def entry(name: str, **kw) -> GalleryEntry:
    if name not in _BUILDERS:
        raise KeyError(f"unknown gallery entry {name!r}; choose from {sorted(_BUILDERS)}")
    return _BUILDERS[name](**kw)
