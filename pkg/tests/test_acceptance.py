"""Acceptance criteria.

Each test certifies one criterion and emits a single PASS/FAIL line through
the ``acceptance`` fixture; the lines are repeated in the terminal summary.
"""

import numpy as np
import pytest
import sympy as sp

from geodequiv import gallery
from geodequiv.chart import Chart, Metric, ricci, riemann, scalar_curvature, stress_energy
from geodequiv.cli import from_pair, parse_pairfile, serialize
from geodequiv.cone import check_cone_solution, lift_solution, project_from_cone, pullback_constant, spherical_cone
from geodequiv.expr import combine, to_text
from geodequiv.numcheck import (
    energy_drift,
    evaluate,
    finite_difference_riemann,
    integrate_geodesic,
    projective_deviation,
    random_runs,
    relative_error,
    specialize,
    symbolic_riemann_at,
)
from geodequiv.projective import minimal_poly_degree, stress_residual, stress_residual_phi_form
from geodequiv.suite import PairContext, run_checks

pytestmark = pytest.mark.slow

x1, x2, x3 = sp.symbols("x1 x2 x3")


def test_criterion_01_counterexample(acceptance):
    p, A = gallery.counterexample_pair(5, gallery.ppwave("x3 x4 x5"), 1)
    names = ["LC", "scalar-g", "scalar-gbar", "riemann-equal", "stress", "lambda-zero"]
    kinds = {r.name: r.verdict.kind.value for r in run_checks(PairContext(p, A), names)}
    ok = all(kinds[n] == "zero" for n in names[:-1]) and kinds["lambda-zero"] == "nonzero"
    assert acceptance(1, ok, "counterexample n=5, pp-wave h, C=1: " + ", ".join(f"{k}={v}" for k, v in kinds.items()))


def test_criterion_02_two_dimensional_stress(acceptance):
    chart = Chart.make("x1 x2", positive=["x1"], sample={"x1": 2, "x2": 1})
    metrics = [
        [[1 + x1**2, x2], [x2, 2 + x1 * x2**2]],
        [[x1, 0], [0, x1 + x2**3]],
        [[3, x1 * x2], [x1 * x2, 1 + x2**4]],
    ]
    verdicts = [stress_energy(Metric(chart, m)).verdict() for m in metrics]
    ok = all(v.is_zero for v in verdicts)
    assert acceptance(2, ok, "Einstein tensor of 3 polynomial 2-d metrics: " + ", ".join(v.kind.value for v in verdicts))


def test_criterion_03_warped_obstruction(acceptance):
    sigma, C = sp.Function("sigma")(x1), sp.Symbol("C")
    ok, ratios, parts = True, set(), []
    for n in (4, 5):
        for kind in ("flat", "ppwave"):
            h = gallery.base_metric(kind, [f"x{k}" for k in range(2, n + 1)])
            ob = gallery.warped_obstruction(gallery.warped_pair("sigma", "C", h), h)
            good = ob.block.is_zero and ob.multiplicity >= 2 and ob.vanishes.is_zero
            ok &= good
            # compare per g_ij = sigma h_ij with the printed coefficient
            exact = sp.factor(ob.coefficient / sigma)
            printed = (n - 2) * (n - 1) * sp.diff(sigma, x1) ** 2 / (6 * sigma * (sigma + C))
            ratios.add(sp.simplify(exact / printed))
            parts.append(f"n={n} {kind}: f/sigma = {to_text(exact)}")
    ratio = ", ".join(str(r) for r in sorted(ratios, key=str))
    mismatch = "" if ratios == {1} else f"; exact/printed = {ratio} (constant-factor mismatch with the printed 6)"
    assert acceptance(3, ok, "; ".join(parts) + mismatch)


def test_criterion_04_cone(acceptance):
    cm = spherical_cone(2)
    flat = riemann(cm.metric).verdict()
    T = pullback_constant(cm, sp.diag(1, 2, 3))
    s = project_from_cone(cm, T)
    frob = check_cone_solution(cm.base, s)
    back = (lift_solution(cm, s) - T).verdict()
    ok = flat.is_zero and frob.is_zero and s.B == -1 and back.is_zero
    detail = f"cone over S^2 flat={flat.kind.value}, Frobenius B=-1 {frob.kind.value}, lift round trip {back.kind.value}"
    assert acceptance(4, ok, detail)


def _checks(e):
    return [c for c in e.expected if c != "min-poly-degree"]


def test_criterion_05_round_trips(acceptance, entries):
    bad = []
    for name in gallery.names():
        e = entries(name)
        ctx = PairContext(e.pair, e.endomorphism)
        rt = run_checks(ctx, ["round-trip"])[0].verdict
        if not rt.is_zero:
            bad.append(f"{name}: round-trip {rt.kind.value}")
        names = _checks(e)
        before = {r.name: r.verdict.kind for r in run_checks(ctx, names)}
        pf = parse_pairfile(serialize(from_pair(e.pair, e.endomorphism, e.expected)))
        after = {r.name: r.verdict.kind for r in run_checks(pf.context(), names)}
        if before != after:
            bad.append(f"{name}: PairFile verdicts changed")
    ok = not bad
    assert acceptance(5, ok, "; ".join(bad) or f"reconstruction and PairFile round trips on {len(gallery.names())} entries")


def test_criterion_06_ricci_and_stress_forms(acceptance, entries):
    bad = []
    for name in gallery.names():
        p = entries(name).pair
        rel = run_checks(PairContext(p), ["ricci-relation"])[0].verdict
        diff = stress_residual(p) - stress_residual_phi_form(p).scale(p.dim - 1)
        form = diff.canonical().verdict()
        if not (rel.is_zero and form.is_zero):
            bad.append(f"{name}: ricci {rel.kind.value}, stress form {form.kind.value}")
    ok = not bad
    assert acceptance(6, ok, "; ".join(bad) or f"Ricci relation and stress reformulation Zero on {len(gallery.names())} pairs")


def test_criterion_07_conformal(acceptance):
    cases = [
        ("flat^3, psi=x1", gallery.flat("x1 x2 x3"), x1),
        ("S^2, psi=x1 x2", gallery.sphere("x1 x2"), x1 * x2),
        ("S^3, psi=sin x2", gallery.sphere("x1 x2 x3"), sp.sin(x2)),
    ]
    parts, ok = [], True
    for label, g, psi in cases:
        Rh, S = gallery.conformal_ricci(g, psi, sign=-1)
        gh = gallery.conformal_metric(g, psi, -1)
        v = combine([((0,), (Rh - ricci(gh)).canonical().verdict()), ((1,), g.chart.is_zero(S - scalar_curvature(gh)))])
        ok &= v.is_zero
        parts.append(f"{label}: {v.kind.value}")
    assert acceptance(7, ok, "ghat = exp(-2 psi) g; " + ", ".join(parts))


def test_criterion_08_minimal_polynomial(acceptance, entries):
    got = {}
    for name in ("warped", "counterexample", "scaled"):
        e = entries(name)
        A = e.endomorphism if e.endomorphism is not None else PairContext(e.pair).solution.A
        got[name] = minimal_poly_degree(A)[0]
    ok = got == {"warped": 2, "counterexample": 3, "scaled": 1}
    assert acceptance(8, ok, ", ".join(f"{k} -> {v}" for k, v in got.items()))


def test_criterion_09_numeric_deviation(acceptance):
    e = gallery.entry("warped", n=3)
    g, gbar = specialize(e.pair.g, e.numeric), specialize(e.pair.gbar, e.numeric)
    bad = Metric(gbar.chart, gbar.matrix + sp.diag(0, 0, x2**2 / 2))
    good_dev, bad_dev, drift = [], [], []
    for run in random_runs(g, 20, seed=1, h=1e-3, N=1000):
        traj = integrate_geodesic(run)
        drift.append(energy_drift(traj))
        good_dev.append(projective_deviation(traj, gbar))
        bad_dev.append(projective_deviation(traj, bad))
    above = sum(d > 1e-2 for d in bad_dev)
    ok = max(good_dev) < 1e-6 and above >= 18 and max(drift) < 1e-7
    detail = (
        f"warped n=3: max deviation {max(good_dev):.2e}, energy drift {max(drift):.2e}; "
        f"perturbed pair above 1e-2 on {above}/20 runs (min {min(bad_dev):.3f})"
    )
    assert acceptance(9, ok, detail)


def _curvature_errors(g: Metric) -> float:
    point = {s.name: v for s, v in g.chart.sample_point().items() if s.name in g.chart.coords}
    R_fd = finite_difference_riemann(g, point, step=1e-5)
    err = relative_error(symbolic_riemann_at(g, point), R_fd)
    n = g.dim
    Ric_sym = np.array([[float(evaluate(ricci(g)[i, j], point)) for j in range(n)] for i in range(n)])
    Ric_fd = np.einsum("sjsl->jl", R_fd)
    err = max(err, relative_error(Ric_sym, Ric_fd))
    ginv = np.array([[float(evaluate(g.inverse[i, j], point)) for j in range(n)] for i in range(n)])
    S_sym = np.array([float(evaluate(scalar_curvature(g), point))])
    S_fd = np.array([float(np.einsum("jl,jl->", ginv, Ric_fd))])
    return max(err, relative_error(S_sym, S_fd))


def test_criterion_10_oracle_agreement(acceptance, entries):
    worst, where = 0.0, ""
    for name in gallery.names():
        e = entries(name)
        for label, metric in (("g", e.pair.g), ("gbar", e.pair.gbar)):
            m = specialize(metric, e.numeric) if e.numeric else metric
            err = _curvature_errors(m)
            if err > worst:
                worst, where = err, f"{name}/{label}"
    ok = worst < 1e-6
    assert acceptance(10, ok, f"Riemann, Ricci and scalar vs finite differences on all entries: max rel. error {worst:.1e} ({where})")
