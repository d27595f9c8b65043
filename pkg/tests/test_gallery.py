import pytest
import sympy as sp

from geodequiv import gallery
from geodequiv.chart import Metric, ricci, riemann, scalar_curvature
from geodequiv.projective import build_solution, check_geodesic_equivalence, phi_of_pair, stress_residual
from geodequiv.suite import PairContext, run_checks

x1, x2, x3 = sp.symbols("x1 x2 x3")


@pytest.mark.parametrize("name", gallery.names())
def test_gallery_reproduces_its_verdict_table(entries, name):
    e = entries(name)
    results = run_checks(PairContext(e.pair, e.endomorphism), list(e.expected), e.expected)
    failed = [(r.name, r.verdict) for r in results if not r.ok]
    assert not failed


def test_identity_map_gives_equal_metrics():
    n = 3
    p = gallery.flat_projective_pair(n, (sp.eye(n), [0] * n, [0] * n, 1))
    assert (p.g.as_tensor() - p.gbar.as_tensor()).verdict().is_zero


def test_affine_map_is_affinely_equivalent():
    M = sp.Matrix([[2, 1, 0], [0, 1, 0], [1, 0, 3]])
    p = gallery.flat_projective_pair(3, (M, [1, 2, 3], [0, 0, 0], 2))
    assert check_geodesic_equivalence(p).is_zero
    assert phi_of_pair(p)[1].verdict().is_zero


def test_general_projective_map():
    M = sp.Matrix([[1, 0], [1, 1]])
    p = gallery.flat_projective_pair(2, (M, [0, 1], [1, 1], 3))
    assert check_geodesic_equivalence(p).is_zero
    assert riemann(p.gbar).verdict().is_zero
    assert phi_of_pair(p)[1].verdict().is_nonzero


def test_degenerate_projective_map_rejected():
    with pytest.raises(gallery.PreconditionError):
        gallery.flat_projective_pair(2, (sp.eye(2), [0, 0], [0, 0], 0))


def test_product_pair_with_flat_factor():
    p = gallery.zero_scalar_product_pair(gallery.flat("x2 x3 x4"))
    assert stress_residual(p).verdict().is_zero
    assert phi_of_pair(p)[1].verdict().is_zero


def test_ppwave_is_curved_with_zero_scalar():
    h = gallery.ppwave("x2 x3 x4")
    assert scalar_curvature(h) == 0
    assert riemann(h).verdict().is_nonzero
    p = gallery.zero_scalar_product_pair(h)
    assert scalar_curvature(p.g) == 0
    assert p.chart.is_zero(scalar_curvature(p.gbar)).is_zero


def test_product_pair_rejects_curved_h():
    with pytest.raises(gallery.PreconditionError) as info:
        gallery.zero_scalar_product_pair(gallery.sphere("x2 x3"))
    assert info.value.verdict.is_nonzero


def test_warped_with_constant_sigma_is_affine():
    p = gallery.warped_pair(sp.Integer(5), 2, gallery.flat("x2 x3"))
    assert check_geodesic_equivalence(p).is_zero
    assert phi_of_pair(p)[1].verdict().is_zero


def test_warped_with_explicit_sigma():
    p = gallery.warped_pair(1 + x1**2 / 4, 1, gallery.flat("x2 x3"))
    assert check_geodesic_equivalence(p).is_zero
    assert phi_of_pair(p)[1].verdict().is_nonzero


@pytest.mark.parametrize("n, h", [(4, "flat"), (5, "ppwave"), (4, "ppwave")])
def test_warped_obstruction_structure(n, h):
    if h == "ppwave" and n == 4:
        base = gallery.ppwave("x2 x3 x4")
    else:
        base = gallery.base_metric(h, [f"x{k}" for k in range(2, n + 1)])
    p = gallery.warped_pair("sigma", "C", base)
    ob = gallery.warped_obstruction(p, base)
    assert ob.block.is_zero
    assert ob.multiplicity == 2
    assert ob.vanishes.is_zero
    sigma = sp.Function("sigma")(x1)
    exact = (n - 2) * (n - 1) * sp.diff(sigma, x1) ** 2 / (8 * (sigma + sp.Symbol("C")))
    assert sp.simplify(ob.coefficient - exact) == 0


def test_counterexample_requires_matching_h_dimension():
    with pytest.raises(ValueError):
        gallery.counterexample_pair(5, gallery.flat("x3 x4"))
    with pytest.raises(gallery.PreconditionError):
        gallery.counterexample_pair(5, gallery.sphere("x3 x4 x5"))


def test_counterexample_with_flat_h():
    """Recorded verdicts for n = 5 with flat h: g turns out to be flat as well."""
    p, A = gallery.counterexample_pair(5, gallery.flat("x3 x4 x5"), 1)
    ctx = PairContext(p, A)
    names = ["LC", "scalar-g", "scalar-gbar", "riemann-equal", "stress", "lambda-zero"]
    kinds = {r.name: r.verdict.kind.value for r in run_checks(ctx, names)}
    assert kinds == {
        "LC": "zero",
        "scalar-g": "zero",
        "scalar-gbar": "zero",
        "riemann-equal": "zero",
        "stress": "zero",
        "lambda-zero": "nonzero",
    }
    assert riemann(p.g).verdict().is_zero


def test_four_dimensional_analogue_is_flat():
    p, A = gallery.counterexample_pair(4, gallery.flat("x3 x4"), 1)
    assert riemann(p.g).verdict().is_zero
    assert check_geodesic_equivalence(p).is_zero


def test_counterexample_symbolic_constant():
    p, A = gallery.counterexample_pair(5, None, "C")
    assert check_geodesic_equivalence(p).is_zero


# ---------------------------------------------------------------------------
# conformal change
# ---------------------------------------------------------------------------


def _direct(g, psi, sign):
    gh = gallery.conformal_metric(g, psi, sign)
    return ricci(gh), scalar_curvature(gh)


@pytest.mark.parametrize(
    "g, psi",
    [
        (gallery.flat("x1 x2 x3"), x1),
        (gallery.sphere("x1 x2"), x1 * x2),
        (gallery.sphere("x1 x2 x3"), sp.sin(x2)),
    ],
)
@pytest.mark.parametrize("sign", [-1, 1])
def test_conformal_formula_matches_direct_curvature(g, psi, sign):
    Rh, S = gallery.conformal_ricci(g, psi, sign)
    R_direct, S_direct = _direct(g, psi, sign)
    assert (Rh - R_direct).canonical().verdict().is_zero
    assert g.chart.is_zero(S - S_direct).is_zero


def test_conformal_trivial_cases():
    g = gallery.sphere("x1 x2 x3")
    Rh, S = gallery.conformal_ricci(g, 0)
    assert (Rh - ricci(g)).verdict().is_zero
    assert S == scalar_curvature(g)
    c = sp.Integer(2)
    Rh, S = gallery.conformal_ricci(g, c)
    assert (Rh - ricci(g)).verdict().is_zero
    assert g.chart.is_zero(S - sp.exp(2 * c) * scalar_curvature(g)).is_zero


def test_conformal_sign_argument():
    with pytest.raises(ValueError):
        gallery.conformal_ricci(gallery.flat("x1 x2"), x1, sign=2)


def test_base_metric_lookup():
    assert isinstance(gallery.base_metric("flat", "a b"), Metric)
    with pytest.raises(ValueError):
        gallery.base_metric("torus", "a b")
    with pytest.raises(KeyError):
        gallery.entry("nope")


def test_warped_solution_lambda(entries):
    p = entries("warped").pair
    s = build_solution(p)
    # lambda = (sigma + n C)/2 up to a constant, so lambda_1 = sigma'/2
    sigma = sp.Function("sigma")(x1)
    assert p.chart.is_zero(s.lam_i[0] - sp.diff(sigma, x1) / 2).is_zero
    assert all(s.lam_i[k] == 0 for k in range(1, p.dim))
