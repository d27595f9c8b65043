import pytest
import sympy as sp

from geodequiv import gallery
from geodequiv.chart import TensorField, covariant_derivative, riemann
from geodequiv.cone import (
    ConeStructureError,
    cartesian_map,
    check_cone_solution,
    check_parallel,
    cone_metric,
    lift_solution,
    lift_to_cone,
    pullback_constant,
    project_from_cone,
    rank_one_field,
    spherical_cone,
)
from geodequiv.projective import SolutionData, check_frobenius

x1, x2, r = sp.symbols("x1 x2 r")


@pytest.fixture(scope="module")
def sphere_cone():
    return spherical_cone(2)


@pytest.fixture(scope="module")
def diag123(sphere_cone):
    T = pullback_constant(sphere_cone, sp.diag(1, 2, 3))
    return T, project_from_cone(sphere_cone, T)


def test_cone_over_sphere_is_flat(sphere_cone):
    assert sphere_cone.metric.matrix == sp.diag(1, r**2, r**2 * sp.sin(x1) ** 2)
    assert riemann(sphere_cone.metric).verdict().is_zero


def test_cone_over_flat_plane_is_curved():
    cm = cone_metric(gallery.flat("x1 x2"))
    v = riemann(cm.metric).verdict()
    assert v.is_nonzero
    assert v.witness


@pytest.mark.parametrize("g", [gallery.sphere("x1 x2"), gallery.flat("x1 x2 x3"), gallery.ppwave("x1 x2 x3")])
def test_cone_determinant(g):
    cm = cone_metric(g)
    diff = cm.metric.matrix.det() - r ** (2 * g.dim) * g.matrix.det()
    assert cm.chart.is_zero(diff).is_zero


def test_radius_name_clash():
    with pytest.raises(ValueError):
        cone_metric(gallery.flat("r x1"))


def test_metric_lifts_to_cone_metric(sphere_cone):
    g = sphere_cone.base
    zero = TensorField.build(g.chart, "l", lambda i: 0)
    T = lift_to_cone(sphere_cone, g.as_tensor(), zero, 1)
    assert (T - sphere_cone.metric.as_tensor()).verdict().is_zero
    assert check_parallel(sphere_cone, T).is_zero


def test_trivial_projection(sphere_cone):
    s = project_from_cone(sphere_cone, sphere_cone.metric.as_tensor())
    assert (s.a - sphere_cone.base.as_tensor()).verdict().is_zero
    assert all(c == 0 for c in s.lam_i.components)
    assert s.mu == 1 and s.B == -1


def test_cartesian_pullback_is_parallel(sphere_cone, diag123):
    T, _ = diag123
    assert check_parallel(sphere_cone, T).is_zero


def test_projected_triple_solves_frobenius(sphere_cone, diag123):
    _, s = diag123
    g = sphere_cone.base
    assert not s.mu.is_constant()
    assert check_frobenius(g, s).is_zero
    assert check_cone_solution(g, s).is_zero


def test_mu_gradient(sphere_cone, diag123):
    """mu_{,i} = -2 lambda_i for the unit-sphere base."""
    _, s = diag123
    ch = sphere_cone.base.chart
    for i in range(2):
        assert ch.is_zero(ch.diff(s.mu, i) + 2 * s.lam_i[i]).is_zero


def test_lift_round_trip(sphere_cone, diag123):
    T, s = diag123
    assert (lift_solution(sphere_cone, s) - T).verdict().is_zero


def test_gallot_tanno_residual(sphere_cone, diag123):
    """lambda_{,ijk} = B(lambda_i g_jk + lambda_j g_ik + 2 lambda_k g_ij) with B = -1."""
    _, s = diag123
    g = sphere_cone.base
    ch = g.chart
    grad = TensorField.build(ch, "l", lambda i: ch.diff(s.lam, i))
    D3 = covariant_derivative(covariant_derivative(grad, g), g)
    G, L = g.matrix, s.lam_i
    res = TensorField.build(
        ch, "lll", lambda i, j, k: D3[i, j, k] + (L[i] * G[j, k] + L[j] * G[i, k] + 2 * L[k] * G[i, j])
    )
    assert res.verdict().is_zero


def test_perturbed_mu_is_not_parallel(sphere_cone, diag123):
    _, s = diag123
    T = lift_to_cone(sphere_cone, s.a, s.lam_i, s.mu + x1)
    assert check_parallel(sphere_cone, T).is_nonzero


def test_rank_one_pattern(sphere_cone):
    v = (1, 2, -1)
    T = rank_one_field(sphere_cone, v)
    assert check_parallel(sphere_cone, T).is_zero
    s = project_from_cone(sphere_cone, T)
    # the parallel covector is dF with F = r f(x), f = v . X / r
    X = cartesian_map(sphere_cone)
    f = sp.expand(sum(c * Xk for c, Xk in zip(v, X)) / r)
    ch = sphere_cone.base.chart
    fi = [sp.diff(f, x) for x in (x1, x2)]
    assert ch.is_zero(s.mu - f**2).is_zero
    for i in range(2):
        assert ch.is_zero(s.lam_i[i] + f * fi[i]).is_zero
        for j in range(2):
            assert ch.is_zero(s.a[i, j] - fi[i] * fi[j]).is_zero


def test_r_dependent_field_rejected(sphere_cone):
    T = TensorField.build(sphere_cone.chart, "ll", lambda i, j: r**3 if i == j == 0 else 0)
    with pytest.raises(ConeStructureError) as info:
        project_from_cone(sphere_cone, T)
    assert "mu" in str(info.value)
    assert info.value.verdict.is_nonzero


def test_cone_check_requires_unit_b(sphere_cone, diag123):
    _, s = diag123
    other = SolutionData(s.a, s.lam_i, s.lam, s.A, mu=s.mu, B=sp.Integer(1))
    with pytest.raises(ValueError):
        check_cone_solution(sphere_cone.base, other)


def test_sphere_cone_pair_is_geodesically_equivalent(entries):
    from geodequiv.projective import check_geodesic_equivalence, phi_of_pair

    p = entries("sphere-cone").pair
    assert check_geodesic_equivalence(p).is_zero
    assert phi_of_pair(p)[1].verdict().is_nonzero
