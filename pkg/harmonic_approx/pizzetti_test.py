import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from .catalog import finite_difference_laplacian, get_field
from .field_domain import Domain, ScalarField, Smoothness
from .handling_error import AdmissibilityError
from .pizzetti import (
    PizzettiConstants,
    j0_apply,
    j0_rule,
    j0_scaling_check,
    pizzetti_residual,
    smoothing_field,
    smoothing_laplacian,
    smoothing_value_direct,
)
from .sphere_mean import default_rule, harmonicity_difference


def sin_x1(dim: int) -> tuple[ScalarField, ScalarField]:
    f = ScalarField(func=lambda x: np.sin(x[..., 0]), dim=dim, smoothness_hint=Smoothness.C_INF)
    return f, -1.0 * f


def test_constants():
    two, three = PizzettiConstants.for_dim(2), PizzettiConstants.for_dim(3)
    assert (two.l_n, two.c_n, two.d_n) == (1.0, 0.25, 0.25)
    assert three.l_n == 1.0
    assert three.c_n == pytest.approx(1 / 6)
    assert three.d_n == pytest.approx(1 / 6)
    assert PizzettiConstants.for_dim(4).l_n == 0.5
    assert three.v(2.0) == pytest.approx(1.5)


@pytest.mark.parametrize("dim", [2, 3, 4])
@pytest.mark.parametrize("R", [0.1, 0.5, 2.0])
def test_j0_of_one(dim, R):
    consts = PizzettiConstants.for_dim(dim)
    assert j0_apply(lambda r: 1.0, R, dim) == pytest.approx(consts.c_n * R**2, rel=1e-12)


def test_j0_closed_form_planar():
    # int_0^R r^3 log(R/r) dr = R^4 / 16
    assert j0_apply(lambda r: r**2, 0.7, 2) == pytest.approx(0.7**4 / 16, rel=1e-12)


def test_j0_rule_rejects_bad_input():
    with pytest.raises(AdmissibilityError):
        j0_rule(0.0, 2)
    with pytest.raises(AdmissibilityError):
        j0_rule(1.0, 2, quad_points=8)


@settings(max_examples=30, deadline=None)
@given(st.floats(min_value=0.1, max_value=3.0), st.floats(min_value=0.05, max_value=1.0), st.sampled_from([2, 3]))
def test_j0_change_of_variables(s, R, dim):
    lhs, rhs = j0_scaling_check(lambda r: np.cos(r) + r**3, s, R, dim)
    assert lhs == pytest.approx(rhs, rel=1e-12, abs=1e-15)


@pytest.mark.parametrize("dim", [2, 3])
@pytest.mark.parametrize("field_id", ["radial_sq", "radial_quartic"])
def test_pizzetti_identity_catalog(dim, field_id):
    tf = get_field(field_id, dim)
    rule = default_rule(dim)
    for x, R in [(np.full(dim, 0.2), 0.3), (np.linspace(-0.5, 0.5, dim), 0.8)]:
        assert abs(pizzetti_residual(tf.field, tf.laplacians[1], x, R, rule)) < 1e-9


@pytest.mark.parametrize("dim", [2, 3])
def test_pizzetti_identity_sine(dim):
    f, lap = sin_x1(dim)
    rule = default_rule(dim)
    assert abs(pizzetti_residual(f, lap, np.full(dim, 0.3), 0.6, rule)) < 1e-9


def test_smoothing_of_square():
    f = get_field("radial_sq", 2).field
    rule = default_rule(2)
    R, t = 0.2, 0.5
    g = smoothing_field(f, R, t, rule)
    x = np.array([[0.1, 0.3], [-0.4, 0.0]])
    assert np.allclose(g(x) - f(x), R**2 * t**2 / 4, atol=1e-10)
    assert np.allclose(smoothing_laplacian(f, R, t, rule)(x), 4.0, atol=1e-9)


@pytest.mark.parametrize("dim", [2, 3])
def test_smoothing_keeps_harmonic_fields(dim):
    f = get_field("harmonic_saddle", dim).field
    rule = default_rule(dim)
    x = np.full((3, dim), 0.25)
    assert np.allclose(smoothing_field(f, 0.3, 1.0, rule)(x), f(x), atol=1e-10)
    assert np.allclose(smoothing_laplacian(f, 0.3, 1.0, rule)(x), 0.0, atol=1e-8)


def test_smoothing_laplacian_matches_constant_laplacian_in_3d():
    f = get_field("radial_sq", 3).field
    lap = smoothing_laplacian(f, 0.25, 0.5, default_rule(3))
    assert lap(np.array([0.1, 0.2, 0.0])) == pytest.approx(6.0, rel=1e-9)


def test_direct_and_rescaled_forms_agree():
    f = get_field("sine_product", 2).field
    rule = default_rule(2)
    x = np.array([0.2, -0.1])
    for R, t in [(0.3, 1.0), (0.1, 0.25)]:
        rescaled = smoothing_field(f, R, t, rule)(x)
        assert smoothing_value_direct(f, x, R, t, rule) == pytest.approx(rescaled, abs=1e-9)


def test_cached_radial_table():
    f = get_field("gauss_bump", 2).field
    rule = default_rule(2)
    x = np.array([[0.1, 0.2], [0.3, -0.2]])
    plain = smoothing_field(f, 0.4, 0.5, rule)(x)
    cached = smoothing_field(f, 0.4, 0.5, rule, cached=True)(x)
    assert np.allclose(plain, cached, atol=1e-8)


def test_smoothing_distance_bounded_by_modulus():
    from .modulus import harmonicity_modulus

    f = get_field("gauss_bump", 2).field
    rule = default_rule(2)
    D = Domain.ball([0.0, 0.0], 1.0)
    D1 = Domain.ball([0.0, 0.0], 0.7)
    R = 0.2
    pts = D1.sample(1 / 8)
    g = smoothing_field(f, R, 1.0, rule, region=D)
    omega = harmonicity_modulus(f, D, [R], 1 / 8, rule, t_refine=16).values[0]
    assert np.max(np.abs(f(pts) - g(pts))) <= omega * 1.05


def test_admissibility_is_enforced():
    f = get_field("gauss_bump", 2).field
    D = Domain.ball([0.0, 0.0], 1.0)
    g = smoothing_field(f, 0.3, 1.0, default_rule(2), region=D)
    g(np.array([0.5, 0.0]))
    with pytest.raises(AdmissibilityError, match="leaves"):
        g(np.array([0.9, 0.0]))


@pytest.mark.parametrize("R,t", [(0.0, 0.5), (0.2, 0.0), (0.2, 1.5)])
def test_smoothing_parameters(R, t):
    f = get_field("gauss_bump", 2).field
    with pytest.raises(AdmissibilityError):
        smoothing_field(f, R, t, default_rule(2))


@pytest.mark.parametrize("dim", [2, 3])
@pytest.mark.parametrize("t", [0.1, 0.5, 1.0])
def test_v_inverts_j0_of_one(dim, t):
    consts = PizzettiConstants.for_dim(dim)
    assert float(consts.v(t)) * j0_apply(lambda r: 1.0, t, dim) == pytest.approx(1.0, abs=1e-12)


@pytest.mark.parametrize("dim", [2, 3])
def test_pizzetti_residual_of_square_at_random_pairs(dim):
    tf = get_field("radial_sq", dim)
    rule = default_rule(dim)
    rng = np.random.default_rng(7)
    xs = rng.uniform(-0.5, 0.5, size=(50, dim))
    radii = rng.uniform(0.05, 0.5, size=50)
    residuals = [pizzetti_residual(tf.field, tf.laplacians[1], x, R, rule) for x, R in zip(xs, radii)]
    assert max(abs(r) for r in residuals) <= 1e-12
    # mu_0 - f - d_n R^2 Delta f vanishes for quadratics
    d_n = PizzettiConstants.for_dim(dim).d_n
    first = [harmonicity_difference(tf.field, x, R, rule) - d_n * R**2 * 2 * dim for x, R in zip(xs, radii)]
    assert max(abs(r) for r in first) <= 1e-12


def test_smoothing_laplacian_matches_finite_differences():
    f = get_field("gauss_bump", 2).field
    rule = default_rule(2)
    R, t = 0.3, 1.0
    x = np.array([[0.1, 0.2], [-0.3, 0.05]])
    fd = finite_difference_laplacian(smoothing_field(f, R, t, rule), x, h=5e-3)
    closed = smoothing_laplacian(f, R, t, rule)(x)
    assert np.allclose(fd, closed, rtol=0, atol=1e-3)
