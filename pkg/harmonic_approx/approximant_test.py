import numpy as np
import pytest
from pydantic import ValidationError

from .approximant import (
    ApproximantConfig,
    ConvolutionLattice,
    build_approximant,
    build_from_catalog,
    convolve,
    corollary_bounds,
    jackson_stage,
)
from .catalog import get_field
from .field_domain import Domain, constant_field, sup_norm, zero_field
from .fitting import fit_rate
from .handling_error import CatalogError, DomainError, KernelError
from .jackson_kernels import KernelParams, kernel_stencil, polyharmonic_kernel

unit_disk = Domain.ball([0.0, 0.0], 1.0)
P_LIST = [4, 8, 16, 32]


def small_config(p: int, r: int = 0, **kw) -> ApproximantConfig:
    opts = dict(conv_grid=1 / 64, eval_grid=1 / 32, bvp_spacing=1 / 128)
    opts.update(kw)
    return ApproximantConfig(p=p, r=r, **opts)


@pytest.fixture(scope="module")
def square_results():
    tf = get_field("radial_sq", 2)
    return [build_from_catalog(tf, unit_disk, small_config(p)) for p in P_LIST]


def test_config_validation():
    with pytest.raises(ValidationError):
        ApproximantConfig(p=1, r=1)
    with pytest.raises(ValidationError):
        ApproximantConfig(p=8, conv_grid=0.5)
    assert ApproximantConfig(p=8).k == 3


def test_small_k_is_rejected():
    tf = get_field("radial_sq", 2)
    with pytest.raises(KernelError):
        build_from_catalog(tf, unit_disk, small_config(8, k=2))


def test_lattice_shrinks_by_stencil_radius():
    lattice = ConvolutionLattice(2, 1 / 16, stages=2)
    assert lattice.stencil_radius == 16
    assert lattice.extent(0) - lattice.extent(2) == 32
    assert lattice.axis(2)[-1] >= 0.5
    assert lattice.crop(np.zeros((lattice.axis(0).size,) * 2)).shape == (lattice.axis(1).size,) * 2


def test_convolving_linear_field_scales_by_mass():
    K = polyharmonic_kernel(KernelParams(k=3, nu=4, dim=2))
    f = get_field("linear", 2).field
    mass = kernel_stencil(K, 1 / 32).sum()
    x = np.array([0.2, -0.3])
    assert convolve(K, f, x, 1 / 32) == pytest.approx(mass * f(x), rel=1e-12)


def test_convolving_one_gives_about_one():
    K = polyharmonic_kernel(KernelParams(k=3, nu=6, dim=2))
    assert convolve(K, constant_field(1.0, 2), [0.0, 0.0], 1 / 100) == pytest.approx(1.0, abs=1e-3)


def test_convolution_commutes_with_laplacian():
    tf = get_field("gauss_bump", 2)
    K = polyharmonic_kernel(KernelParams(k=3, nu=4, dim=2))
    h, step = 1 / 32, 1e-3
    x = np.array([0.1, 0.2])
    centre = convolve(K, tf.field, x, h)
    fd = -4 * centre
    for e in np.eye(2):
        fd += convolve(K, tf.field, x + step * e, h) + convolve(K, tf.field, x - step * e, h)
    fd /= step**2
    assert fd == pytest.approx(convolve(K, tf.laplacians[1], x, h), rel=1e-4)


def test_harmonic_field_is_reproduced():
    tf = get_field("linear", 2)
    result = build_from_catalog(tf, unit_disk, small_config(8))
    assert result.sup_error <= 1e-6
    assert result.degenerate
    assert result.implied_constant == 0.0
    x = np.array([[0.3, -0.4], [-0.7, 0.1]])
    assert np.allclose(result.T_p(x), tf.field(x), atol=1e-6)


def test_square_errors_decrease(square_results):
    errors = [res.sup_error for res in square_results]
    assert all(b <= a for a, b in zip(errors, errors[1:]))
    assert not any(res.degenerate for res in square_results)
    assert fit_rate(list(zip(P_LIST, errors))).slope < -0.5


def test_square_implied_constant_is_bounded(square_results):
    implied = [res.implied_constant for res in square_results]
    assert min(implied) > 0
    assert max(implied) / min(implied) <= 4.0


def test_square_kernel_orders(square_results):
    assert [res.nu for res in square_results] == [2, 3, 6, 11]
    assert [res.order_equals_target for res in square_results] == [True, False, True, False]
    for res in square_results:
        assert res.stencil_mass == pytest.approx(1.0, abs=1e-2)
        assert res.scale == pytest.approx(0.495)


def test_approximant_at_centre(square_results):
    f = get_field("radial_sq", 2).field
    for res in square_results:
        centre = np.array(res.shift)
        assert abs(res.T_p(centre) - f(centre)) <= res.sup_error + 1e-12


def test_corollary_bounds(square_results):
    for res in square_results:
        bounds = corollary_bounds(res)
        assert bounds.omega_h <= min(bounds.omega1, bounds.omega2) + 1e-12
        assert bounds.c_omega1 > 0 and bounds.c_omega2 > 0
        assert not bounds.degenerate


TWO_STAGE_P = [4, 8, 16]


@pytest.fixture(scope="module")
def quartic_results():
    tf = get_field("radial_quartic", 2)
    return [build_from_catalog(tf, unit_disk, small_config(p, r=1)) for p in TWO_STAGE_P]


def test_two_stage_approximant(quartic_results):
    for result in quartic_results:
        assert result.r == 1
        assert len(result.per_stage_errors) == 2
        assert result.sup_error == result.per_stage_errors[-1]
        assert np.isfinite(result.implied_constant)
    errors = [res.sup_error for res in quartic_results]
    assert all(b < a for a, b in zip(errors, errors[1:]))


def test_second_stage_does_not_lose_accuracy(quartic_results):
    for result in quartic_results[1:]:
        first, second = result.per_stage_errors
        assert second <= first


def test_missing_laplacians():
    with pytest.raises(CatalogError):
        build_from_catalog(get_field("cone", 2), unit_disk, small_config(4, r=1))


def test_failing_stage_is_noted():
    tf = get_field("gauss_bump", 2)
    with pytest.raises(DomainError) as info:
        build_approximant(tf.field, tf.laplacians, unit_disk, small_config(8, bvp_spacing=0.1))
    assert any("bvp" in note for note in info.value.__notes__)


def test_single_stage_matches_pointwise_convolution():
    tf = get_field("gauss_bump", 2)
    K = polyharmonic_kernel(KernelParams(k=3, nu=4, dim=2))
    T = jackson_stage(K, tf.field, zero_field(2), 1 / 16)
    for x in ([0.25, 0.0], [-0.125, 0.375]):
        assert T(np.array(x)) == pytest.approx(convolve(K, tf.field, x, 1 / 16), rel=1e-10)


def test_stage_on_its_own_output_is_identity():
    tf = get_field("gauss_bump", 2)
    K = polyharmonic_kernel(KernelParams(k=3, nu=4, dim=2))
    T = jackson_stage(K, tf.field, tf.field, 1 / 16)
    nodes = np.array([[0.25, 0.0], [-0.125, 0.375], [0.0, -0.5], [0.4375, 0.0625]])
    assert np.allclose(T(nodes), tf.field(nodes), rtol=0, atol=1e-12)


def test_single_stage_error_scales_with_laplacian_over_p_squared():
    # sup |f - T_K f| <= C sup|Delta f| / p^2 with one C for every p
    tf = get_field("gauss_bump", 2)
    M = sup_norm(tf.laplacians[1], unit_disk, 1 / 64)
    pts = Domain.ball([0.0, 0.0], 0.5).sample(1 / 32)
    constants = []
    for p in (8, 16, 32):
        K = polyharmonic_kernel(KernelParams.for_order(p, 3, 2))
        T = jackson_stage(K, tf.field, zero_field(2), 1 / 64)
        error = float(np.max(np.abs(T(pts) - tf.field(pts))))
        constants.append(error * p**2 / M)
    assert max(constants) / min(constants) <= 3.0
