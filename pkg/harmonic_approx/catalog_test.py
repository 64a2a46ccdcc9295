import numpy as np
import pytest

from .catalog import (
    HARMONIC_IDS,
    TestField,
    catalog_ids,
    finite_difference_laplacian,
    get_field,
    verify_laplacians,
)
from .field_domain import ScalarField, Smoothness
from .handling_error import CatalogError


@pytest.mark.parametrize("dim", [2, 3])
@pytest.mark.parametrize("field_id", [i for i in catalog_ids() if i != "harmonic_re_z3"])
def test_every_entry_verifies(field_id, dim):
    tf = get_field(field_id, dim)
    assert tf.dim == dim
    assert verify_laplacians(tf) <= 1e-4
    assert tf.harmonic == (field_id in HARMONIC_IDS)


def test_planar_only_entry():
    assert get_field("harmonic_re_z3", 2).harmonic
    with pytest.raises(CatalogError, match="dims"):
        get_field("harmonic_re_z3", 3)


def test_unknown_id():
    with pytest.raises(CatalogError, match="unknown"):
        get_field("no_such_field", 2)


def test_laplacian_depth():
    quartic = get_field("radial_quartic", 3)
    assert quartic.r_max == 3
    assert len(quartic.laplacians_up_to(2)) == 3
    assert quartic.laplacians[2](np.zeros(3)) == pytest.approx(120.0)
    with pytest.raises(CatalogError):
        quartic.laplacians_up_to(4)
    cone = get_field("cone", 2)
    assert cone.r_max == 0
    assert cone.smoothness is Smoothness.C0


@pytest.mark.parametrize("dim", [2, 3])
def test_finite_difference_of_square(dim):
    f = get_field("radial_sq", dim).field
    x = np.random.default_rng(1).uniform(-1, 1, size=(5, dim))
    assert np.allclose(finite_difference_laplacian(f, x), 2.0 * dim, rtol=1e-6)


def test_wrong_laplacian_is_caught():
    f = ScalarField(func=lambda x: np.sum(x**2, axis=-1), dim=2)
    wrong = ScalarField(func=lambda x: np.full(x.shape[:-1], 2.0), dim=2)
    tf = TestField(id="bad", dim=2, field=f, laplacians=[f, wrong], smoothness=Smoothness.C_INF)
    with pytest.raises(CatalogError, match="finite differences"):
        verify_laplacians(tf)


def test_entries_are_cached():
    assert get_field("gauss_bump", 2) is get_field("gauss_bump", 2)
