"""Catalog of test fields with closed-form iterated Laplacians.

Every entry is checked against a central finite-difference Laplacian at
load time.
"""

import logging
from functools import lru_cache
from typing import Callable

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from .field_domain import ScalarField, Smoothness
from .handling_error import CatalogError

logger = logging.getLogger(__name__)

FD_POINTS = 20
FD_STEP = 1e-3
FD_REL_TOL = 1e-4


class TestField(BaseModel):
    """A catalog field together with Delta^0 f, ..., Delta^r_max f."""

    __test__ = False
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    id: str
    dim: int = Field(ge=2)
    field: ScalarField
    laplacians: list[ScalarField]
    smoothness: Smoothness
    notes: str = ""

    @property
    def r_max(self) -> int:
        return len(self.laplacians) - 1

    @property
    def harmonic(self) -> bool:
        return self.id in HARMONIC_IDS

    def laplacians_up_to(self, r: int) -> list[ScalarField]:
        if r > self.r_max:
            raise CatalogError(f"{self.id} supplies Laplacians up to order {self.r_max}, asked for {r}")
        return self.laplacians[: r + 1]


def _sq(x: np.ndarray) -> np.ndarray:
    return np.sum(x * x, axis=-1)


Formula = Callable[[np.ndarray], np.ndarray]


def _const(n: int) -> list[Formula]:
    return [lambda x: np.ones(x.shape[:-1]), lambda x: 0.0, lambda x: 0.0]


def _linear(n: int) -> list[Formula]:
    return [lambda x: x[..., 0] + 0.5 * x[..., 1] - 0.25, lambda x: 0.0, lambda x: 0.0]


def _harmonic_saddle(n: int) -> list[Formula]:
    return [lambda x: x[..., 0] ** 2 - x[..., 1] ** 2, lambda x: 0.0, lambda x: 0.0]


def _harmonic_re_z3(n: int) -> list[Formula]:
    return [lambda x: x[..., 0] ** 3 - 3 * x[..., 0] * x[..., 1] ** 2, lambda x: 0.0, lambda x: 0.0]


def _radial_sq(n: int) -> list[Formula]:
    return [_sq, lambda x: 2.0 * n, lambda x: 0.0]


def _radial_quartic(n: int) -> list[Formula]:
    return [lambda x: _sq(x) ** 2, lambda x: (8.0 + 4 * n) * _sq(x), lambda x: 2.0 * n * (8 + 4 * n), lambda x: 0.0]


def _gauss_bump(n: int) -> list[Formula]:
    def lap2(x):
        rho = _sq(x)
        return (16 * rho**2 - (32 + 16 * n) * rho + 4 * n**2 + 8 * n) * np.exp(-rho)

    return [lambda x: np.exp(-_sq(x)), lambda x: (4 * _sq(x) - 2 * n) * np.exp(-_sq(x)), lap2]


def _sine_product(n: int) -> list[Formula]:
    def f(x):
        return np.prod(np.sin(x), axis=-1)

    return [f, lambda x: -n * f(x), lambda x: n**2 * f(x)]


def _cone(n: int) -> list[Formula]:
    return [lambda x: np.sqrt(_sq(x))]


_ENTRIES: dict[str, tuple[Callable[[int], list[Formula]], Smoothness, tuple[int, ...], str]] = {
    "const": (_const, Smoothness.C_INF, (2, 3), "f = 1"),
    "linear": (_linear, Smoothness.C_INF, (2, 3), "f = x1 + x2/2 - 1/4"),
    "harmonic_saddle": (_harmonic_saddle, Smoothness.C_INF, (2, 3), "f = x1^2 - x2^2"),
    "harmonic_re_z3": (_harmonic_re_z3, Smoothness.C_INF, (2,), "f = Re z^3"),
    "radial_sq": (_radial_sq, Smoothness.C_INF, (2, 3), "f = |x|^2, constant Laplacian 2n"),
    "radial_quartic": (_radial_quartic, Smoothness.C_INF, (2, 3), "f = |x|^4"),
    "gauss_bump": (_gauss_bump, Smoothness.C_INF, (2, 3), "f = exp(-|x|^2)"),
    "sine_product": (_sine_product, Smoothness.C_INF, (2, 3), "f = prod sin(x_i)"),
    "cone": (_cone, Smoothness.C0, (2, 3), "f = |x|, continuous only; no Laplacians"),
}

HARMONIC_IDS = frozenset({"const", "linear", "harmonic_saddle", "harmonic_re_z3"})


def catalog_ids() -> list[str]:
    return sorted(_ENTRIES)


def finite_difference_laplacian(f: ScalarField, x: np.ndarray, h: float = FD_STEP) -> np.ndarray:
    """Central (2n+1)-point Laplacian of f at the points x."""
    x = np.asarray(x, dtype=float)
    total = -2.0 * f.dim * f(x)
    for axis in range(f.dim):
        step = np.zeros(f.dim)
        step[axis] = h
        total = total + f(x + step) + f(x - step)
    return total / h**2


def verify_laplacians(tf: TestField, seed: int = 0) -> float:
    """Largest relative mismatch between FD and closed-form Laplacians; raises CatalogError beyond tolerance."""
    rng = np.random.default_rng(seed)
    x = rng.uniform(-1.0, 1.0, size=(FD_POINTS, tf.dim))
    worst = 0.0
    for j in range(tf.r_max):
        fd = finite_difference_laplacian(tf.laplacians[j], x)
        exact = tf.laplacians[j + 1](x)
        err = float(np.max(np.abs(fd - exact) / np.maximum(1.0, np.abs(exact))))
        if err > FD_REL_TOL:
            raise CatalogError(f"{tf.id}: Delta^{j + 1} disagrees with finite differences (relative error {err:.2e})")
        worst = max(worst, err)
    return worst


@lru_cache(maxsize=None)
def get_field(field_id: str, dim: int) -> TestField:
    """Catalog entry ``field_id`` in R^dim, verified on first use."""
    if field_id not in _ENTRIES:
        raise CatalogError(f"unknown test field {field_id!r}; known: {', '.join(catalog_ids())}")
    builder, smoothness, dims, notes = _ENTRIES[field_id]
    if dim not in dims:
        raise CatalogError(f"test field {field_id!r} is defined for dims {dims}, not {dim}")
    formulas = builder(dim)
    fields = [
        ScalarField(func=g, dim=dim, smoothness_hint=smoothness, name=field_id if j == 0 else f"lap{j}({field_id})")
        for j, g in enumerate(formulas)
    ]
    tf = TestField(id=field_id, dim=dim, field=fields[0], laplacians=fields, smoothness=smoothness, notes=notes)
    worst = verify_laplacians(tf)
    logger.debug("catalog field %s (n=%d) verified, worst FD mismatch %.2e", field_id, dim, worst)
    return tf
