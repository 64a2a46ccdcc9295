"""The J0 integral operator, Pizzetti's formula and the smoothing family g_{R,t}."""

import logging
from functools import lru_cache
from typing import Callable

import numpy as np
from numpy.polynomial import chebyshev
from pydantic import BaseModel, ConfigDict, Field

from .field_domain import Domain, ScalarField, Smoothness
from .handling_error import AdmissibilityError
from .sphere_mean import SphereRule, harmonicity_differences, spherical_means

logger = logging.getLogger(__name__)

MIN_QUAD_POINTS = 16
DEFAULT_QUAD_POINTS = 64
SMOOTHING_QUAD_POINTS = 32
RADIAL_TABLE_NODES = 64
ADMISSIBILITY_TOL = 1e-9
_CHUNK = 256


class PizzettiConstants(BaseModel):
    """Dimension constants l_n, c_n and d_n = c_n l_n = 1/(2n)."""

    model_config = ConfigDict(frozen=True)

    dim: int = Field(ge=2)
    l_n: float
    c_n: float
    d_n: float

    @classmethod
    def for_dim(cls, n: int) -> "PizzettiConstants":
        if n == 2:
            l_n, c_n = 1.0, 0.25
        else:
            l_n, c_n = 1.0 / (n - 2), (n - 2) / (2.0 * n)
        return cls(dim=n, l_n=l_n, c_n=c_n, d_n=1.0 / (2 * n))

    def v_inv(self, t):
        """1/v(t) = J0[1; t]."""
        return self.c_n * np.asarray(t, dtype=float) ** 2

    def v(self, t):
        return 1.0 / self.v_inv(t)


@lru_cache(maxsize=None)
def _unit_legendre(q: int) -> tuple[np.ndarray, np.ndarray]:
    from scipy.special import roots_legendre

    x, w = roots_legendre(q)
    return (x + 1.0) / 2.0, w / 2.0


def j0_rule(R: float, dim: int, quad_points: int = DEFAULT_QUAD_POINTS) -> tuple[np.ndarray, np.ndarray]:
    """Nodes r_k in (0, R) and weights with J0[phi; R] = sum_k w_k phi(r_k).

    Uses r = R u^2 and Gauss-Legendre in u, which tames the r log(R/r)
    weight of the planar case at the origin.
    """
    if not R > 0:
        raise AdmissibilityError(f"J0 needs a positive radius, got {R}")
    if quad_points < MIN_QUAD_POINTS:
        raise AdmissibilityError(f"J0 needs at least {MIN_QUAD_POINTS} quadrature points, got {quad_points}")
    u, wu = _unit_legendre(quad_points)
    if dim == 2:
        kernel = -4.0 * R**2 * u**3 * np.log(u)
    else:
        kernel = 2.0 * R**2 * (u**3 - u ** (2 * dim - 1))
    return R * u**2, wu * kernel


def j0_apply(phi: Callable, R: float, dim: int, quad_points: int = DEFAULT_QUAD_POINTS):
    """J0[phi; R]; ``phi`` maps an array of radii to values whose first axis runs over the radii."""
    r, w = j0_rule(R, dim, quad_points)
    values = np.asarray(phi(r), dtype=float)
    if values.ndim == 0:
        values = np.full(len(r), float(values))
    result = np.tensordot(w, values, axes=(0, 0))
    return float(result) if np.ndim(result) == 0 else result


def j0_scaling_check(
    phi: Callable, s: float, R: float, dim: int, quad_points: int = DEFAULT_QUAD_POINTS
) -> tuple[float, float]:
    """Both sides of J0_s[phi(s t); R] = s^-2 J0_t[phi(t); s R]."""
    lhs = j0_apply(lambda r: phi(s * r), R, dim, quad_points)
    rhs = j0_apply(phi, s * R, dim, quad_points) / s**2
    return lhs, rhs


def pizzetti_residual(
    f: ScalarField, lap_f: ScalarField, x, R: float, rule: SphereRule, quad_points: int = DEFAULT_QUAD_POINTS
) -> float:
    """mu_0(f; x, R) - f(x) - l_n J0[r -> mu_0(lap f; x, r); R]."""
    x = np.asarray(x, dtype=float)
    consts = PizzettiConstants.for_dim(f.dim)
    diff = float(harmonicity_differences(f, x, R, rule))
    tail = j0_apply(lambda r: spherical_means(lap_f, x[None, :], r[:, None], rule)[:, 0], R, f.dim, quad_points)
    return diff - consts.l_n * tail


class RadialMeanTable:
    """Chebyshev interpolant of r -> mu_0(f; x, r) on [0, a] for a batch of centres."""

    def __init__(self, f: ScalarField, xs: np.ndarray, a: float, rule: SphereRule, nodes: int = RADIAL_TABLE_NODES):
        self.a = a
        k = np.arange(nodes)
        z = np.cos(np.pi * (k + 0.5) / nodes)
        r = a * (z + 1.0) / 2.0
        values = spherical_means(f, xs[None, :, :], r[:, None], rule)
        self.coef = chebyshev.chebfit(z, values, nodes - 1)

    def __call__(self, r: np.ndarray) -> np.ndarray:
        z = 2.0 * np.asarray(r) / self.a - 1.0
        return chebyshev.chebval(z, self.coef).T


def _check_admissible(region: Domain | None, xs: np.ndarray, radius: float) -> None:
    if region is None:
        return
    bd = region.boundary_distance(xs)
    bad = bd < radius - ADMISSIBILITY_TOL
    if np.any(bad):
        worst = xs[np.argmin(bd)]
        raise AdmissibilityError(
            f"ball B(x; {radius:g}) leaves {region.label} at x={worst.tolist()}: "
            f"need 0 < R < dist(D1, boundary of D)"
        )


def _batched(func: Callable[[np.ndarray], np.ndarray], dim: int) -> Callable[[np.ndarray], np.ndarray]:
    def evaluate(x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        flat = x.reshape(-1, dim)
        out = np.concatenate([func(flat[i : i + _CHUNK]) for i in range(0, len(flat), _CHUNK)] or [np.empty(0)])
        return out.reshape(x.shape[:-1])

    return evaluate


def _check_parameters(R: float, t: float) -> None:
    if not R > 0:
        raise AdmissibilityError(f"smoothing radius R must be positive, got {R}")
    if not 0 < t <= 1:
        raise AdmissibilityError(f"smoothing parameter t must lie in (0, 1], got {t}")


def smoothing_field(
    f: ScalarField,
    R: float,
    t: float,
    rule: SphereRule,
    region: Domain | None = None,
    quad_points: int = SMOOTHING_QUAD_POINTS,
    cached: bool = False,
) -> ScalarField:
    """g_{R,t}(x) = v(t) R^-2 J0[r -> mu_0(f; x, r); t R].

    When ``region`` is given every evaluation point must keep B(x; R t)
    inside it.
    """
    _check_parameters(R, t)
    consts = PizzettiConstants.for_dim(f.dim)
    a = t * R
    r, w = j0_rule(a, f.dim, quad_points)
    factor = float(consts.v(t)) / R**2

    def chunk(xs: np.ndarray) -> np.ndarray:
        _check_admissible(region, xs, a)
        if cached:
            means = RadialMeanTable(f, xs, a, rule)(r)
        else:
            means = spherical_means(f, xs[None, :, :], r[:, None], rule)
        return factor * (w @ means)

    return ScalarField(
        func=_batched(chunk, f.dim), dim=f.dim, smoothness_hint=Smoothness.C2, name=f"g[{f.name};R={R:g},t={t:g}]"
    )


def smoothing_laplacian(
    f: ScalarField, R: float, t: float, rule: SphereRule, region: Domain | None = None
) -> ScalarField:
    """Laplacian of g_{R,t} in closed form: v(t) / (l_n R^2) * Delta_{Rt}(f; x)."""
    _check_parameters(R, t)
    consts = PizzettiConstants.for_dim(f.dim)
    a = t * R
    factor = float(consts.v(t)) / (consts.l_n * R**2)

    def chunk(xs: np.ndarray) -> np.ndarray:
        _check_admissible(region, xs, a)
        return factor * harmonicity_differences(f, xs, a, rule)

    return ScalarField(
        func=_batched(chunk, f.dim), dim=f.dim, smoothness_hint=Smoothness.C0, name=f"lap g[{f.name};R={R:g},t={t:g}]"
    )


def smoothing_value_direct(
    f: ScalarField, x, R: float, t: float, rule: SphereRule, quad_points: int = DEFAULT_QUAD_POINTS
) -> float:
    """g_{R,t}(x) from v(t) J0_s[mu_0(f; x, R s); t], without the change of variables."""
    x = np.asarray(x, dtype=float)
    consts = PizzettiConstants.for_dim(f.dim)
    inner = j0_apply(lambda s: spherical_means(f, x[None, :], R * s[:, None], rule)[:, 0], t, f.dim, quad_points)
    return float(consts.v(t)) * inner
