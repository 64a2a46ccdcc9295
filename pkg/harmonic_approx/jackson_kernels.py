"""Periodic, nonperiodic and polyharmonic Jackson kernels.

The periodic kernel [sin(nu t/2) / sin(t/2)]^(2k) is a cosine polynomial of
degree k(nu - 1) with integer coefficients. Under x = 2 sin(t/2), cos(j t)
becomes T_j(1 - s/2) with s = x^2, so the same integers are the Chebyshev
coefficients of the radial profile q0(s) in the variable y = 1 - s/2. The
kernel is evaluated as F(y)^k, F being the Fejer factor of degree nu - 1, and
the monomial coefficients in s are produced only up to degree 60.
"""

import logging
import math
from fractions import Fraction
from functools import lru_cache
from typing import Callable

import numpy as np
from numpy.polynomial import chebyshev
from pydantic import BaseModel, ConfigDict, Field, model_validator
from scipy.special import gamma as gamma_fn
from scipy.special import roots_legendre

from .handling_error import KernelError

logger = logging.getLogger(__name__)

MONOMIAL_DEGREE_CAP = 60
MONOMIAL_REL_TOL = 1e-9


def sphere_area(dim: int) -> float:
    """Surface area of the unit sphere in R^dim."""
    return 2.0 * math.pi ** (dim / 2) / float(gamma_fn(dim / 2))


def _convolve(a: list[int], b: list[int]) -> list[int]:
    out = [0] * (len(a) + len(b) - 1)
    for i, x in enumerate(a):
        if x:
            for j, y in enumerate(b):
                out[i + j] += x * y
    return out


def _fejer_two_sided(nu: int) -> list[int]:
    # [sin(nu t/2)/sin(t/2)]^2 = sum_{|j|<nu} (nu - |j|) e^{ijt}
    return [nu - abs(j) for j in range(-(nu - 1), nu)]


@lru_cache(maxsize=None)
def _trig_coefficients(k: int, nu: int) -> tuple[int, ...]:
    fejer = _fejer_two_sided(nu)
    power = [1]
    for _ in range(k):
        power = _convolve(power, fejer)
    mid = len(power) // 2
    return tuple([power[mid]] + [2 * a for a in power[mid + 1 :]])


def _check_orders(k: int, nu: int) -> None:
    if k < 1 or nu < 1:
        raise KernelError(f"Jackson kernels need k >= 1 and nu >= 1, got k={k}, nu={nu}")


def trig_coefficients(k: int, nu: int) -> list[int]:
    """Integers c_j with [sin(nu t/2)/sin(t/2)]^(2k) = c_0 + sum_j c_j cos(j t)."""
    _check_orders(k, nu)
    return list(_trig_coefficients(k, nu))


def fejer_chebyshev(nu: int) -> np.ndarray:
    """Chebyshev coefficients in y = cos t of [sin(nu t/2)/sin(t/2)]^2."""
    return np.array([nu] + [2 * (nu - j) for j in range(1, nu)], dtype=float)


def dirichlet_power(t, k: int, nu: int) -> np.ndarray:
    """[sin(nu t/2)/sin(t/2)]^(2k) with the value nu^(2k) at t = 0 mod 2 pi."""
    t = np.asarray(t, dtype=float)
    den = np.sin(t / 2)
    singular = np.abs(den) < 1e-300
    ratio = np.where(singular, float(nu), np.sin(nu * t / 2) / np.where(singular, 1.0, den))
    return ratio ** (2 * k)


def periodic_kernel(k: int, nu: int) -> tuple[float, Callable[[np.ndarray], np.ndarray]]:
    """(gamma, J) with J(t) = [sin(nu t/2)/sin(t/2)]^(2k) / gamma on [-pi, pi].

    gamma = (1/pi) int_{-pi}^{pi} [...]^(2k) dt = 2 c_0.
    """
    _check_orders(k, nu)
    gamma = 2.0 * _trig_coefficients(k, nu)[0]
    return gamma, lambda t: dirichlet_power(t, k, nu) / gamma


def periodic_gamma_quadrature(k: int, nu: int) -> float:
    """gamma by the periodic trapezoid rule, exact once the node count exceeds the degree."""
    m = 2 * k * (nu - 1) + 2
    t = -math.pi + 2 * math.pi * np.arange(m) / m
    return float(2.0 * np.mean(dirichlet_power(t, k, nu)))


@lru_cache(maxsize=None)
def _legendre_unit(q: int) -> tuple[np.ndarray, np.ndarray]:
    x, w = roots_legendre(q)
    return (x + 1.0) / 2.0, w / 2.0


def _profile(s, k: int, nu: int) -> np.ndarray:
    """q0(s) = F(1 - s/2)^k, F the Fejer factor."""
    y = 1.0 - np.asarray(s, dtype=float) / 2.0
    return chebyshev.chebval(y, fejer_chebyshev(nu)) ** k


def _radial_integral(k: int, nu: int, power: int) -> float:
    """int_0^1 r^power q0(r^2) dr, exact Gauss-Legendre for the polynomial integrand."""
    degree = power + 2 * k * (nu - 1)
    r, w = _legendre_unit(degree // 2 + 2)
    return float(w @ (r**power * _profile(r**2, k, nu)))


def nonperiodic_kernel(k: int, nu: int) -> tuple[float, Callable[[np.ndarray], np.ndarray]]:
    """(gamma_bar, Jbar) with Jbar(x) = [...]^(2k)(arccos(1 - x^2/2)) / gamma_bar on [-2, 2].

    gamma_bar = int_{-1}^{1} [...]^(2k)(arccos(1 - x^2/2)) dx. The arccos
    argument is clamped to [-1, 1].
    """
    _check_orders(k, nu)
    gamma_bar = 2.0 * _radial_integral(k, nu, 0)

    def evaluate(x):
        x = np.asarray(x, dtype=float)
        return dirichlet_power(np.arccos(np.clip(1.0 - x**2 / 2.0, -1.0, 1.0)), k, nu) / gamma_bar

    return gamma_bar, evaluate


def _chebyshev_shift_coefficient(j: int, m: int) -> Fraction:
    # coefficient of s^m in T_j(1 - s/2)
    if j == 0:
        return Fraction(1 if m == 0 else 0)
    sign = -1 if m % 2 else 1
    return Fraction(sign * j * math.factorial(j + m - 1), math.factorial(j - m) * math.factorial(2 * m))


def chebyshev_to_monomial(c: list) -> list[Fraction]:
    """Exact coefficients in s of sum_j c_j T_j(1 - s/2), lowest degree first."""
    c = [Fraction(a) for a in c]
    degree = len(c) - 1
    return [sum((c[j] * _chebyshev_shift_coefficient(j, m) for j in range(m, degree + 1)), Fraction(0)) for m in range(degree + 1)]


def radial_polynomial_exact(k: int, nu: int) -> list[Fraction]:
    """Exact monomial coefficients of q0(s) = sum_j c_j T_j(1 - s/2), any degree."""
    return chebyshev_to_monomial(trig_coefficients(k, nu))


def radial_polynomial(k: int, nu: int) -> list[float]:
    """Monomial coefficients of q0(s), lowest degree first; degree k(nu - 1) <= 60."""
    _check_orders(k, nu)
    degree = k * (nu - 1)
    if degree > MONOMIAL_DEGREE_CAP:
        raise KernelError(f"monomial form of degree {degree} exceeds the cap {MONOMIAL_DEGREE_CAP}")
    return [float(a) for a in radial_polynomial_exact(k, nu)]


def radial_laplacian(coeffs: list, dim: int) -> list:
    """Laplacian in R^dim of sum_m a_m |x|^(2m): Delta s^m = 2m(2m + n - 2) s^(m-1)."""
    return [2 * m * (2 * m + dim - 2) * coeffs[m] for m in range(1, len(coeffs))]


class KernelParams(BaseModel):
    model_config = ConfigDict(frozen=True)

    k: int = Field(ge=1)
    nu: int = Field(ge=1)
    dim: int = Field(ge=2)
    p_target: int | None = Field(default=None, ge=1)

    @model_validator(mode="after")
    def check_target(self) -> "KernelParams":
        if self.p_target is not None:
            expected = (self.p_target - 1) // self.k + 1
            if self.nu != expected:
                raise KernelError(f"p={self.p_target}, k={self.k} gives nu={expected}, not {self.nu}")
        return self

    @classmethod
    def for_order(cls, p: int, k: int, dim: int) -> "KernelParams":
        params = cls(k=k, nu=(p - 1) // k + 1, dim=dim, p_target=p)
        if params.order == p:
            logger.warning("kernel order k(nu-1)+1 equals p=%d (k=%d divides p-1)", p, k)
        return params

    @property
    def degree(self) -> int:
        return self.k * (self.nu - 1)

    @property
    def order(self) -> int:
        return self.degree + 1

    @property
    def order_equals_target(self) -> bool:
        return self.p_target is not None and self.order == self.p_target

    def check_for_approximant(self) -> None:
        if 2 * self.k - self.dim < 3:
            raise KernelError(f"approximation kernels need 2k - n >= 3, got k={self.k}, n={self.dim}")


class RadialKernel(BaseModel):
    """J(x) = q(|x|^2), normalized to unit integral over B(0; 1)."""

    model_config = ConfigDict(frozen=True)

    params: KernelParams
    cheb_coeffs: list[int]
    poly_s: list[float] | None
    gamma: float
    gamma_bar: float
    norm_const: float = Field(gt=0)

    @property
    def degree(self) -> int:
        return self.params.degree

    def profile(self, s) -> np.ndarray:
        """q(s) for s = |x|^2."""
        return self.norm_const * _profile(s, self.params.k, self.params.nu)

    def __call__(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        return self.profile(np.sum(x * x, axis=-1))


def polyharmonic_kernel(params: KernelParams) -> RadialKernel:
    k, nu, n = params.k, params.nu, params.dim
    Z = sphere_area(n) * _radial_integral(k, nu, n - 1)
    if not Z > 0:
        raise KernelError(f"kernel normalization {Z} is not positive for {params}")
    poly = radial_polynomial(k, nu) if params.degree <= MONOMIAL_DEGREE_CAP else None
    gamma_bar, _ = nonperiodic_kernel(k, nu)
    logger.debug("kernel k=%d nu=%d n=%d: degree %d, Z=%.6g", k, nu, n, params.degree, Z)
    return RadialKernel(
        params=params,
        cheb_coeffs=trig_coefficients(k, nu),
        poly_s=None if poly is None else [a / Z for a in poly],
        gamma=2.0 * _trig_coefficients(k, nu)[0],
        gamma_bar=gamma_bar,
        norm_const=1.0 / Z,
    )


def moment(kernel: RadialKernel | KernelParams, i: int) -> float:
    """I_i = int_0^1 t^(i+n-1) q(t^2) dt."""
    if i < 0:
        raise KernelError(f"moment index must be nonnegative, got {i}")
    if isinstance(kernel, KernelParams):
        kernel = polyharmonic_kernel(kernel)
    p = kernel.params
    return kernel.norm_const * _radial_integral(p.k, p.nu, i + p.dim - 1)


def ball_integral(kernel: RadialKernel) -> float:
    """omega_n * I_0, the integral of the kernel over B(0; 1)."""
    return sphere_area(kernel.params.dim) * moment(kernel, 0)


def polyharmonic_order_check(kernel: RadialKernel) -> int:
    """Smallest p with Delta^p K = 0, found by applying the radial Laplacian in exact arithmetic.

    Works on the kernel's stored monomial coefficients when present, otherwise
    on its Chebyshev coefficients converted to monomials. Floats convert to
    Fractions exactly, so no coefficient is trimmed.
    """
    if kernel.poly_s is not None:
        coeffs = [Fraction(a) for a in kernel.poly_s]
    else:
        coeffs = chebyshev_to_monomial(kernel.cheb_coeffs)
    applications = 0
    while any(coeffs):
        coeffs = radial_laplacian(coeffs, kernel.params.dim)
        applications += 1
    return applications


def monomial_is_accurate(kernel: RadialKernel, points: int = 401, rel_tol: float = MONOMIAL_REL_TOL) -> bool:
    """Whether double-precision evaluation of poly_s tracks the profile on s in [0, 4]."""
    if kernel.poly_s is None:
        return False
    s = np.linspace(0.0, 4.0, points)
    gap = np.max(np.abs(np.polynomial.polynomial.polyval(s, kernel.poly_s) - kernel.profile(s)))
    return bool(gap <= rel_tol * float(kernel.profile(0.0)))


def kernel_stencil(kernel: RadialKernel, h: float) -> np.ndarray:
    """Weights K(h j) h^n on the lattice h Z^n, zero outside the open unit ball.

    The array is centred: index m along each axis is the origin, m = ceil(1/h).
    """
    n = kernel.params.dim
    m = math.ceil(1.0 / h)
    axis = h * np.arange(-m, m + 1)
    grids = np.meshgrid(*([axis] * n), indexing="ij")
    s = sum(g * g for g in grids)
    return np.where(s < 1.0, kernel.profile(s), 0.0) * h**n
