"""Quadrature on the unit sphere and the spherical mean.

The weights of a :class:`SphereRule` sum to one, so a rule computes the mean
value over the sphere directly and the surface area never appears.
"""

import logging
import math
from enum import Enum

import numpy as np
from pydantic import BaseModel, ConfigDict, Field
from scipy.special import roots_legendre

from .field_domain import ScalarField
from .handling_error import SphereRuleError

logger = logging.getLogger(__name__)

MIN_BUDGET = 4
DEFAULT_BUDGETS: dict[int, int | tuple[int, int]] = {2: 128, 3: (24, 48)}
DEFAULT_MC_BUDGET = 4096


class RuleScheme(str, Enum):
    TRAPEZOID = "trapezoid"
    PRODUCT_GAUSS = "product_gauss"
    MONTE_CARLO = "monte_carlo"


class SphereRule(BaseModel):
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    dim: int = Field(ge=2)
    nodes: np.ndarray
    weights: np.ndarray
    scheme: RuleScheme
    seed: int | None = None

    @property
    def size(self) -> int:
        return len(self.weights)

    @property
    def symmetric(self) -> bool:
        """True when the node set is invariant under xi -> -xi with equal weights."""
        return self.scheme is not RuleScheme.TRAPEZOID or self.size % 2 == 0

    def describe(self) -> str:
        return f"{self.scheme.value}[{self.size}]"


def make_rule(dim: int, node_budget: int | tuple[int, int], seed: int | None = None) -> SphereRule:
    """Quadrature rule on the unit sphere of R^dim.

    ``dim == 2``: equally spaced angles; ``dim == 3``: Gauss-Legendre in the
    polar cosine times the trapezoid rule in azimuth (``node_budget`` may be a
    ``(polar, azimuth)`` pair); ``dim >= 4``: antithetic Monte Carlo pairs.
    """
    if dim < 2:
        raise SphereRuleError(f"sphere rules need dim >= 2, got {dim}")
    total = node_budget[0] * node_budget[1] if isinstance(node_budget, tuple) else node_budget
    if total < MIN_BUDGET:
        raise SphereRuleError(f"node budget {node_budget} is below the minimum {MIN_BUDGET}")

    if dim == 2:
        m = int(total)
        phi = 2 * math.pi * np.arange(m) / m
        nodes = np.stack([np.cos(phi), np.sin(phi)], axis=-1)
        return SphereRule(dim=2, nodes=nodes, weights=np.full(m, 1.0 / m), scheme=RuleScheme.TRAPEZOID)

    if dim == 3:
        if isinstance(node_budget, tuple):
            n_polar, n_azimuth = node_budget
        else:
            n_polar = max(2, int(round(math.sqrt(total / 2))))
            n_azimuth = total // n_polar
        n_azimuth -= n_azimuth % 2
        if n_polar < 2 or n_azimuth < 2:
            raise SphereRuleError(f"node budget {node_budget} too small for a product Gauss rule")
        z, wz = roots_legendre(n_polar)
        phi = 2 * math.pi * np.arange(n_azimuth) / n_azimuth
        zz, pp = np.meshgrid(z, phi, indexing="ij")
        rho = np.sqrt(1.0 - zz**2)
        nodes = np.stack([rho * np.cos(pp), rho * np.sin(pp), zz], axis=-1).reshape(-1, 3)
        weights = np.outer(wz / 2.0, np.full(n_azimuth, 1.0 / n_azimuth)).reshape(-1)
        return SphereRule(dim=3, nodes=nodes, weights=weights, scheme=RuleScheme.PRODUCT_GAUSS)

    half = int(total) // 2
    rng = np.random.default_rng(0 if seed is None else seed)
    v = rng.standard_normal((half, dim))
    v /= np.linalg.norm(v, axis=-1, keepdims=True)
    logger.warning("dimension %d uses Monte Carlo sphere sampling (%d nodes): low accuracy", dim, 2 * half)
    return SphereRule(
        dim=dim,
        nodes=np.concatenate([v, -v]),
        weights=np.full(2 * half, 1.0 / (2 * half)),
        scheme=RuleScheme.MONTE_CARLO,
        seed=seed,
    )


def default_rule(dim: int, seed: int | None = None) -> SphereRule:
    return make_rule(dim, DEFAULT_BUDGETS.get(dim, DEFAULT_MC_BUDGET), seed=seed)


def _sphere_points(x, h, rule: SphereRule) -> np.ndarray:
    # (..., q, n) points x + h*xi_j; h broadcasts against the leading axes of x
    x = np.asarray(x, dtype=float)
    h = np.asarray(h, dtype=float)[..., None, None]
    return x[..., None, :] + h * rule.nodes


def spherical_means(f: ScalarField, x, h, rule: SphereRule) -> np.ndarray:
    """mu_0(f; x, h) for an array of centres ``x`` of shape (..., n)."""
    return f(_sphere_points(x, h, rule)) @ rule.weights


def spherical_mean(f: ScalarField, x, h: float, rule: SphereRule) -> float:
    """Mean of f over the sphere of radius h about x."""
    return float(spherical_means(f, np.asarray(x, dtype=float), h, rule))


def harmonicity_difference(f: ScalarField, x, h: float, rule: SphereRule) -> float:
    """Delta_h(f; x) = mu_0(f; x, h) - f(x)."""
    return spherical_mean(f, x, h, rule) - float(f(np.asarray(x, dtype=float)))


def harmonicity_differences(f: ScalarField, x, h, rule: SphereRule) -> np.ndarray:
    return spherical_means(f, x, h, rule) - f(x)


def centered_difference(f: ScalarField, x, h: float, rule: SphereRule) -> float:
    """sum_j w_j (f(x + h xi_j) - f(x))."""
    x = np.asarray(x, dtype=float)
    return float((f(_sphere_points(x, h, rule)) - f(x)) @ rule.weights)


def second_difference_mean(f: ScalarField, x, h: float, rule: SphereRule) -> float:
    """(1/2) sum_j w_j (f(x + h xi_j) - 2 f(x) + f(x - h xi_j))."""
    x = np.asarray(x, dtype=float)
    fx = f(x)
    plus = f(_sphere_points(x, h, rule))
    minus = f(_sphere_points(x, -h, rule))
    return float(0.5 * ((plus - 2 * fx + minus) @ rule.weights))
