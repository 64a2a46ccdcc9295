"""The convolution operator T_K, the recursive approximant T_p and its error measurement.

All stages run in the rescaled frame where D lies in B(0; 1/2). The
convolution is a lattice sum with weights K(h j) h^n on the open unit ball;
stage m is evaluated with ``mode="valid"`` so each stage shrinks the lattice by
the stencil radius, and the initial lattice is sized so the final stage still
covers B(0; 1/2).
"""

import logging
import math

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator
from scipy import signal

from .catalog import TestField
from .dirichlet import BvpSolution, build_remainder, solve_iterated
from .field_domain import (
    Domain,
    GridField,
    ScalarField,
    Smoothness,
    enclosing_ball,
    pullback_field,
    pushforward_field,
    rescale_to_half_ball,
)
from .handling_error import ConfigError, HarmonicityError
from .jackson_kernels import KernelParams, RadialKernel, kernel_stencil, polyharmonic_kernel
from .modulus import classical_moduli, harmonicity_modulus
from .sphere_mean import default_rule

logger = logging.getLogger(__name__)

HALF_BALL = 0.5
LATTICE_PAD = 2
DEGENERATE_MODULUS = 1e-9


class ApproximantConfig(BaseModel):
    model_config = ConfigDict(frozen=True)

    p: int = Field(ge=1)
    r: int = Field(default=0, ge=0)
    k: int = Field(default=3, ge=1)
    conv_grid: float = Field(default=1.0 / 64, gt=0, le=0.25)
    eval_grid: float = Field(default=1.0 / 64, gt=0)
    bvp_spacing: float = Field(default=1.0 / 256, gt=0)
    tol: float = Field(default=1e-10, gt=0)

    @model_validator(mode="after")
    def check_orders(self) -> "ApproximantConfig":
        if self.p < self.r + 1:
            raise ConfigError(f"polyharmonic order p={self.p} must be at least r+1={self.r + 1}")
        return self

    def kernel_params(self, dim: int) -> KernelParams:
        params = KernelParams.for_order(self.p, self.k, dim)
        params.check_for_approximant()
        return params


class ConvolutionLattice:
    """Centred lattice h Z^n shared by every stage; level l is cropped by l stencil radii."""

    def __init__(self, dim: int, spacing: float, stages: int, reach: float = HALF_BALL):
        self.dim = dim
        self.spacing = spacing
        self.stencil_radius = math.ceil(1.0 / spacing)
        self.half_width = stages * self.stencil_radius + math.ceil(reach / spacing) + LATTICE_PAD

    def extent(self, level: int) -> int:
        return self.half_width - level * self.stencil_radius

    def axis(self, level: int) -> np.ndarray:
        e = self.extent(level)
        return self.spacing * np.arange(-e, e + 1)

    def nodes(self, level: int) -> np.ndarray:
        return np.stack(np.meshgrid(*([self.axis(level)] * self.dim), indexing="ij"), axis=-1)

    def grid_field(self, values: np.ndarray, level: int) -> GridField:
        origin = (-self.extent(level) * self.spacing,) * self.dim
        return GridField(dim=self.dim, origin=origin, spacing=self.spacing, values=values)

    def crop(self, values: np.ndarray) -> np.ndarray:
        m = self.stencil_radius
        return values[(slice(m, -m),) * self.dim]


def convolve(K: RadialKernel, f: ScalarField, x, conv_grid: float) -> float:
    """T_K[f](x) = sum_j K(h j) h^n f(x + h j) over lattice offsets with |h j| < 1."""
    x = np.asarray(x, dtype=float)
    weights = kernel_stencil(K, conv_grid)
    m = (weights.shape[0] - 1) // 2
    axis = conv_grid * np.arange(-m, m + 1)
    offsets = np.stack(np.meshgrid(*([axis] * f.dim), indexing="ij"), axis=-1)
    support = weights > 0
    return float(weights[support] @ f(x + offsets[support]))


def stage_values(stencil: np.ndarray, phi: np.ndarray) -> np.ndarray:
    """Lattice convolution of phi with the stencil where the whole stencil fits."""
    return signal.convolve(phi, stencil, mode="valid", method="direct")


def jackson_stage(K: RadialKernel, F: ScalarField, T_prev: ScalarField, conv_grid: float) -> ScalarField:
    """T_prev + T_K[F - T_prev], sampled on a lattice covering B(0; 1/2)."""
    lattice = ConvolutionLattice(F.dim, conv_grid, stages=1)
    nodes = lattice.nodes(0)
    prev = T_prev(nodes)
    out = lattice.crop(prev) + stage_values(kernel_stencil(K, conv_grid), F(nodes) - prev)
    return lattice.grid_field(out, 1).as_field(name="T_stage")


class ApproximantResult(BaseModel):
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    p: int
    r: int
    k: int
    nu: int
    order: int
    order_equals_target: bool
    T_p: ScalarField
    tp_grid: GridField
    sup_error: float
    per_stage_errors: list[float]
    modulus_factor: float
    rate_budget: float
    implied_constant: float
    degenerate: bool
    error_floor: float
    stencil_mass: float
    eval_grid: float
    scale: float
    shift: tuple[float, ...]
    mapped_domain: Domain
    top_remainder: ScalarField
    bvp: BvpSolution


def _pulled_back_laplacians(laplacians: list[ScalarField], scale: float, shift) -> list[ScalarField]:
    # Delta_y^j G = scale^(-2j) (Delta^j f)(y / scale + shift)
    out = []
    for j, lap in enumerate(laplacians):
        G = pullback_field(lap, scale, shift)
        out.append(G if j == 0 else G * scale ** (-2 * j))
    return out


def build_approximant(
    f: ScalarField, laplacians_of_f: list[ScalarField], D: Domain, cfg: ApproximantConfig
) -> ApproximantResult:
    """T_p = h_f + T_p(F_r; r) for f with closed-form Delta^0 f .. Delta^r f."""
    if len(laplacians_of_f) < cfg.r + 1:
        raise ConfigError(f"r={cfg.r} needs Delta^0 f .. Delta^{cfg.r} f, got {len(laplacians_of_f)} fields")
    n = f.dim
    params = cfg.kernel_params(n)
    mapped, scale, shift = rescale_to_half_ball(D)
    laps = _pulled_back_laplacians(laplacians_of_f[: cfg.r + 1], scale, shift)
    G = laps[0]

    stage = "bvp"
    try:
        sol = solve_iterated(G, laps, mapped, cfg.bvp_spacing, cfg.tol)
        F = build_remainder(G, sol, mapped)
        stage = "kernel"
        K = polyharmonic_kernel(params)
        stencil = kernel_stencil(K, cfg.conv_grid)
        mass = float(stencil.sum())
        lattice = ConvolutionLattice(n, cfg.conv_grid, stages=cfg.r + 1)
        samples = mapped.sample(cfg.eval_grid, closed=True)
        F_samples = F(samples)
        F_values = F(lattice.nodes(0))
        T = np.zeros_like(F_values)
        per_stage = []
        for m in range(cfg.r + 1):
            stage = f"stage {m}"
            T = lattice.crop(T) + stage_values(stencil, F_values - T)
            F_values = lattice.crop(F_values)
            T_grid = lattice.grid_field(T, m + 1)
            per_stage.append(float(np.max(np.abs(F_samples - T_grid.interpolate(samples)))))
            logger.debug("p=%d stage %d: sup|F - T| = %.4e", cfg.p, m, per_stage[-1])
    except HarmonicityError as exc:
        exc.add_note(f"while building T_p (p={cfg.p}): {stage}")
        raise

    h_f = sol.h_f
    tp_grid = h_f.with_values(h_f.values + T_grid.interpolate(h_f.node_points()))
    tp_rescaled = ScalarField(
        func=lambda y: h_f.interpolate(y) + T_grid.interpolate(y), dim=n, smoothness_hint=Smoothness.C_INF, name="T_p"
    )
    sup_error = per_stage[-1]

    top = build_remainder(laps[cfg.r], sol, mapped, level=cfg.r)
    enclosing = enclosing_ball(mapped, 2.0 / cfg.p)
    omega = harmonicity_modulus(top, enclosing, [1.0 / cfg.p], cfg.eval_grid, default_rule(n)).values[0]
    degenerate = omega <= DEGENERATE_MODULUS
    rate_budget = omega * float(cfg.p) ** (-2 * cfg.r)
    implied = 0.0 if degenerate else sup_error / rate_budget
    floor = abs(mass - 1.0) * float(np.max(np.abs(F_samples))) + cfg.bvp_spacing**2
    logger.info(
        "T_p p=%d r=%d k=%d nu=%d: sup error %.4e, omega_h %.4e, implied constant %.4g",
        cfg.p, cfg.r, cfg.k, params.nu, sup_error, omega, implied,
    )
    return ApproximantResult(
        p=cfg.p,
        r=cfg.r,
        k=cfg.k,
        nu=params.nu,
        order=params.order,
        order_equals_target=params.order_equals_target,
        T_p=pushforward_field(tp_rescaled, scale, shift),
        tp_grid=tp_grid,
        sup_error=sup_error,
        per_stage_errors=per_stage,
        modulus_factor=omega,
        rate_budget=rate_budget,
        implied_constant=implied,
        degenerate=degenerate,
        error_floor=floor,
        stencil_mass=mass,
        eval_grid=cfg.eval_grid,
        scale=scale,
        shift=tuple(float(s) for s in shift),
        mapped_domain=mapped,
        top_remainder=top,
        bvp=sol,
    )


def build_from_catalog(tf: TestField, D: Domain, cfg: ApproximantConfig) -> ApproximantResult:
    return build_approximant(tf.field, tf.laplacians_up_to(cfg.r), D, cfg)


class CorollaryBounds(BaseModel):
    model_config = ConfigDict(frozen=True)

    omega1: float
    omega2: float
    omega_h: float
    c_omega1: float
    c_omega2: float
    degenerate: bool


def corollary_bounds(result: ApproximantResult, x_density: float | None = None) -> CorollaryBounds:
    """omega_1, omega_2 of Delta^r F_r at 1/p and the implied constants sup_error / (omega_i p^(-2r)).

    Sampled with the lattice, radii and directions of ``modulus_factor``, so
    omega_h <= min(omega_1, omega_2) holds on the reported values.
    """
    n = result.top_remainder.dim
    density = x_density or result.eval_grid
    enclosing = enclosing_ball(result.mapped_domain, 2.0 / result.p)
    rule = default_rule(n)
    u = 1.0 / result.p
    omega_h = harmonicity_modulus(result.top_remainder, enclosing, [u], density, rule).values[0]
    omega1, omega2 = classical_moduli(result.top_remainder, enclosing, u, density, rule.size, rule=rule)
    factor = float(result.p) ** (-2 * result.r)
    degenerate = min(omega1, omega2) <= DEGENERATE_MODULUS
    c1 = 0.0 if omega1 <= DEGENERATE_MODULUS else result.sup_error / (omega1 * factor)
    c2 = 0.0 if omega2 <= DEGENERATE_MODULUS else result.sup_error / (omega2 * factor)
    return CorollaryBounds(omega1=omega1, omega2=omega2, omega_h=omega_h, c_omega1=c1, c_omega2=c2, degenerate=degenerate)
