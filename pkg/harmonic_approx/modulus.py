"""Harmonicity modulus, classical moduli and the harmonicity K-functional estimator.

All maxima are taken over the sample lattice of :meth:`Domain.sample` and a
radius grid ``u * j / t_refine`` (j = 1..t_refine) per requested u. The
classical moduli reuse the same lattice, radii and sphere-rule directions, so
``omega_h <= min(omega_1, omega_2)`` holds exactly between values computed with
matching arguments.
"""

import logging
from enum import Enum

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from .field_domain import Domain, ScalarField, lattice_spacing, separation
from .handling_error import AdmissibilityError, ConfigError, DomainError
from .pizzetti import PizzettiConstants, smoothing_field, smoothing_laplacian
from .sphere_mean import SphereRule, harmonicity_differences, make_rule

logger = logging.getLogger(__name__)

DEFAULT_T_REFINE = 8
DEGENERATE_TOL = 1e-12
LOWER_EQUIVALENCE_CONSTANT = 2.0


class SamplingRecord(BaseModel):
    model_config = ConfigDict(frozen=True)

    x_density: float
    lattice_spacing: float
    t_refine: int
    rule: str
    n_points: int


class ModulusCurve(BaseModel):
    """omega_h(f; u) on a grid of radii, after the running maximum."""

    model_config = ConfigDict(frozen=True)

    radii: list[float]
    values: list[float]
    raw_values: list[float]
    flagged: list[bool]
    domain_tag: str
    sampling: SamplingRecord

    def at(self, u: float) -> float:
        return self.values[self.radii.index(u)]


def _radius_grid(u: float, t_refine: int) -> np.ndarray:
    return u * np.arange(1, t_refine + 1) / t_refine


def _check_u_grid(u_grid) -> list[float]:
    radii = [float(u) for u in u_grid]
    if not radii or any(u <= 0 for u in radii) or radii != sorted(radii):
        raise DomainError(f"radius grid must be positive and sorted, got {radii}")
    return radii


def modulus_on_samples(
    f: ScalarField, points: np.ndarray, bd: np.ndarray, u_grid, rule: SphereRule, t_refine: int = DEFAULT_T_REFINE
) -> list[float]:
    """Per u: max |Delta_t(f; x)| over sampled x with bd(x) >= t, t on the refinement grid of u."""
    cache: dict[float, float] = {}
    raw = []
    for u in u_grid:
        best = 0.0
        for t in _radius_grid(u, t_refine):
            key = float(t)
            if key not in cache:
                admissible = points[bd >= t]
                if len(admissible) == 0:
                    cache[key] = 0.0
                else:
                    cache[key] = float(np.max(np.abs(harmonicity_differences(f, admissible, t, rule))))
            best = max(best, cache[key])
        raw.append(best)
    return raw


def harmonicity_modulus(
    f: ScalarField,
    D: Domain,
    u_grid,
    x_density: float,
    rule: SphereRule,
    t_refine: int = DEFAULT_T_REFINE,
) -> ModulusCurve:
    """Sampled omega_h(f; u)_D for every u of ``u_grid``.

    Radii beyond the inradius of D are computed over the admissible pairs only
    and flagged.
    """
    radii = _check_u_grid(u_grid)
    points = D.sample(x_density, closed=False)
    bd = D.boundary_distance(points)
    raw = modulus_on_samples(f, points, bd, radii, rule, t_refine)
    values = np.maximum.accumulate(raw).tolist()
    flagged = [u > D.inradius for u in radii]
    if any(flagged):
        logger.warning("radii %s exceed the inradius %.4g of %s", [u for u, fl in zip(radii, flagged) if fl], D.inradius, D.label)
    logger.debug("modulus of %s on %s: %d points, values %s", f.name, D.label, len(points), values)
    return ModulusCurve(
        radii=radii,
        values=values,
        raw_values=raw,
        flagged=flagged,
        domain_tag=D.label,
        sampling=SamplingRecord(
            x_density=x_density,
            lattice_spacing=lattice_spacing(x_density),
            t_refine=t_refine,
            rule=rule.describe(),
            n_points=len(points),
        ),
    )


def classical_moduli(
    f: ScalarField,
    D: Domain,
    u: float,
    x_density: float,
    dir_samples: int | tuple[int, int],
    t_refine: int = DEFAULT_T_REFINE,
    rule: SphereRule | None = None,
) -> tuple[float, float]:
    """Sampled (omega_1, omega_2) of f over the closure of D at radius u.

    Directions are the nodes of ``rule`` (built from ``dir_samples`` when not
    given); steps are ``u * j / t_refine``.
    """
    if not u > 0:
        raise DomainError(f"classical moduli need u > 0, got {u}")
    directions = (rule or make_rule(D.dim, dir_samples)).nodes
    points = D.sample(x_density, closed=True)
    fx = f(points)[:, None]
    omega1 = omega2 = 0.0
    for h in _radius_grid(u, t_refine):
        plus = points[:, None, :] + h * directions
        minus = points[:, None, :] - h * directions
        in_plus = D.closure_contains(plus)
        in_both = in_plus & D.closure_contains(minus)
        f_plus = f(plus)
        first = np.where(in_plus, np.abs(f_plus - fx), 0.0)
        omega1 = max(omega1, float(first.max()))
        if np.any(in_both):
            second = np.abs(f_plus - 2 * fx + f(minus))
            omega2 = max(omega2, float(np.where(in_both, second, 0.0).max()))
    return omega1, omega2


class CandidateKind(str, Enum):
    ZERO = "zero"
    IDENTITY = "identity"
    SMOOTHING = "smoothing"


class Candidate(BaseModel):
    """One g of the estimator family with ||f - g|| and ||Delta g|| over D1."""

    model_config = ConfigDict(frozen=True)

    kind: CandidateKind
    R: float | None = None
    t_inner: float | None = None
    distance: float = Field(ge=0)
    laplacian: float = Field(ge=0)

    def cost(self, t: float) -> float:
        return self.distance + t**2 * self.laplacian

    def describe(self) -> str:
        if self.kind is CandidateKind.SMOOTHING:
            return f"g[R={self.R:g},t={self.t_inner:g}]"
        return self.kind.value


class KFunctionalEstimate(BaseModel):
    model_config = ConfigDict(frozen=True)

    t: float = Field(gt=0)
    upper: float
    lower: float
    best_candidate: Candidate
    family_size: int


def candidate_norms(
    f: ScalarField,
    D1: Domain,
    candidate_R_grid,
    candidate_t_grid,
    rule: SphereRule,
    x_density: float,
    laplacian: ScalarField | None = None,
    region: Domain | None = None,
) -> list[Candidate]:
    """Norms of every candidate g over the closed samples of D1.

    The family is {0} plus {f} when its Laplacian is known plus the smoothing
    fields g_{R,t'} for R and t' on the candidate grids.
    """
    if not len(candidate_R_grid) or not len(candidate_t_grid):
        raise ConfigError("the K-functional estimator needs nonempty candidate grids")
    points = D1.sample(x_density, closed=True)
    fx = f(points)
    candidates = [Candidate(kind=CandidateKind.ZERO, distance=float(np.max(np.abs(fx))), laplacian=0.0)]
    if laplacian is not None:
        candidates.append(
            Candidate(kind=CandidateKind.IDENTITY, distance=0.0, laplacian=float(np.max(np.abs(laplacian(points)))))
        )
    for R in candidate_R_grid:
        for t_inner in candidate_t_grid:
            g = smoothing_field(f, R, t_inner, rule, region=region)
            lap_g = smoothing_laplacian(f, R, t_inner, rule, region=region)
            candidates.append(
                Candidate(
                    kind=CandidateKind.SMOOTHING,
                    R=float(R),
                    t_inner=float(t_inner),
                    distance=float(np.max(np.abs(fx - g(points)))),
                    laplacian=float(np.max(np.abs(lap_g(points)))),
                )
            )
    return candidates


def best_candidate(candidates: list[Candidate], t: float) -> Candidate:
    return min(candidates, key=lambda c: c.cost(t))


def k_functional(
    f: ScalarField,
    D1: Domain,
    t: float,
    candidate_R_grid,
    candidate_t_grid,
    rule: SphereRule,
    x_density: float,
    laplacian: ScalarField | None = None,
    region: Domain | None = None,
    t_refine: int = DEFAULT_T_REFINE,
) -> KFunctionalEstimate:
    """Upper estimate of K_h(f; t)_{D1} over the candidate family, with lower = omega_h(f; t)_{D1} / 2."""
    return k_functional_curve(
        f, D1, [t], candidate_R_grid, candidate_t_grid, rule, x_density, laplacian, region, t_refine
    )[0]


def k_functional_curve(
    f: ScalarField,
    D1: Domain,
    ts,
    candidate_R_grid,
    candidate_t_grid,
    rule: SphereRule,
    x_density: float,
    laplacian: ScalarField | None = None,
    region: Domain | None = None,
    t_refine: int = DEFAULT_T_REFINE,
) -> list[KFunctionalEstimate]:
    """K-functional estimates for several t over one shared candidate set."""
    ts = [float(t) for t in ts]
    if any(t <= 0 for t in ts):
        raise DomainError(f"K-functional needs t > 0, got {ts}")
    candidates = candidate_norms(f, D1, candidate_R_grid, candidate_t_grid, rule, x_density, laplacian, region)
    omega = harmonicity_modulus(f, D1, sorted(set(ts)), x_density, rule, t_refine)
    estimates = []
    for t in ts:
        best = best_candidate(candidates, t)
        estimates.append(
            KFunctionalEstimate(
                t=t,
                upper=best.cost(t),
                lower=omega.at(t) / LOWER_EQUIVALENCE_CONSTANT,
                best_candidate=best,
                family_size=len(candidates),
            )
        )
    return estimates


def upper_equivalence_constant(dim: int) -> float:
    """1 + v(1)/l_n: the smoothing candidate g_{R,1} costs at most omega_h + (v(1)/l_n) omega_h."""
    consts = PizzettiConstants.for_dim(dim)
    return 1.0 + float(consts.v(1.0)) / consts.l_n


class EquivalenceRow(BaseModel):
    model_config = ConfigDict(frozen=True)

    t: float
    omega_D: float
    omega_D1: float
    k_upper: float
    ratio_lower: float
    ratio_upper: float
    degenerate: bool
    best_candidate: str


def _ratio(num: float, den: float) -> tuple[float, bool]:
    if den <= DEGENERATE_TOL:
        return 0.0, True
    return num / den, False


def equivalence_report(
    f: ScalarField,
    D: Domain,
    D1: Domain,
    t_grid,
    rule: SphereRule,
    x_density: float,
    laplacian: ScalarField | None = None,
    t_inner_grid=(0.5, 1.0),
    t_refine: int = DEFAULT_T_REFINE,
) -> list[EquivalenceRow]:
    """Per t: omega_h on D and D1, the K estimate on D1 and both equivalence ratios.

    Smoothing candidates use R in {t/2, t}, so every t must lie below
    dist(D1, boundary of D). Zero denominators give ratio 0 and the
    ``degenerate`` flag.
    """
    ts = _check_u_grid(t_grid)
    d = separation(D1, D)
    if ts[-1] >= d:
        raise AdmissibilityError(f"t = {ts[-1]:g} is not below dist(D1, boundary of D) = {d:g}")
    omega_D = harmonicity_modulus(f, D, ts, x_density, rule, t_refine)
    omega_D1 = harmonicity_modulus(f, D1, ts, x_density, rule, t_refine)
    points = D1.sample(x_density, closed=True)
    fx = f(points)
    base = [Candidate(kind=CandidateKind.ZERO, distance=float(np.max(np.abs(fx))), laplacian=0.0)]
    if laplacian is not None:
        base.append(
            Candidate(kind=CandidateKind.IDENTITY, distance=0.0, laplacian=float(np.max(np.abs(laplacian(points)))))
        )
    rows = []
    for i, t in enumerate(ts):
        candidates = base + candidate_norms(f, D1, [t / 2, t], t_inner_grid, rule, x_density, region=D)[1:]
        best = best_candidate(candidates, t)
        k_upper = best.cost(t)
        lower, deg_lower = _ratio(omega_D1.values[i], k_upper)
        upper, deg_upper = _ratio(k_upper, omega_D.values[i])
        if deg_lower or deg_upper:
            logger.warning("degenerate equivalence ratio at t=%g for %s", t, f.name)
        rows.append(
            EquivalenceRow(
                t=t,
                omega_D=omega_D.values[i],
                omega_D1=omega_D1.values[i],
                k_upper=k_upper,
                ratio_lower=lower,
                ratio_upper=upper,
                degenerate=deg_lower or deg_upper,
                best_candidate=best.describe(),
            )
        )
    return rows


def modulus_scaling_ratios(
    f: ScalarField, D: Domain, D1: Domain, u: float, lambdas, x_density: float, rule: SphereRule
) -> list[tuple[float, float]]:
    """(lambda, omega_h(f; lambda u)_{D1} / ((lambda + 1)^2 omega_h(f; u)_D)); reported, never asserted."""
    base = harmonicity_modulus(f, D, [u], x_density, rule).values[0]
    out = []
    for lam in lambdas:
        top = harmonicity_modulus(f, D1, [lam * u], x_density, rule).values[0]
        ratio, _ = _ratio(top, (lam + 1) ** 2 * base)
        out.append((float(lam), ratio))
    return out
