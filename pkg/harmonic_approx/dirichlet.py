"""Finite-difference Dirichlet and iterated-Laplacian solvers and the remainder F_r.

Interior grid nodes carry a 3-point stencil per axis. An arm that leaves the
domain is shortened to the boundary crossing and the boundary value is imposed
there (Shortley-Weller), which keeps second order on curved boundaries and is
exact for quadratics. The sparse operator is factorized once per grid and
reused for every level of an iterated solve.
"""

import logging
import math

import numpy as np
from pydantic import BaseModel, ConfigDict
from scipy import sparse
from scipy.sparse.linalg import splu

from .field_domain import Domain, DomainKind, GridField, ScalarField, Smoothness
from .handling_error import DomainError, SolverError

logger = logging.getLogger(__name__)

DEFAULT_SPACING = 1.0 / 128
DEFAULT_TOL = 1e-10
MIN_CELLS_ACROSS_INRADIUS = 8
MIN_ARM_FRACTION = 1e-8
MAX_REFINEMENTS = 5


class DiscreteLaplacian:
    """Shortley-Weller Laplacian on the interior nodes of D for a fixed spacing."""

    def __init__(self, D: Domain, spacing: float):
        if not spacing > 0:
            raise DomainError(f"grid spacing must be positive, got {spacing}")
        if D.inradius / spacing < MIN_CELLS_ACROSS_INRADIUS:
            raise DomainError(
                f"spacing {spacing:g} is too coarse for {D.label}: need at least "
                f"{MIN_CELLS_ACROSS_INRADIUS} cells across the inradius {D.inradius:g}"
            )
        self.domain = D
        self.spacing = spacing
        lo, hi = D.bounding_box
        self.origin = tuple(float(a) for a in lo - spacing)
        self.shape = tuple(int(math.ceil((b - a) / spacing)) + 3 for a, b in zip(lo, hi))
        axes = [o + spacing * np.arange(m) for o, m in zip(self.origin, self.shape)]
        self.nodes = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1)
        inside = D.boundary_distance(self.nodes) > 0
        if D.kind is DomainKind.GENERAL:
            inside &= D.contains(self.nodes)
        self.inside = inside
        self.n_unknowns = int(inside.sum())
        self._assemble()
        logger.debug("assembled %d unknowns on a %s grid, spacing %g", self.n_unknowns, self.shape, spacing)

    def _assemble(self) -> None:
        D, h, n = self.domain, self.spacing, self.domain.dim
        N = self.n_unknowns
        index = -np.ones(self.shape, dtype=np.int64)
        index[self.inside] = np.arange(N)
        sub = np.argwhere(self.inside)
        pts = self.nodes[self.inside]
        rows, cols, vals = [], [], []
        diag = np.zeros(N)
        bnd_rows, bnd_coef, bnd_pts = [], [], []
        for axis in range(n):
            arms, neighbours, cuts = {}, {}, {}
            for sign in (1, -1):
                nb = sub.copy()
                nb[:, axis] += sign
                nb_idx = index[tuple(nb.T)]
                cut = nb_idx < 0
                arm = np.full(N, h)
                if np.any(cut):
                    arm[cut] = np.maximum(D.boundary_crossing(pts[cut], axis, sign, h), MIN_ARM_FRACTION * h)
                arms[sign], neighbours[sign], cuts[sign] = arm, nb_idx, cut
            hp, hm = arms[1], arms[-1]
            coef = {1: 2.0 / (hp * (hp + hm)), -1: 2.0 / (hm * (hp + hm))}
            diag -= coef[1] + coef[-1]
            for sign in (1, -1):
                keep = ~cuts[sign]
                rows.append(np.flatnonzero(keep))
                cols.append(neighbours[sign][keep])
                vals.append(coef[sign][keep])
                cut = cuts[sign]
                foot = pts[cut].copy()
                foot[:, axis] += sign * arms[sign][cut]
                bnd_rows.append(np.flatnonzero(cut))
                bnd_coef.append(coef[sign][cut])
                bnd_pts.append(foot)
        rows.append(np.arange(N))
        cols.append(np.arange(N))
        vals.append(diag)
        self.matrix = sparse.csc_matrix(
            (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(N, N)
        )
        self._lu = splu(self.matrix)
        self.boundary_rows = np.concatenate(bnd_rows)
        self.boundary_coef = np.concatenate(bnd_coef)
        self.boundary_points = np.concatenate(bnd_pts)

    def grid_field(self, values: np.ndarray) -> GridField:
        return GridField(
            dim=self.domain.dim, origin=self.origin, spacing=self.spacing, values=values, inside=self.inside
        )

    def interior_values(self, field: GridField) -> np.ndarray:
        """Values of ``field`` at the interior nodes, read directly when it lives on this grid."""
        if field.shape == self.shape and np.allclose(field.origin, self.origin) and field.spacing == self.spacing:
            return field.values[self.inside]
        return field.interpolate(self.nodes[self.inside])

    def apply(self, values: np.ndarray, boundary_data: ScalarField) -> np.ndarray:
        """Discrete Laplacian at interior nodes of grid values, with boundary_data at the crossings."""
        g = boundary_data(self.boundary_points)
        lift = np.bincount(self.boundary_rows, weights=self.boundary_coef * g, minlength=self.n_unknowns)
        return self.matrix @ values[self.inside] + lift

    def solve(self, boundary_data: ScalarField, rhs: np.ndarray | None = None, tol: float = DEFAULT_TOL) -> tuple[GridField, float]:
        N = self.n_unknowns
        g = boundary_data(self.boundary_points)
        lift = np.bincount(self.boundary_rows, weights=self.boundary_coef * g, minlength=N)
        b = (np.zeros(N) if rhs is None else np.asarray(rhs, dtype=float)) - lift
        scale = max(float(np.max(np.abs(b))), 1e-300)
        u = self._lu.solve(b)
        residual = float(np.max(np.abs(b - self.matrix @ u))) / scale
        steps = 0
        while residual > tol and steps < MAX_REFINEMENTS:
            u += self._lu.solve(b - self.matrix @ u)
            residual = float(np.max(np.abs(b - self.matrix @ u))) / scale
            steps += 1
        if residual > tol:
            raise SolverError(f"Dirichlet solve on {self.domain.label} stalled above tol {tol:g}", residual=residual)
        values = boundary_data(self.nodes)
        values[self.inside] = u
        logger.debug("Dirichlet solve: residual %.3e after %d refinements", residual, steps)
        return self.grid_field(values), residual


def solve_dirichlet(
    boundary_data: ScalarField,
    rhs: GridField | None,
    D: Domain,
    spacing: float = DEFAULT_SPACING,
    tol: float = DEFAULT_TOL,
    operator: DiscreteLaplacian | None = None,
) -> GridField:
    """Delta u = rhs (0 when absent) in D, u = boundary_data on the boundary.

    Nodes outside D hold boundary_data, so the returned field extends u
    continuously past the boundary.
    """
    op = operator or DiscreteLaplacian(D, spacing)
    values = None if rhs is None else op.interior_values(rhs)
    field, _ = op.solve(boundary_data, values, tol)
    return field


class BvpSolution(BaseModel):
    """Levels u_r, ..., u_0 with u_j approximating Delta^j h_f; u_0 is h_f."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    r: int
    levels: list[GridField]
    domain: Domain
    grid_spacing: float
    residual_norms: list[float]

    @property
    def h_f(self) -> GridField:
        return self.levels[-1]

    def level(self, j: int) -> GridField:
        """u_j, the approximation of Delta^j h_f."""
        return self.levels[self.r - j]


def solve_iterated(
    f: ScalarField,
    laplacians_of_f: list[ScalarField],
    D: Domain,
    spacing: float = DEFAULT_SPACING,
    tol: float = DEFAULT_TOL,
) -> BvpSolution:
    """Solve Delta^(r+1) h = 0 with Delta^j h = Delta^j f on the boundary for j = 0..r.

    ``laplacians_of_f`` lists Delta^0 f, ..., Delta^r f.
    """
    if not laplacians_of_f:
        raise DomainError("solve_iterated needs at least Delta^0 f")
    r = len(laplacians_of_f) - 1
    op = DiscreteLaplacian(D, spacing)
    u, res = op.solve(laplacians_of_f[r], None, tol)
    levels, residuals = [u], [res]
    for j in range(r - 1, -1, -1):
        data = f if j == 0 else laplacians_of_f[j]
        u, res = op.solve(data, op.interior_values(levels[-1]), tol)
        levels.append(u)
        residuals.append(res)
    logger.info("iterated Dirichlet solve r=%d on %s, residuals %s", r, D.label, residuals)
    return BvpSolution(r=r, levels=levels, domain=D, grid_spacing=spacing, residual_norms=residuals)


def build_remainder(f: ScalarField, sol: BvpSolution, D: Domain, level: int = 0) -> ScalarField:
    """Delta^level f - u_level on the closure of D and 0 outside.

    ``f`` is Delta^level of the original field; level 0 gives F_r = f - h_f.
    """
    grid = sol.level(level)

    def remainder(x):
        x = np.asarray(x, dtype=float)
        inside = D.closure_contains(x)
        out = np.zeros(x.shape[:-1])
        if np.any(inside):
            pts = x[inside]
            out[inside] = f(pts) - grid.interpolate(pts)
        return out

    return ScalarField(func=remainder, dim=f.dim, smoothness_hint=Smoothness.C0, name=f"F[{f.name}]")


def poisson_integral(boundary_data: ScalarField, x, center, radius: float, nodes: int = 2048) -> np.ndarray:
    """Harmonic extension into a disk by trapezoid quadrature of the Poisson kernel."""
    x = np.atleast_2d(np.asarray(x, dtype=float))
    c = np.asarray(center, dtype=float)
    theta = 2 * math.pi * np.arange(nodes) / nodes
    ring = c + radius * np.stack([np.cos(theta), np.sin(theta)], axis=-1)
    g = boundary_data(ring)
    rho2 = np.sum((x - c) ** 2, axis=-1)
    dist2 = np.sum((ring[None, :, :] - x[:, None, :]) ** 2, axis=-1)
    kernel = (radius**2 - rho2)[:, None] / dist2
    return (kernel @ g) / nodes
