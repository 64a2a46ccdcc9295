"""Scalar fields, bounded domains and grid-backed fields.

Every maximum computed by the package is taken over the deterministic sample
lattice produced by :meth:`Domain.sample`: points ``k*h`` with ``h`` a power of
two, plus explicit boundary samples for balls and boxes. Lattices of
different densities are nested, so sampled maxima only grow under refinement,
and the samples of a subdomain are lattice points of its parent.
"""

import logging
import math
from enum import Enum
from functools import cached_property
from typing import Callable

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator
from scipy.interpolate import RegularGridInterpolator
from scipy.optimize import brentq

from .handling_error import DomainError

logger = logging.getLogger(__name__)

HALF_BALL_SAFETY = 0.99

PointFunction = Callable[[np.ndarray], np.ndarray]


class Smoothness(str, Enum):
    C0 = "C0"
    C2 = "C2"
    C_INF = "C_inf"


_SMOOTHNESS_RANK = {Smoothness.C0: 0, Smoothness.C2: 1, Smoothness.C_INF: 2}


def _weakest(a: Smoothness, b: Smoothness) -> Smoothness:
    return a if _SMOOTHNESS_RANK[a] <= _SMOOTHNESS_RANK[b] else b


class ScalarField(BaseModel):
    """A real function on R^n.

    ``func`` receives an array of shape ``(..., dim)`` and returns the values
    with shape ``(...)``; anything broadcastable to that shape is accepted, so
    ``lambda x: 3.0`` is a valid constant field.
    """

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    func: PointFunction
    dim: int = Field(ge=2)
    smoothness_hint: Smoothness = Smoothness.C0
    name: str = "f"

    def __call__(self, x) -> np.ndarray | float:
        pts = np.asarray(x, dtype=float)
        if pts.shape[-1] != self.dim:
            raise DomainError(
                f"field {self.name!r} lives in R^{self.dim}, got points of shape {pts.shape}"
            )
        values = np.broadcast_to(np.asarray(self.func(pts), dtype=float), pts.shape[:-1])
        if pts.ndim == 1:
            return float(values)
        return np.array(values)

    def _combine(self, other: "ScalarField", op, symbol: str) -> "ScalarField":
        if other.dim != self.dim:
            raise DomainError(f"cannot combine fields of dimension {self.dim} and {other.dim}")
        f, g = self, other
        return ScalarField(
            func=lambda x: op(f(x), g(x)),
            dim=self.dim,
            smoothness_hint=_weakest(self.smoothness_hint, other.smoothness_hint),
            name=f"({f.name}{symbol}{g.name})",
        )

    def __add__(self, other: "ScalarField") -> "ScalarField":
        return self._combine(other, np.add, "+")

    def __sub__(self, other: "ScalarField") -> "ScalarField":
        return self._combine(other, np.subtract, "-")

    def __mul__(self, factor: float) -> "ScalarField":
        f, c = self, float(factor)
        return ScalarField(
            func=lambda x: c * f(x), dim=self.dim, smoothness_hint=self.smoothness_hint, name=f"{c}*{f.name}"
        )

    __rmul__ = __mul__

    def __neg__(self) -> "ScalarField":
        return self * -1.0


def constant_field(value: float, dim: int) -> ScalarField:
    return ScalarField(func=lambda x: value, dim=dim, smoothness_hint=Smoothness.C_INF, name=str(value))


def zero_field(dim: int) -> ScalarField:
    return constant_field(0.0, dim)


def lattice_spacing(density: float) -> float:
    """Largest power of two not exceeding ``density``."""
    if not density > 0:
        raise DomainError(f"grid density must be positive, got {density}")
    return 2.0 ** math.floor(math.log2(density))


def _pow2_at_least(value: float) -> int:
    return 2 ** max(2, math.ceil(math.log2(max(value, 1.0))))


class DomainKind(str, Enum):
    BALL = "ball"
    BOX = "box"
    GENERAL = "general"


class Domain(BaseModel):
    """A bounded open set: a ball, an axis-aligned box or a general set.

    General domains carry a caller-supplied ``distance`` that must be positive
    exactly where ``indicator`` is true; connectivity is not checked.
    """

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    dim: int = Field(ge=2)
    kind: DomainKind
    center: tuple[float, ...] | None = None
    radius: float | None = Field(default=None, gt=0)
    lo: tuple[float, ...] | None = None
    hi: tuple[float, ...] | None = None
    indicator: PointFunction | None = None
    distance: PointFunction | None = None
    general_inradius: float | None = Field(default=None, gt=0)
    tag: str = ""

    @model_validator(mode="after")
    def check_kind(self) -> "Domain":
        if self.kind is DomainKind.BALL:
            if self.center is None or self.radius is None or len(self.center) != self.dim:
                raise DomainError("a ball needs a center in R^dim and a positive radius")
        else:
            if self.lo is None or self.hi is None or len(self.lo) != self.dim or len(self.hi) != self.dim:
                raise DomainError(f"{self.kind.value} domain needs lo/hi corners in R^{self.dim}")
            if any(a >= b for a, b in zip(self.lo, self.hi)):
                raise DomainError(f"empty box: lo={self.lo}, hi={self.hi}")
            if self.kind is DomainKind.GENERAL and (self.indicator is None or self.distance is None):
                raise DomainError("a general domain needs an indicator and a boundary distance")
        return self

    @classmethod
    def ball(cls, center, radius: float, tag: str = "") -> "Domain":
        center = tuple(float(c) for c in center)
        return cls(dim=len(center), kind=DomainKind.BALL, center=center, radius=float(radius), tag=tag)

    @classmethod
    def box(cls, lo, hi, tag: str = "") -> "Domain":
        lo = tuple(float(a) for a in lo)
        hi = tuple(float(b) for b in hi)
        return cls(dim=len(lo), kind=DomainKind.BOX, lo=lo, hi=hi, tag=tag)

    @classmethod
    def general(
        cls,
        indicator: PointFunction,
        boundary_distance: PointFunction,
        bounding_box: tuple,
        inradius: float | None = None,
        tag: str = "",
    ) -> "Domain":
        lo = tuple(float(a) for a in bounding_box[0])
        hi = tuple(float(b) for b in bounding_box[1])
        return cls(
            dim=len(lo),
            kind=DomainKind.GENERAL,
            lo=lo,
            hi=hi,
            indicator=indicator,
            distance=boundary_distance,
            general_inradius=inradius,
            tag=tag,
        )

    @property
    def label(self) -> str:
        if self.tag:
            return self.tag
        if self.kind is DomainKind.BALL:
            return f"ball(c={self.center}, r={self.radius:g})"
        if self.kind is DomainKind.BOX:
            return f"box(lo={self.lo}, hi={self.hi})"
        return "general"

    @property
    def bounding_box(self) -> tuple[np.ndarray, np.ndarray]:
        if self.kind is DomainKind.BALL:
            c = np.asarray(self.center)
            return c - self.radius, c + self.radius
        return np.asarray(self.lo), np.asarray(self.hi)

    def boundary_distance(self, x) -> np.ndarray:
        """Distance to the boundary for points inside; nonpositive outside."""
        pts = np.asarray(x, dtype=float)
        if self.kind is DomainKind.BALL:
            return self.radius - np.linalg.norm(pts - np.asarray(self.center), axis=-1)
        if self.kind is DomainKind.BOX:
            return np.minimum(pts - np.asarray(self.lo), np.asarray(self.hi) - pts).min(axis=-1)
        return np.broadcast_to(np.asarray(self.distance(pts), dtype=float), pts.shape[:-1])

    def contains(self, x) -> np.ndarray:
        pts = np.asarray(x, dtype=float)
        if self.kind is DomainKind.GENERAL:
            return np.broadcast_to(np.asarray(self.indicator(pts), dtype=bool), pts.shape[:-1])
        return self.boundary_distance(pts) > 0

    def closure_contains(self, x, tol: float = 1e-12) -> np.ndarray:
        return self.boundary_distance(x) >= -tol

    @cached_property
    def inradius(self) -> float:
        if self.kind is DomainKind.BALL:
            return float(self.radius)
        if self.kind is DomainKind.BOX:
            return float(np.min(np.asarray(self.hi) - np.asarray(self.lo)) / 2)
        if self.general_inradius is not None:
            return float(self.general_inradius)
        lo, hi = self.bounding_box
        axes = [np.linspace(a, b, 65) for a, b in zip(lo, hi)]
        pts = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1)
        return float(max(np.max(self.boundary_distance(pts)), 0.0))

    def bounding_ball(self) -> tuple[np.ndarray, float]:
        if self.kind is DomainKind.BALL:
            return np.asarray(self.center), float(self.radius)
        lo, hi = self.bounding_box
        return (lo + hi) / 2, float(np.linalg.norm(hi - lo) / 2)

    def sample(self, density: float, closed: bool = True) -> np.ndarray:
        """Deterministic sample points of the closure (or of the open set).

        Raises :class:`DomainError` when no sample falls in the domain.
        """
        h = lattice_spacing(density)
        lo, hi = self.bounding_box
        axes = []
        for a, b in zip(lo, hi):
            ks = np.arange(math.ceil(a / h), math.floor(b / h) + 1)
            coords = ks * h
            if self.kind is DomainKind.BOX and closed:
                coords = np.union1d(coords, [a, b])
            axes.append(coords)
        if any(len(c) == 0 for c in axes):
            raise DomainError(f"no lattice point of spacing {h:g} falls in {self.label}")
        pts = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, self.dim)
        if closed:
            if self.kind is DomainKind.BOX:
                keep = np.ones(len(pts), dtype=bool)
            else:
                keep = self.boundary_distance(pts) >= 0
        else:
            keep = self.contains(pts) & (self.boundary_distance(pts) > 0)
        pts = pts[keep]
        if closed and self.kind is DomainKind.BALL:
            pts = np.concatenate([pts, self._sphere_samples(h)])
        if len(pts) == 0:
            raise DomainError(f"sample grid of spacing {h:g} misses {self.label}")
        return pts

    def _sphere_samples(self, h: float) -> np.ndarray:
        c, r = np.asarray(self.center), self.radius
        if self.dim == 2:
            m = _pow2_at_least(2 * math.pi * r / h)
            phi = 2 * math.pi * np.arange(m) / m
            return c + r * np.stack([np.cos(phi), np.sin(phi)], axis=-1)
        m = _pow2_at_least(math.pi * r / h)
        theta = math.pi * np.arange(m + 1) / m
        phi = 2 * math.pi * np.arange(2 * m) / (2 * m)
        tt, pp = np.meshgrid(theta, phi, indexing="ij")
        unit = np.stack([np.sin(tt) * np.cos(pp), np.sin(tt) * np.sin(pp), np.cos(tt)], axis=-1)
        unit = unit.reshape(-1, 3)
        if self.dim > 3:
            unit = np.concatenate([unit, np.zeros((len(unit), self.dim - 3))], axis=-1)
        return c + r * unit

    def boundary_crossing(self, x: np.ndarray, axis: int, sign: int, h: float) -> np.ndarray:
        """Distance from interior points ``x`` to the boundary along ``sign*e_axis``.

        The caller guarantees the boundary is crossed within ``h``.
        """
        x = np.atleast_2d(np.asarray(x, dtype=float))
        if self.kind is DomainKind.BALL:
            d = x - np.asarray(self.center)
            rest = np.sum(d * d, axis=-1) - d[:, axis] ** 2
            s = np.sqrt(np.maximum(self.radius**2 - rest, 0.0)) - sign * d[:, axis]
        elif self.kind is DomainKind.BOX:
            s = self.hi[axis] - x[:, axis] if sign > 0 else x[:, axis] - self.lo[axis]
        else:
            step = np.zeros(self.dim)
            step[axis] = sign
            s = np.array(
                [
                    brentq(lambda t, p=p: float(self.boundary_distance(p + t * step)), 0.0, h)
                    if self.boundary_distance(p + h * step) < 0
                    else h
                    for p in x
                ]
            )
        return np.clip(s, 0.0, h)


def sup_norm(f: ScalarField, D: Domain, grid_density: float) -> float:
    """max |f| over the closed sample lattice of D with spacing <= grid_density."""
    pts = D.sample(grid_density, closed=True)
    return float(np.max(np.abs(f(pts))))


def shrink(D: Domain, margin: float) -> Domain:
    """The subdomain {x in D : dist(x, boundary of D) > margin}."""
    if not margin > 0:
        raise DomainError(f"shrink margin must be positive, got {margin}")
    if margin >= D.inradius:
        raise DomainError(f"margin {margin:g} >= inradius {D.inradius:g} of {D.label}: empty subdomain")
    if D.kind is DomainKind.BALL:
        return Domain.ball(D.center, D.radius - margin)
    if D.kind is DomainKind.BOX:
        return Domain.box(np.asarray(D.lo) + margin, np.asarray(D.hi) - margin)
    parent = D
    return Domain.general(
        indicator=lambda x: np.asarray(parent.contains(x)) & (parent.boundary_distance(x) > margin),
        boundary_distance=lambda x: parent.boundary_distance(x) - margin,
        bounding_box=parent.bounding_box,
        inradius=parent.inradius - margin,
    )


def separation(inner: Domain, outer: Domain, density: float | None = None) -> float:
    """dist(inner, boundary of outer) for inner contained in outer."""
    if inner.kind is DomainKind.BALL and outer.kind is DomainKind.BALL:
        offset = np.linalg.norm(np.asarray(inner.center) - np.asarray(outer.center))
        return float(outer.radius - inner.radius - offset)
    if inner.kind is DomainKind.BOX and outer.kind is DomainKind.BOX:
        gaps = np.concatenate(
            [np.asarray(inner.lo) - np.asarray(outer.lo), np.asarray(outer.hi) - np.asarray(inner.hi)]
        )
        return float(gaps.min())
    density = density or inner.inradius / 64
    return float(np.min(outer.boundary_distance(inner.sample(density, closed=True))))


def enclosing_ball(D: Domain, margin: float) -> Domain:
    """A ball containing the closure of D thickened by ``margin``."""
    c, rho = D.bounding_ball()
    return Domain.ball(c, rho + margin, tag="enclosing")


def rescale_to_half_ball(D: Domain) -> tuple[Domain, float, np.ndarray]:
    """Similarity y = (x - shift) * scale moving D inside B(0; 1/2).

    The bounding ball of D is mapped onto B(0; 0.99/2).
    """
    shift, rho = D.bounding_ball()
    scale = HALF_BALL_SAFETY * 0.5 / rho
    if D.kind is DomainKind.BALL:
        mapped = Domain.ball(np.zeros(D.dim), D.radius * scale, tag=D.tag)
    elif D.kind is DomainKind.BOX:
        mapped = Domain.box((np.asarray(D.lo) - shift) * scale, (np.asarray(D.hi) - shift) * scale, tag=D.tag)
    else:
        lo, hi = D.bounding_box
        mapped = Domain.general(
            indicator=lambda y: D.contains(np.asarray(y) / scale + shift),
            boundary_distance=lambda y: D.boundary_distance(np.asarray(y) / scale + shift) * scale,
            bounding_box=((lo - shift) * scale, (hi - shift) * scale),
            inradius=D.general_inradius * scale if D.general_inradius else None,
            tag=D.tag,
        )
    logger.debug("rescaled %s by %.6g about %s", D.label, scale, shift)
    return mapped, scale, shift


def pullback_field(f: ScalarField, scale: float, shift) -> ScalarField:
    """G(y) = f(y / scale + shift): the field f seen in the rescaled frame."""
    if not scale > 0:
        raise DomainError(f"similarity scale must be positive, got {scale}")
    shift = np.asarray(shift, dtype=float)
    return ScalarField(
        func=lambda y: f(np.asarray(y) / scale + shift),
        dim=f.dim,
        smoothness_hint=f.smoothness_hint,
        name=f"{f.name}*",
    )


def pushforward_field(G: ScalarField, scale: float, shift) -> ScalarField:
    """f(x) = G((x - shift) * scale): inverse of :func:`pullback_field`."""
    if not scale > 0:
        raise DomainError(f"similarity scale must be positive, got {scale}")
    shift = np.asarray(shift, dtype=float)
    return ScalarField(
        func=lambda x: G((np.asarray(x) - shift) * scale),
        dim=G.dim,
        smoothness_hint=G.smoothness_hint,
        name=G.name.rstrip("*"),
    )


class InterpOrder(str, Enum):
    LINEAR = "linear"
    CUBIC = "cubic"


class GridField(BaseModel):
    """Samples of a field on the regular grid ``origin + spacing * index``."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    dim: int = Field(ge=2)
    origin: tuple[float, ...]
    spacing: float = Field(gt=0)
    values: np.ndarray
    interp_order: InterpOrder = InterpOrder.LINEAR
    inside: np.ndarray | None = None

    @model_validator(mode="after")
    def check_shape(self) -> "GridField":
        if self.values.ndim != self.dim or len(self.origin) != self.dim:
            raise DomainError(f"grid values of shape {self.values.shape} do not match dimension {self.dim}")
        if self.inside is not None and self.inside.shape != self.values.shape:
            raise DomainError("inside mask must have the shape of the values")
        return self

    @property
    def shape(self) -> tuple[int, ...]:
        return self.values.shape

    @property
    def axes(self) -> list[np.ndarray]:
        return [o + self.spacing * np.arange(n) for o, n in zip(self.origin, self.shape)]

    def node_points(self) -> np.ndarray:
        return np.stack(np.meshgrid(*self.axes, indexing="ij"), axis=-1)

    def covers(self, D: Domain) -> bool:
        lo, hi = D.bounding_box
        return all(ax[0] <= a and ax[-1] >= b for ax, a, b in zip(self.axes, lo, hi))

    @cached_property
    def _interpolator(self) -> RegularGridInterpolator:
        return RegularGridInterpolator(
            self.axes, self.values, method=self.interp_order.value, bounds_error=False, fill_value=np.nan
        )

    def interpolate(self, points) -> np.ndarray:
        pts = np.asarray(points, dtype=float)
        return self._interpolator(pts.reshape(-1, self.dim)).reshape(pts.shape[:-1])

    def as_field(self, name: str = "grid", smoothness: Smoothness = Smoothness.C0) -> ScalarField:
        return ScalarField(func=self.interpolate, dim=self.dim, smoothness_hint=smoothness, name=name)

    def with_values(self, values: np.ndarray) -> "GridField":
        return GridField(
            dim=self.dim,
            origin=self.origin,
            spacing=self.spacing,
            values=np.asarray(values, dtype=float),
            interp_order=self.interp_order,
            inside=self.inside,
        )

    @classmethod
    def from_field(
        cls,
        f: ScalarField,
        origin,
        spacing: float,
        shape: tuple[int, ...],
        interp_order: InterpOrder = InterpOrder.LINEAR,
    ) -> "GridField":
        origin = tuple(float(o) for o in origin)
        axes = [o + spacing * np.arange(n) for o, n in zip(origin, shape)]
        pts = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1)
        return cls(dim=f.dim, origin=origin, spacing=spacing, values=f(pts), interp_order=interp_order)
