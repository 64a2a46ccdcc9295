"""Least-squares rate fits on log-log data."""

import logging

import numpy as np
from pydantic import BaseModel, ConfigDict

from .handling_error import RateFitError

logger = logging.getLogger(__name__)

MIN_POINTS = 3
FLOOR_FACTOR = 10.0


class RateFit(BaseModel):
    model_config = ConfigDict(frozen=True)

    slope: float
    intercept: float
    residual: float
    used: list[bool]
    n_used: int


def fit_rate(pairs, floors=None) -> RateFit:
    """Fit log err = slope * log p + intercept.

    Pairs with err <= 0, or with err below ten times the matching entry of
    ``floors``, are excluded and flagged in ``used``.
    """
    pairs = [(float(p), float(e)) for p, e in pairs]
    used = [e > 0 and p > 0 for p, e in pairs]
    if floors is not None:
        used = [u and e >= FLOOR_FACTOR * fl for u, (_, e), fl in zip(used, pairs, floors)]
    excluded = [pe for pe, u in zip(pairs, used) if not u]
    if excluded:
        logger.warning("rate fit excludes %d of %d points: %s", len(excluded), len(pairs), excluded)
    kept = [pe for pe, u in zip(pairs, used) if u]
    if len(kept) < MIN_POINTS:
        raise RateFitError(f"rate fit needs {MIN_POINTS} usable points, got {len(kept)}")
    x = np.log([p for p, _ in kept])
    y = np.log([e for _, e in kept])
    slope, intercept = np.polyfit(x, y, 1)
    residual = float(np.sqrt(np.mean((y - (slope * x + intercept)) ** 2)))
    return RateFit(slope=float(slope), intercept=float(intercept), residual=residual, used=used, n_used=len(kept))
