"""Sharp bounds on the cdf of Y1 - Y0 from step-cdf margins.

Both bounds are extrema over real y of g(y) = F1(y) - P(Y0 < y - delta). For
step cdfs g only changes at jump points of F1 and at y = j + delta for jumps
j of F0, so the extremum over the real line is taken over the values at those
candidates and the values on the open cells just to their right. On an open
cell g equals F1(y) - F0(y - delta) at the cell's left end. The supremum is
always reached at a candidate. The infimum often is not: with Y1 = 0,
Y0 = 1 and delta = -1.5 every candidate gives g = 1 but the cell right of
y = 0 gives g = 0.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .core import BoundPair, DeltaEvent, StepCDF, as_cdf, check_alpha, minkowski_difference


def _candidates(F1: StepCDF, F0: StepCDF, delta: float) -> np.ndarray:
    return np.unique(np.concatenate([F1.jump_points, F0.jump_points + delta]))


def _g_values(F1: StepCDF, F0: StepCDF, delta: float) -> tuple[list, list]:
    """g at each candidate, and g on the open cell to the right of it."""
    at, right = [], []
    for y in _candidates(F1, F0, delta):
        f1 = F1(y)
        at.append(f1 - F0.left_limit(y - delta))
        right.append(f1 - F0(y - delta))
    return at, right


def makarov_lower(F1, F0, delta: float) -> float:
    """Sharp lower bound on P(Y1 - Y0 <= delta)."""
    F1, F0 = as_cdf(F1), as_cdf(F0)
    at, right = _g_values(F1, F0, delta)
    return float(min(max(max(at), max(right), 0.0), 1.0))


def makarov_upper(F1, F0, delta: float) -> float:
    """Sharp upper bound on P(Y1 - Y0 <= delta)."""
    F1, F0 = as_cdf(F1), as_cdf(F0)
    at, right = _g_values(F1, F0, delta)
    return float(min(max(1.0 + min(min(at), min(right), 0.0), 0.0), 1.0))


def lower_bound_strictly_below(F1, F0, delta: float = 0.0) -> float:
    """Sharp lower bound on P(Y1 - Y0 < delta): sup over y of F1(y) - F0(y - delta).

    Both terms are right-continuous, so the candidate values are exact.
    """
    F1, F0 = as_cdf(F1), as_cdf(F0)
    best = 0.0
    for y in _candidates(F1, F0, delta):
        best = max(best, F1(y) - F0(y - delta))
    return float(min(best, 1.0))


def upper_bound_strictly_below(F1, F0, delta: float) -> float:
    """Sharp upper bound on P(Y1 - Y0 < delta).

    Complement of the lower bound on P(Y1 - Y0 >= delta), which is
    sup over y of F0(y - delta) - P(Y1 < y).
    """
    F1, F0 = as_cdf(F1), as_cdf(F0)
    worst = 0.0
    for y in _candidates(F1, F0, delta):
        f0 = F0(y - delta)
        worst = max(worst, f0 - F1.left_limit(y), f0 - F1(y))
    return float(min(max(1.0 - worst, 0.0), 1.0))


def cdf_bounds(F1, F0, delta: float) -> BoundPair:
    return BoundPair(makarov_lower(F1, F0, delta), makarov_upper(F1, F0, delta),
                     event=DeltaEvent.at_most(delta))


@dataclass(frozen=True, eq=False)
class CdfBoundCurve:
    """Pointwise lower and upper cdf bounds on a delta grid."""

    delta_grid: np.ndarray
    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        g = np.asarray(self.delta_grid, dtype=float)
        lo = np.asarray(self.lower, dtype=float)
        hi = np.asarray(self.upper, dtype=float)
        if not (g.shape == lo.shape == hi.shape):
            raise ValueError("grid and bound arrays must have the same length")
        if np.any(np.diff(g) <= 0):
            raise ValueError("delta grid must be strictly increasing")
        for name, arr in (("delta_grid", g), ("lower", lo), ("upper", hi)):
            object.__setattr__(self, name, arr)

    def at(self, delta: float) -> BoundPair:
        k = int(np.searchsorted(self.delta_grid, delta))
        if k >= self.delta_grid.size or self.delta_grid[k] != delta:
            raise KeyError(f"{delta!r} is not on the grid")
        return BoundPair(self.lower[k], self.upper[k], event=DeltaEvent.at_most(delta))

    def to_dict(self) -> dict:
        return {"delta": self.delta_grid.tolist(), "lower": self.lower.tolist(),
                "upper": self.upper.tolist()}


def cdf_bound_curve(F1, F0, grid: Optional[Sequence[float]] = None) -> CdfBoundCurve:
    """Bounds at every grid point; the default grid is the set of attainable differences."""
    F1, F0 = as_cdf(F1), as_cdf(F0)
    if grid is None:
        grid = minkowski_difference(F1.jump_points, F0.jump_points)
    grid = np.unique(np.asarray(grid, dtype=float))
    lo = [makarov_lower(F1, F0, d) for d in grid]
    hi = [makarov_upper(F1, F0, d) for d in grid]
    return CdfBoundCurve(grid, np.array(lo), np.array(hi))


def cdf_to_pmf_bounds(at_i: BoundPair, at_prev: BoundPair) -> BoundPair:
    """Bounds on P(Delta = i) from bounds on F(i) and F(i - 1) for integer-valued Delta.

    With F(i) in [a, b] and F(i - 1) in [c, d] the result is
    [max(a - d, 0), min(b - c, 1)]. Valid, not sharp beyond the binary case.
    """
    a, b = at_i.lower, at_i.upper
    c, d = at_prev.lower, at_prev.upper
    event = None
    if at_i.event is not None and np.isfinite(at_i.event.hi):
        event = DeltaEvent.singleton(at_i.event.hi)
    return BoundPair(max(a - d, 0.0), min(b - c, 1.0), event=event)


@dataclass(frozen=True)
class ZeroExclusion:
    upper_at_zero: float
    lower_below_zero: float
    alpha: float
    left_endpoint_must_be_leq_0: bool
    right_endpoint_must_be_geq_0: bool

    @property
    def must_contain_zero(self) -> bool:
        return self.left_endpoint_must_be_leq_0 and self.right_endpoint_must_be_geq_0

    def to_dict(self) -> dict:
        return {"F_upper_at_0": self.upper_at_zero, "F_lower_below_0": self.lower_below_zero,
                "alpha": self.alpha,
                "left_endpoint_must_be_leq_0": self.left_endpoint_must_be_leq_0,
                "right_endpoint_must_be_geq_0": self.right_endpoint_must_be_geq_0,
                "must_contain_zero": self.must_contain_zero}


def zero_exclusion(F1, F0, alpha: float) -> ZeroExclusion:
    """Whether some compatible joint forces a valid interval to reach zero from either side."""
    alpha = check_alpha(alpha)
    up = makarov_upper(F1, F0, 0.0)
    low = lower_bound_strictly_below(F1, F0, 0.0)
    return ZeroExclusion(up, low, alpha, up > alpha, 1.0 - low > alpha)
