"""Prediction intervals for Y1 - Y0 that hold under every coupling of the margins."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .core import (DeltaEvent, DiscretePMF, StepCDF, StructureError, as_cdf, as_pmf,
                   check_alpha, get_tolerance, minkowski_difference)
from .frechet import ite_pmf_bounds
from .makarov import makarov_lower, upper_bound_strictly_below
from .oracle import OracleSizeError, TransportInstance, extremize_mass

SHARP_CELL_GUARD = 400
MODES = ("sharp", "conservative")


def _render(x: float):
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return x


@dataclass(frozen=True)
class RealInterval:
    """Closed interval [lo, hi]; infinite ends only appear in reports."""

    lo: float
    hi: float

    def __post_init__(self):
        if self.lo > self.hi:
            raise ValueError(f"empty interval [{self.lo}, {self.hi}]")

    @property
    def length(self) -> float:
        return self.hi - self.lo

    def contains(self, x: float, tol: Optional[float] = None) -> bool:
        tol = get_tolerance() if tol is None else tol
        return self.lo - tol <= x <= self.hi + tol

    def event(self) -> DeltaEvent:
        return DeltaEvent.interval(self.lo, self.hi)

    def to_list(self) -> list:
        return [_render(self.lo), _render(self.hi)]

    def __str__(self) -> str:
        if self.lo == self.hi:
            return f"{{{self.lo:g}}}"
        return f"[{self.lo:g}, {self.hi:g}]"


@dataclass(frozen=True)
class QuantileAnchors:
    """Tail quantiles of both arms that every valid interval has to reach.

    ``L1p`` is the smallest support point of Y1 with P(Y1 <= x) > alpha and
    ``R1p`` the largest with P(Y1 >= x) > alpha; likewise for Y0.
    """

    L0p: float
    R0p: float
    L1p: float
    R1p: float


def _lower_anchor(F: StepCDF, alpha: float, tol: float) -> float:
    k = int(np.argmax(F.cdf_values > alpha + tol))
    return float(F.jump_points[k])


def _upper_anchor(F: StepCDF, alpha: float, tol: float) -> float:
    survival = 1.0 - np.concatenate([[0.0], F.cdf_values[:-1]])   # P(Y >= x_k)
    k = np.nonzero(survival > alpha + tol)[0][-1]
    return float(F.jump_points[k])


def quantile_anchors(F1, F0, alpha: float) -> QuantileAnchors:
    alpha = check_alpha(alpha)
    F1, F0 = as_cdf(F1), as_cdf(F0)
    tol = get_tolerance()
    return QuantileAnchors(_lower_anchor(F0, alpha, tol), _upper_anchor(F0, alpha, tol),
                           _lower_anchor(F1, alpha, tol), _upper_anchor(F1, alpha, tol))


def must_include_points(F1, F0, alpha: float) -> tuple[float, float]:
    """(L1' - R0', R1' - L0'): both lie in every valid interval at level alpha."""
    q = quantile_anchors(F1, F0, alpha)
    return (q.L1p - q.R0p, q.R1p - q.L0p)


def marginal_interval(F, mass_below: float, mass_above: float) -> RealInterval:
    """Tightest [L, R] over support points with P(Y < L) <= mass_below and P(Y > R) <= mass_above."""
    F = as_cdf(F)
    tol = get_tolerance()
    lo = F.jump_points[int(np.argmax(F.cdf_values > mass_below + tol))]
    hi = F.jump_points[int(np.argmax(1.0 - F.cdf_values <= mass_above + tol))]
    return RealInterval(float(lo), float(hi))


def conservative_interval(F1, F0, alpha: float, tails: float = 0.5) -> RealInterval:
    """[L1 - R0, R1 - L0] from per-arm intervals that each hold mass >= 1 - alpha/2.

    ``tails`` is the share of each arm's alpha/2 budget spent on the lower
    tail; the default splits it evenly.
    """
    alpha = check_alpha(alpha)
    if not 0.0 <= tails <= 1.0:
        raise ValueError(f"tails must lie in [0, 1], got {tails!r}")
    budget = alpha / 2
    a1 = marginal_interval(F1, tails * budget, (1 - tails) * budget)
    a0 = marginal_interval(F0, tails * budget, (1 - tails) * budget)
    return RealInterval(a1.lo - a0.hi, a1.hi - a0.lo)


def _levels(pmf1: DiscretePMF, pmf0: DiscretePMF, levels: Optional[Sequence[float]]) -> np.ndarray:
    if levels is None:
        return np.union1d(pmf1.support, pmf0.support)
    lv = np.unique(np.asarray(levels, dtype=float))
    for name, p in (("Y1", pmf1), ("Y0", pmf0)):
        if not np.all(np.isin(p.support, lv)):
            raise StructureError(f"{name} has support points outside the declared levels")
    return lv


def ordinal_trivial_check(pmf1, pmf0, alpha: float,
                          levels: Optional[Sequence[float]] = None) -> bool:
    """True when both extreme differences may carry more than alpha.

    That is min{P(Y1=lowest), P(Y0=highest)} > alpha and
    min{P(Y1=highest), P(Y0=lowest)} > alpha, the necessary condition for only
    the full range to be a valid interval. ``levels`` fixes the common
    ordinal scale; it defaults to the union of both supports.
    """
    alpha = check_alpha(alpha)
    pmf1, pmf0 = as_pmf(pmf1), as_pmf(pmf0)
    lv = _levels(pmf1, pmf0, levels)
    low, high = lv[0], lv[-1]
    return (min(pmf1.prob_at(low), pmf0.prob_at(high)) > alpha
            and min(pmf1.prob_at(high), pmf0.prob_at(low)) > alpha)


def ordinal_zero_pmf_check(pmf1, pmf0, alpha: float) -> bool:
    """True when the sharp upper bound on P(Y1 - Y0 = 0) is below alpha."""
    alpha = check_alpha(alpha)
    bound = ite_pmf_bounds(as_pmf(pmf1), as_pmf(pmf0), 0.0, certificates=False)
    return bound.upper < alpha


class CoverageEvaluator:
    """Worst-case coverage of [a, b] over all couplings, cached per interval.

    ``sharp`` solves the transportation problem exactly. ``conservative``
    returns max{0, F^L(b) - F^U(a-)}, a valid lower bound that need not be
    attained.
    """

    def __init__(self, pmf1, pmf0, mode: str = "sharp"):
        if mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}, got {mode!r}")
        self.pmf1, self.pmf0 = as_pmf(pmf1), as_pmf(pmf0)
        self.mode = mode
        cells = len(self.pmf1) * len(self.pmf0)
        if mode == "sharp" and cells > SHARP_CELL_GUARD:
            raise OracleSizeError(
                f"sharp mode needs at most {SHARP_CELL_GUARD} support cells, got {cells}; "
                "use mode='conservative'")
        self.grid = minkowski_difference(self.pmf1.support, self.pmf0.support)
        self._diffs = self.pmf1.support[:, None] - self.pmf0.support[None, :]
        self._cache: dict = {}

    def __call__(self, lo: float, hi: float) -> float:
        key = (lo, hi)
        if key not in self._cache:
            self._cache[key] = self._sharp(lo, hi) if self.mode == "sharp" else self._bound(lo, hi)
        return self._cache[key]

    def _sharp(self, lo: float, hi: float) -> float:
        tol = get_tolerance()
        mask = (self._diffs >= lo - tol) & (self._diffs <= hi + tol)
        if mask.all():
            return 1.0
        if not mask.any():
            return 0.0
        inst = TransportInstance(self.pmf1, self.pmf0, mask)
        return extremize_mass(inst, "min", size_guard=max(mask.shape)).value

    def _bound(self, lo: float, hi: float) -> float:
        return max(0.0, makarov_lower(self.pmf1, self.pmf0, hi)
                   - upper_bound_strictly_below(self.pmf1, self.pmf0, lo))


@dataclass(frozen=True)
class IntervalResult:
    interval: RealInterval
    worst_case_coverage: float
    co_optimal: list
    must_include: tuple
    mode: str
    alpha: float
    note: str = ""
    coverages: dict = field(default_factory=dict, repr=False)

    def to_dict(self) -> dict:
        out = {"interval": self.interval.to_list(),
               "worst_case_coverage": self.worst_case_coverage,
               "co_optimal": [iv.to_list() for iv in self.co_optimal],
               "must_include": list(self.must_include),
               "mode": self.mode, "alpha": self.alpha}
        if self.note:
            out["note"] = self.note
        return out


CONSERVATIVE_NOTE = ("coverage is a lower bound from cdf bounds; it is valid for the "
                     "interval but may be smaller than the true worst case")


def minimal_valid_interval(pmf1, pmf0, alpha: float, mode: str = "sharp",
                           evaluator: Optional[CoverageEvaluator] = None) -> IntervalResult:
    """Shortest interval on the difference grid whose worst-case coverage is >= 1 - alpha.

    Among intervals of that length the highest coverage wins. Exact ties are
    all reported in ``co_optimal``, ordered by decreasing left end.
    """
    alpha = check_alpha(alpha)
    pmf1, pmf0 = as_pmf(pmf1), as_pmf(pmf0)
    if evaluator is None:
        evaluator = CoverageEvaluator(pmf1, pmf0, mode)
    elif evaluator.mode != mode:
        raise ValueError(f"evaluator mode {evaluator.mode!r} differs from {mode!r}")
    tol = get_tolerance()
    g = evaluator.grid
    pairs = sorted(((g[j] - g[i], -g[i], i, j) for i in range(g.size) for j in range(i, g.size)))
    chosen: list = []
    coverages: dict = {}
    k = 0
    while k < len(pairs) and not chosen:
        length = pairs[k][0]
        group = []
        while k < len(pairs) and pairs[k][0] <= length + tol:
            _, _, i, j = pairs[k]
            group.append((g[i], g[j]))
            k += 1
        scored = [(lo, hi, evaluator(lo, hi)) for lo, hi in group]
        coverages.update({(lo, hi): c for lo, hi, c in scored})
        valid = [s for s in scored if s[2] >= 1.0 - alpha - tol]
        if valid:
            best = max(c for _, _, c in valid)
            chosen = [s for s in valid if s[2] >= best - tol]
    lo, hi, cov = chosen[0]
    interval = RealInterval(float(lo), float(hi))
    points = must_include_points(pmf1, pmf0, alpha)
    for p in points:
        if not interval.contains(p):
            raise AssertionError(f"interval {interval} misses the required point {p}")
    return IntervalResult(interval, float(cov),
                          [RealInterval(float(a), float(b)) for a, b, _ in chosen],
                          points, mode, alpha,
                          CONSERVATIVE_NOTE if mode == "conservative" else "", coverages)
