"""Binary treatment, binary outcome: types, validity and best prediction sets.

With ``p0 = P(Y=1 | D=0)`` and ``p1 = P(Y=1 | D=1)`` the joint law of
(Y0, Y1) has one free parameter ``t = P(Always Recover)``:

    AR = t,  HU = p0 - t,  HE = p1 - t,  NR = 1 - p0 - p1 + t,

with ``max(0, p0 + p1 - 1) <= t <= min(p0, p1)``. Every coverage question for
the six interval-shaped prediction sets reduces to a linear function of
``t`` on that range.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Optional

from .core import (BoundPair, Coupling, DeltaEvent, DiscretePMF, InfeasibleError,
                   check_alpha, check_probability, get_tolerance)


class BinarySet(enum.Enum):
    """The six interval-shaped prediction sets for an effect in {-1, 0, 1}."""

    NEG_ONE = (-1, -1)
    ZERO = (0, 0)
    ONE = (1, 1)
    NEG_TO_ZERO = (-1, 0)
    ZERO_TO_ONE = (0, 1)
    FULL = (-1, 1)

    @property
    def lo(self) -> int:
        return self.value[0]

    @property
    def hi(self) -> int:
        return self.value[1]

    @property
    def length(self) -> int:
        return self.hi - self.lo

    @property
    def atoms(self) -> frozenset:
        return frozenset(range(self.lo, self.hi + 1))

    @property
    def label(self) -> str:
        if self.lo == self.hi:
            return "{%d}" % self.lo
        return "[%d,%d]" % (self.lo, self.hi)

    def reflect(self) -> "BinarySet":
        """Image under effect -> -effect (what swapping the two arms does)."""
        return BinarySet((-self.hi, -self.lo))

    def event(self) -> DeltaEvent:
        return DeltaEvent.interval(self.lo, self.hi)

    @classmethod
    def parse(cls, text: str) -> "BinarySet":
        key = text.strip()
        for s in cls:
            if key.upper() == s.name or key.replace(" ", "") == s.label:
                return s
        raise ValueError(f"unknown prediction set {text!r}; use one of "
                         + ", ".join(f"{s.name} ({s.label})" for s in cls))

    def __str__(self) -> str:
        return self.label


# deterministic output order; ZERO_TO_ONE precedes NEG_TO_ZERO in ties
SET_ORDER = (BinarySet.NEG_ONE, BinarySet.ZERO, BinarySet.ONE,
             BinarySet.ZERO_TO_ONE, BinarySet.NEG_TO_ZERO, BinarySet.FULL)


@dataclass(frozen=True)
class BinaryMarginals:
    """Arm-wise recovery rates: ``p0 = P(Y=1 | D=0)``, ``p1 = P(Y=1 | D=1)``."""

    p0: float
    p1: float

    def __post_init__(self):
        object.__setattr__(self, "p0", check_probability(self.p0, "p0"))
        object.__setattr__(self, "p1", check_probability(self.p1, "p1"))

    def swapped(self) -> "BinaryMarginals":
        return BinaryMarginals(self.p1, self.p0)

    def pmfs(self) -> tuple[DiscretePMF, DiscretePMF]:
        """(pmf of Y1, pmf of Y0) on the outcome support {0, 1}."""
        return (DiscretePMF([0, 1], [1 - self.p1, self.p1]),
                DiscretePMF([0, 1], [1 - self.p0, self.p0]))

    @property
    def ate(self) -> float:
        return self.p1 - self.p0


@dataclass(frozen=True)
class TypeDistribution:
    """Shares of Never Recover, Helped, Hurt and Always Recover."""

    nr: float
    he: float
    hu: float
    ar: float

    def coupling(self) -> Coupling:
        """Joint pmf with rows Y1 in {0, 1} and columns Y0 in {0, 1}."""
        return Coupling([0, 1], [0, 1], [[self.nr, self.hu], [self.he, self.ar]])

    def effect_pmf(self) -> dict:
        return {-1: self.hu, 0: self.nr + self.ar, 1: self.he}


def feasible_t_range(m: BinaryMarginals) -> tuple[float, float]:
    """Boole-Frechet range of ``t = P(AR)``."""
    return max(0.0, m.p0 + m.p1 - 1.0), min(m.p0, m.p1)


def type_distribution(m: BinaryMarginals, t: float) -> TypeDistribution:
    t_min, t_max = feasible_t_range(m)
    if t < t_min - 1e-12:
        raise InfeasibleError(
            f"t={t!r} violates the Frechet lower bound t >= max(0, p0 + p1 - 1) = {t_min!r}")
    if t > t_max + 1e-12:
        raise InfeasibleError(
            f"t={t!r} violates the Frechet upper bound t <= min(p0, p1) = {t_max!r}")
    t = min(max(t, t_min), t_max)
    return TypeDistribution(nr=max(0.0, 1.0 - m.p0 - m.p1 + t), he=max(0.0, m.p1 - t),
                            hu=max(0.0, m.p0 - t), ar=t)


def coverage_at(m: BinaryMarginals, s: BinarySet, t: float) -> float:
    """P(effect in s) under the joint law indexed by ``t``."""
    pmf = type_distribution(m, t).effect_pmf()
    return sum(pmf[k] for k in s.atoms)


def coverage_formula(p0, p1, s: BinarySet):
    """Worst-case coverage as a closed form in (p0, p1).

    Works for any number type with min/max and arithmetic, so passing
    :class:`fractions.Fraction` values gives exact results.
    """
    zero = p0 - p0
    t_min, t_max = max(zero, p0 + p1 - 1), min(p0, p1)
    if s is BinarySet.FULL:
        return zero + 1
    if s is BinarySet.ZERO:
        return 1 - p0 - p1 + 2 * t_min
    if s is BinarySet.ONE:
        return p1 - t_max
    if s is BinarySet.NEG_ONE:
        return p0 - t_max
    if s is BinarySet.ZERO_TO_ONE:
        return 1 - (p0 - t_min)
    return 1 - (p1 - t_min)


def worst_case_coverage(m: BinaryMarginals, s: BinarySet) -> float:
    """Minimum over compatible joints of P(effect in s)."""
    return float(coverage_formula(m.p0, m.p1, s))


def valid_sets(m: BinaryMarginals, alpha: float, tol: Optional[float] = None) -> list:
    """Sets whose worst-case coverage is at least ``1 - alpha``, in ``SET_ORDER``."""
    alpha = check_alpha(alpha)
    tol = get_tolerance() if tol is None else tol
    return [s for s in SET_ORDER if worst_case_coverage(m, s) >= 1.0 - alpha - tol]


def closed_form_valid_sets(m: BinaryMarginals, alpha: float, tol: Optional[float] = None) -> list:
    """Valid sets from the explicit marginal inequalities, no optimization over t."""
    alpha = check_alpha(alpha)
    tol = get_tolerance() if tol is None else tol
    p0, p1 = m.p0, m.p1
    ok = {
        BinarySet.FULL: True,
        BinarySet.ZERO: p0 + p1 <= alpha + tol or (1 - p0) + (1 - p1) <= alpha + tol,
        BinarySet.ONE: p1 - p0 >= 1 - alpha - tol,
        BinarySet.NEG_ONE: p0 - p1 >= 1 - alpha - tol,
        BinarySet.ZERO_TO_ONE: p0 <= alpha + tol or 1 - p1 <= alpha + tol,
        BinarySet.NEG_TO_ZERO: p1 <= alpha + tol or 1 - p0 <= alpha + tol,
    }
    return [s for s in SET_ORDER if ok[s]]


def shortest_sets(m: BinaryMarginals, alpha: float, tol: Optional[float] = None) -> list:
    """All valid sets of minimal length, ties left unsplit."""
    valid = valid_sets(m, alpha, tol)
    shortest = min(s.length for s in valid)
    return [s for s in valid if s.length == shortest]


def classify_best(m: BinaryMarginals, alpha: float, tol: Optional[float] = None) -> list:
    """Valid sets of minimal length with the highest worst-case coverage.

    Two sets come back only on an exact coverage tie, which for these margins
    means [0,1] and [-1,0] with ``p0 == p1``.
    """
    tol = get_tolerance() if tol is None else tol
    candidates = shortest_sets(m, alpha, tol)
    cover = {s: worst_case_coverage(m, s) for s in candidates}
    best = max(cover.values())
    return [s for s in candidates if cover[s] >= best - tol]


def _exists_t(lo_weak: list, lo_strict: list, hi_weak: list, hi_strict: list) -> bool:
    lw, hw = max(lo_weak), min(hi_weak)
    ls = max(lo_strict) if lo_strict else None
    hs = min(hi_strict) if hi_strict else None
    if lw > hw:
        return False
    if ls is not None and not ls < hw:
        return False
    if hs is not None and not lw < hs:
        return False
    if ls is not None and hs is not None and not ls < hs:
        return False
    return True


def necessary_condition_valid_best(s: BinarySet, m: BinaryMarginals, alpha: float) -> bool:
    """Whether some joint law compatible with ``m`` makes ``s`` valid (best, for wide sets).

    Solves the linear system in ``t`` exactly: weak and strict lower/upper
    bounds on ``t`` are collected and checked for a common point.
    """
    alpha = check_alpha(alpha)
    p0, p1 = m.p0, m.p1
    t_min, t_max = feasible_t_range(m)
    lo_w, hi_w = [t_min], [t_max]
    lo_s, hi_s = [], []
    if s is BinarySet.ONE:
        hi_w.append(p1 - (1 - alpha))
    elif s is BinarySet.NEG_ONE:
        hi_w.append(p0 - (1 - alpha))
    elif s is BinarySet.ZERO:
        lo_w.append((p0 + p1 - alpha) / 2)
    elif s is BinarySet.FULL:
        hi_w.extend([p1 - alpha, p0 - alpha])
    elif s is BinarySet.NEG_TO_ZERO:
        if p0 < p1:
            return False
        lo_w.append(p1 - alpha)
        lo_s.append(p0 - (1 - alpha))
        hi_s.append((p0 + p1 - alpha) / 2)
    else:
        if p1 < p0:
            return False
        lo_w.append(p0 - alpha)
        lo_s.append(p1 - (1 - alpha))
        hi_s.append((p0 + p1 - alpha) / 2)
    return _exists_t(lo_w, lo_s, hi_w, hi_s)


def closed_form_necessary_condition(s: BinarySet, m: BinaryMarginals, alpha: float) -> bool:
    """The marginal inequalities that characterize :func:`necessary_condition_valid_best`."""
    alpha = check_alpha(alpha)
    p0, p1 = m.p0, m.p1
    if s is BinarySet.ONE:
        return p1 >= 1 - alpha and p0 <= alpha
    if s is BinarySet.NEG_ONE:
        return p0 >= 1 - alpha and p1 <= alpha
    if s is BinarySet.ZERO:
        return abs(p1 - p0) <= alpha
    if s is BinarySet.FULL:
        return alpha <= p0 <= 1 - alpha and alpha <= p1 <= 1 - alpha
    hi, lo = (p0, p1) if s is BinarySet.NEG_TO_ZERO else (p1, p0)
    return hi >= lo and 1 - hi + lo > alpha and p0 + p1 > alpha and 2 - p0 - p1 > alpha


def _extreme_couplings(m: BinaryMarginals) -> tuple[Coupling, Coupling]:
    """(countermonotone, comonotone) couplings: t at its minimum and maximum."""
    t_min, t_max = feasible_t_range(m)
    return type_distribution(m, t_min).coupling(), type_distribution(m, t_max).coupling()


def binary_pmf_bounds(m: BinaryMarginals) -> dict:
    """Sharp bounds on P(effect = k) for k in {-1, 0, 1}.

    In the (p, q, t) notation of a 2x2 table with ``p = P(Y0=0)``,
    ``q = P(Y1=0)`` and ``t = P(Y1=0, Y0=0)``, these are ``q - t``,
    ``1 - p - q + 2t`` and ``p - t``; that ``t`` equals ``1 - p0 - p1 + P(AR)``.
    Every endpoint sits at a Frechet-Hoeffding extreme coupling.
    """
    t_min, t_max = feasible_t_range(m)
    counter, co = _extreme_couplings(m)
    p0, p1 = m.p0, m.p1
    return {
        -1: BoundPair(p0 - t_max, p0 - t_min, co, counter, DeltaEvent.singleton(-1)),
        0: BoundPair(1 - p0 - p1 + 2 * t_min, 1 - p0 - p1 + 2 * t_max, counter, co,
                     DeltaEvent.singleton(0)),
        1: BoundPair(p1 - t_max, p1 - t_min, co, counter, DeltaEvent.singleton(1)),
    }


def binary_cdf_bounds(m: BinaryMarginals) -> dict:
    """Sharp bounds on F(-1) = P(effect <= -1) and F(0) = P(effect <= 0); F(1) = 1."""
    t_min, t_max = feasible_t_range(m)
    counter, co = _extreme_couplings(m)
    return {
        -1: BoundPair(m.p0 - t_max, m.p0 - t_min, co, counter, DeltaEvent.at_most(-1)),
        0: BoundPair(1 - m.p1 + t_min, 1 - m.p1 + t_max, counter, co, DeltaEvent.at_most(0)),
    }
