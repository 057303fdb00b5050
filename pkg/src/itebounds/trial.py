"""Simulated randomized trials with binary outcomes, and what they say about ATE versus ITE."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from fractions import Fraction
from importlib.resources import files
from pathlib import Path
from statistics import NormalDist
from typing import Mapping, Optional, Sequence

import numpy as np

from .binary import (BinaryMarginals, BinarySet, classify_best, coverage_formula)
from .core import BoundPair, DeltaEvent, InputError, check_alpha, check_probability
from .intervals import RealInterval
from .oracle import worst_case_event_probability

TYPE_NAMES = ("nr", "he", "hu", "ar")
# (Y1, Y0) for Never Recover, Helped, Hurt, Always Recover
_POTENTIAL_OUTCOMES = np.array([[0, 0], [1, 0], [0, 1], [1, 1]])


@dataclass(frozen=True)
class TypeScenario:
    nr: float
    he: float
    hu: float
    ar: float
    n: int
    assign_prob: float = 0.5
    seed: int = 0

    def __post_init__(self):
        for name in TYPE_NAMES:
            check_probability(getattr(self, name), name)
        total = self.nr + self.he + self.hu + self.ar
        if abs(total - 1.0) > 1e-12:
            raise ValueError(f"type shares must sum to 1, got {total!r}")
        if int(self.n) != self.n or self.n < 1:
            raise ValueError(f"n must be a positive integer, got {self.n!r}")
        if not 0.0 < self.assign_prob < 1.0:
            raise ValueError(f"assign_prob must lie in (0, 1), got {self.assign_prob!r}")

    @property
    def shares(self) -> list:
        return [getattr(self, name) for name in TYPE_NAMES]

    @classmethod
    def from_dict(cls, obj: Mapping) -> "TypeScenario":
        if not isinstance(obj, Mapping):
            raise InputError("$", "scenario must be a JSON object")
        missing = [k for k in (*TYPE_NAMES, "n") if k not in obj]
        if missing:
            raise InputError(f"$.{missing[0]}", "required field is missing")
        kwargs = {}
        for key in (*TYPE_NAMES, "n", "assign_prob", "seed"):
            if key in obj:
                try:
                    kwargs[key] = int(obj[key]) if key in ("n", "seed") else float(obj[key])
                except (TypeError, ValueError):
                    raise InputError(f"$.{key}", f"expected a number, got {obj[key]!r}") from None
        try:
            return cls(**kwargs)
        except ValueError as exc:
            raise InputError("$", str(exc)) from None


@dataclass(frozen=True)
class TrialResult:
    """Arm-level counts, optionally broken down by covariate cell."""

    n_treat: int
    y1_treat: int
    n_ctrl: int
    y1_ctrl: int
    strata: dict = field(default_factory=dict)
    covariates: tuple = ()
    label: str = "overall"

    def __post_init__(self):
        for arm, n, y in (("treatment", self.n_treat, self.y1_treat),
                          ("control", self.n_ctrl, self.y1_ctrl)):
            if n < 0 or y < 0 or y > n:
                raise ValueError(f"{self.label}: invalid {arm} counts n={n}, y1={y}")

    @classmethod
    def from_strata(cls, strata: Mapping, covariates: Sequence[str] = (),
                    label: str = "overall") -> "TrialResult":
        cells = dict(strata)
        totals = [sum(getattr(c, f) for c in cells.values())
                  for f in ("n_treat", "y1_treat", "n_ctrl", "y1_ctrl")]
        return cls(*totals, strata=cells, covariates=tuple(covariates), label=label)

    def select(self, **conditions) -> "TrialResult":
        """Pool every stratum whose covariates match ``conditions``, e.g. ``select(x1=1)``."""
        unknown = set(conditions) - set(self.covariates)
        if unknown:
            raise KeyError(f"unknown covariate(s): {sorted(unknown)}")
        idx = {name: k for k, name in enumerate(self.covariates)}
        chosen = {key: cell for key, cell in self.strata.items()
                  if all(key[idx[name]] == value for name, value in conditions.items())}
        label = ",".join(f"{k}={v}" for k, v in conditions.items()) or "overall"
        if not chosen:
            raise InputError(label, "no stratum matches these covariate values")
        return TrialResult.from_strata(chosen, (), label)

    def to_dict(self) -> dict:
        out = {"n_treat": self.n_treat, "y1_treat": self.y1_treat,
               "n_ctrl": self.n_ctrl, "y1_ctrl": self.y1_ctrl}
        if self.strata:
            out["strata"] = [dict(zip(self.covariates, key), **cell.to_dict())
                             for key, cell in sorted(self.strata.items())]
        return out


def simulate_trial(s: TypeScenario) -> TrialResult:
    """Draw types, flip an assignment coin per subject, record observed outcomes."""
    rng = np.random.default_rng(s.seed)
    types = rng.choice(4, size=s.n, p=np.asarray(s.shares) / sum(s.shares))
    treated = rng.random(s.n) < s.assign_prob
    y1, y0 = _POTENTIAL_OUTCOMES[types].T
    return TrialResult(int(treated.sum()), int(y1[treated].sum()),
                       int((~treated).sum()), int(y0[~treated].sum()))


def _check_arms(r: TrialResult) -> None:
    if r.n_treat == 0 or r.n_ctrl == 0:
        arm = "treatment" if r.n_treat == 0 else "control"
        raise InputError(r.label, f"the {arm} arm is empty")


def estimate_marginals(r: TrialResult) -> BinaryMarginals:
    _check_arms(r)
    return BinaryMarginals(r.y1_ctrl / r.n_ctrl, r.y1_treat / r.n_treat)


def _exact_rates(r: TrialResult) -> tuple[Fraction, Fraction]:
    _check_arms(r)
    return Fraction(r.y1_ctrl, r.n_ctrl), Fraction(r.y1_treat, r.n_treat)


def ate_wald_ci(r: TrialResult, alpha: float = 0.05) -> tuple[float, RealInterval]:
    """Difference of arm proportions with its Wald interval (no continuity correction)."""
    alpha = check_alpha(alpha)
    m = estimate_marginals(r)
    point = m.p1 - m.p0
    se = math.sqrt(m.p1 * (1 - m.p1) / r.n_treat + m.p0 * (1 - m.p0) / r.n_ctrl)
    z = NormalDist().inv_cdf(1 - alpha / 2)
    return point, RealInterval(point - z * se, point + z * se)


@dataclass(frozen=True)
class AteIteReport:
    label: str
    marginals: BinaryMarginals
    ate_point: float
    ate_ci: RealInterval
    ite_sets: tuple
    worst_case_coverage: float
    alpha: float

    @property
    def ite_set(self) -> BinarySet:
        return self.ite_sets[0]

    @property
    def neyman_rejected(self) -> bool:
        return not (self.ate_ci.lo <= 0.0 <= self.ate_ci.hi)

    @property
    def fisher_consistent(self) -> bool:
        return self.ite_sets == (BinarySet.ZERO,)

    @property
    def paradox(self) -> bool:
        return self.neyman_rejected and self.fisher_consistent

    def to_dict(self) -> dict:
        return {"label": self.label, "p0": self.marginals.p0, "p1": self.marginals.p1,
                "ate": self.ate_point, "ate_ci": self.ate_ci.to_list(),
                "ite_set": [s.label for s in self.ite_sets],
                "worst_case_coverage": self.worst_case_coverage, "alpha": self.alpha,
                "neyman_rejected": self.neyman_rejected,
                "fisher_consistent": self.fisher_consistent, "paradox": self.paradox}


def ate_ite_report(r: TrialResult, alpha: float = 0.05) -> AteIteReport:
    """Wald ATE interval next to the best worst-case ITE set at the same level."""
    point, ci = ate_wald_ci(r, alpha)
    m = estimate_marginals(r)
    sets = tuple(classify_best(m, alpha))
    # coverage from exact count ratios, so e.g. 3800/4000 - 200/4000 is exactly 0.9
    p0, p1 = _exact_rates(r)
    cover = float(coverage_formula(p0, p1, sets[0]))
    return AteIteReport(r.label, m, point, ci, sets, cover, alpha)


@dataclass(frozen=True)
class StratifiedReport:
    pooled: AteIteReport
    strata: dict

    def to_dict(self) -> dict:
        return {"pooled": self.pooled.to_dict(),
                "strata": {k: v.to_dict() for k, v in self.strata.items()}}


def stratified_report(r: TrialResult, alpha: float = 0.05,
                      conditions: Optional[Sequence[Mapping]] = None) -> StratifiedReport:
    """Reports for the pooled data and for each requested covariate condition.

    By default every single covariate value and every full cell is reported.
    """
    if conditions is None:
        conditions = []
        for k, name in enumerate(r.covariates):
            for value in sorted({key[k] for key in r.strata}):
                conditions.append({name: value})
        conditions += [dict(zip(r.covariates, key)) for key in sorted(r.strata)]
    reports = {}
    for cond in conditions:
        sub = r.select(**cond)
        reports[sub.label] = ate_ite_report(sub, alpha)
    return StratifiedReport(ate_ite_report(r, alpha), reports)


@dataclass(frozen=True)
class TotalProbabilityResult:
    delta: float
    pooled: BoundPair
    mixture: tuple
    residual: float

    def to_dict(self) -> dict:
        return {"delta": self.delta, "pooled": list(self.pooled.as_tuple()),
                "mixture": list(self.mixture), "residual": self.residual}


def total_probability_check(strata: Sequence[BinaryMarginals], weights: Sequence[float],
                            pooled: Optional[BinaryMarginals] = None,
                            delta: float = 1.0) -> TotalProbabilityResult:
    """Check that weight-mixed stratum bounds on P(effect = delta) sit inside the pooled bounds.

    Mixing one coupling per stratum gives a coupling of the pooled margins, so
    [sum w L_x, sum w U_x] must lie inside [L, U]. The residual is how far it
    sticks out (zero when the decomposition holds).
    """
    w = np.asarray(weights, dtype=float)
    if len(strata) != w.size or len(strata) == 0:
        raise ValueError("need one weight per stratum")
    if np.any(w < 0) or abs(w.sum() - 1.0) > 1e-9:
        raise ValueError(f"weights must be nonnegative and sum to 1, got {w.sum()!r}")
    if pooled is None:
        pooled = BinaryMarginals(float(np.dot(w, [m.p0 for m in strata])),
                                 float(np.dot(w, [m.p1 for m in strata])))
    event = DeltaEvent.singleton(delta)
    parts = [worst_case_event_probability(*m.pmfs(), event) for m in strata]
    lo = float(np.dot(w, [b.lower for b in parts]))
    hi = float(np.dot(w, [b.upper for b in parts]))
    whole = worst_case_event_probability(*pooled.pmfs(), event)
    residual = max(0.0, whole.lower - lo, hi - whole.upper)
    return TotalProbabilityResult(delta, whole, (lo, hi), residual)


def strata_weights(r: TrialResult) -> tuple[list, list]:
    """Per-cell marginals and subject shares, in sorted cell order."""
    total = r.n_treat + r.n_ctrl
    keys = sorted(r.strata)
    return ([estimate_marginals(r.strata[k]) for k in keys],
            [(r.strata[k].n_treat + r.strata[k].n_ctrl) / total for k in keys])


_ARM_VALUES = {"1": True, "treat": True, "treatment": True, "t": True,
               "0": False, "control": False, "ctrl": False, "c": False}


def read_strata_csv(source) -> TrialResult:
    """Parse ``covariates..., arm, n, y1`` rows into a stratified :class:`TrialResult`."""
    if isinstance(source, (str, Path)) and Path(source).exists():
        where, text = str(source), Path(source).read_text()
    else:
        where, text = "<input>", str(source)
    reader = csv.DictReader(io.StringIO(text))
    fields = reader.fieldnames or []
    for required in ("arm", "n", "y1"):
        if required not in fields:
            raise InputError(f"{where}:1", f"missing column {required!r}")
    covariates = tuple(f for f in fields if f not in ("arm", "n", "y1"))
    cells: dict = {}
    for lineno, row in enumerate(reader, start=2):
        try:
            key = tuple(int(row[c]) for c in covariates)
        except (TypeError, ValueError):
            raise InputError(f"{where}:{lineno}", "covariate values must be integers") from None
        arm = _ARM_VALUES.get(str(row["arm"]).strip().lower())
        if arm is None:
            raise InputError(f"{where}:{lineno}.arm", f"unknown arm {row['arm']!r}")
        try:
            n, y = int(row["n"]), int(row["y1"])
        except (TypeError, ValueError):
            raise InputError(f"{where}:{lineno}", "n and y1 must be integers") from None
        counts = cells.setdefault(key, [0, 0, 0, 0])
        if arm:
            counts[0] += n
            counts[1] += y
        else:
            counts[2] += n
            counts[3] += y
    def label_of(key):
        return ",".join(f"{c}={v}" for c, v in zip(covariates, key))

    try:
        strata = {k: TrialResult(*v, label=label_of(k)) for k, v in cells.items()}
    except ValueError as exc:
        raise InputError(where, str(exc)) from None
    return TrialResult.from_strata(strata, covariates)


def load_covariate_example() -> TrialResult:
    """Bundled two-covariate trial with 10000 subjects per arm."""
    return read_strata_csv(files("itebounds").joinpath("data/two_covariate_trial.csv").read_text())
