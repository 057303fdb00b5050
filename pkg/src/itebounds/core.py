"""Shared value types: discrete margins, step cdfs, couplings, events and bounds.

Every type here is immutable after construction. Probabilities are plain
floats validated by :func:`check_probability`; comparisons between
probabilities use the absolute tolerance returned by :func:`get_tolerance`
(``1e-9`` unless ``ITE_BOUNDS_TOLERANCE`` is set).
"""

from __future__ import annotations

import csv
import io
import json
import math
import os
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Optional, Sequence

import numpy as np

DEFAULT_TOLERANCE = 1e-9
CLAMP_WINDOW = 1e-12


def get_tolerance() -> float:
    """Absolute tolerance for probability comparisons and support matching."""
    raw = os.environ.get("ITE_BOUNDS_TOLERANCE")
    if raw is None or raw == "":
        return DEFAULT_TOLERANCE
    try:
        tol = float(raw)
    except ValueError:
        raise ValueError(f"ITE_BOUNDS_TOLERANCE is not a number: {raw!r}") from None
    if not (tol >= 0 and math.isfinite(tol)):
        raise ValueError(f"ITE_BOUNDS_TOLERANCE must be a finite non-negative number, got {raw!r}")
    return tol


class StructureError(ValueError):
    """Shapes or supports of two objects do not line up."""


class InfeasibleError(ValueError):
    """A parameter lies outside the set allowed by the margins."""


class InputError(ValueError):
    """Malformed external input; ``path`` names the offending field."""

    def __init__(self, path: str, message: str):
        super().__init__(f"{path}: {message}")
        self.path = path
        self.message = message


def check_probability(value, name: str = "probability") -> float:
    """Validate a probability, clamping excursions of at most ``CLAMP_WINDOW``."""
    try:
        v = float(value)
    except (TypeError, ValueError):
        raise ValueError(f"{name} must be a real number, got {value!r}") from None
    if math.isnan(v) or v < -CLAMP_WINDOW or v > 1 + CLAMP_WINDOW:
        raise ValueError(f"{name} must lie in [0, 1], got {value!r}")
    return min(max(v, 0.0), 1.0)


def check_alpha(alpha) -> float:
    """Validate a miscoverage level; only ``0 < alpha < 0.5`` is meaningful here."""
    try:
        a = float(alpha)
    except (TypeError, ValueError):
        raise ValueError(f"alpha must be a real number, got {alpha!r}") from None
    if not (0.0 < a < 0.5):
        raise ValueError(f"alpha must lie in the open interval (0, 0.5), got {alpha!r}")
    return a


def _readonly(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class DiscretePMF:
    """Finite-support probability mass function of one potential outcome.

    Zero-mass support points are dropped on construction, so two pmfs that
    differ only by such points are interchangeable everywhere downstream.
    """

    support: np.ndarray
    probs: np.ndarray

    def __post_init__(self):
        support = np.asarray(self.support, dtype=float).ravel()
        raw = np.asarray(self.probs, dtype=float).ravel()
        if support.shape != raw.shape:
            raise StructureError(
                f"support has {support.size} points but probs has {raw.size} entries"
            )
        if support.size == 0:
            raise ValueError("a pmf needs at least one support point")
        if not np.all(np.isfinite(support)):
            raise ValueError("support values must be finite")
        if np.any(np.diff(support) <= 0):
            raise ValueError("support must be strictly increasing")
        probs = np.array([check_probability(p, f"probs[{k}]") for k, p in enumerate(raw)])
        total = probs.sum()
        if abs(total - 1.0) > DEFAULT_TOLERANCE:
            raise ValueError(f"probs must sum to 1 (got {total!r})")
        keep = probs > 0
        object.__setattr__(self, "support", _readonly(support[keep].copy()))
        object.__setattr__(self, "probs", _readonly(probs[keep].copy()))

    @classmethod
    def point_mass(cls, value: float) -> "DiscretePMF":
        return cls([value], [1.0])

    @classmethod
    def uniform(cls, values: Iterable[float]) -> "DiscretePMF":
        values = sorted(values)
        return cls(values, np.full(len(values), 1.0 / len(values)))

    @classmethod
    def from_samples(cls, samples) -> "DiscretePMF":
        """Empirical pmf of a 1-d sample."""
        values, counts = np.unique(np.asarray(samples, dtype=float), return_counts=True)
        return cls(values, counts / counts.sum())

    def __len__(self) -> int:
        return self.support.size

    def __repr__(self) -> str:
        pairs = ", ".join(f"{s:g}: {p:.6g}" for s, p in zip(self.support, self.probs))
        return f"DiscretePMF({{{pairs}}})"

    def prob_at(self, value: float, tol: Optional[float] = None) -> float:
        """P(Y = value), matching support points within ``tol``."""
        tol = get_tolerance() if tol is None else tol
        k = np.searchsorted(self.support, value - tol, side="left")
        if k < self.support.size and abs(self.support[k] - value) <= tol:
            return float(self.probs[k])
        return 0.0

    def index_of(self, value: float, tol: Optional[float] = None) -> Optional[int]:
        tol = get_tolerance() if tol is None else tol
        k = int(np.searchsorted(self.support, value - tol, side="left"))
        if k < self.support.size and abs(self.support[k] - value) <= tol:
            return k
        return None

    def to_cdf(self) -> "StepCDF":
        return StepCDF(self.support.copy(), np.cumsum(self.probs))

    def mean(self) -> float:
        return float(np.dot(self.support, self.probs))

    def to_dict(self) -> dict:
        return {"support": self.support.tolist(), "probs": self.probs.tolist()}

    @classmethod
    def from_dict(cls, obj, path: str = "$") -> "DiscretePMF":
        if not isinstance(obj, dict):
            raise InputError(path, "expected an object with 'support' and 'probs'")
        for key in ("support", "probs"):
            if key not in obj:
                raise InputError(f"{path}.{key}", "missing field")
            if not isinstance(obj[key], list):
                raise InputError(f"{path}.{key}", "expected a list of numbers")
            for k, v in enumerate(obj[key]):
                if isinstance(v, bool) or not isinstance(v, (int, float)):
                    raise InputError(f"{path}.{key}[{k}]", f"not a number: {v!r}")
        try:
            return cls(obj["support"], obj["probs"])
        except ValueError as exc:
            raise InputError(path, str(exc)) from None


@dataclass(frozen=True, eq=False)
class StepCDF:
    """Right-continuous step cdf given by its jump points and values there."""

    jump_points: np.ndarray
    cdf_values: np.ndarray

    def __post_init__(self):
        x = np.asarray(self.jump_points, dtype=float).ravel()
        F = np.asarray(self.cdf_values, dtype=float).ravel()
        if x.shape != F.shape or x.size == 0:
            raise StructureError("jump_points and cdf_values must be non-empty and equally long")
        if np.any(np.diff(x) <= 0):
            raise ValueError("jump_points must be strictly increasing")
        if np.any(F < -CLAMP_WINDOW) or np.any(F > 1 + CLAMP_WINDOW):
            raise ValueError("cdf values must lie in [0, 1]")
        if np.any(np.diff(F) < -CLAMP_WINDOW):
            raise ValueError("cdf values must be nondecreasing")
        if abs(F[-1] - 1.0) > DEFAULT_TOLERANCE:
            raise ValueError(f"cdf must end at 1 (got {F[-1]!r})")
        F = np.maximum.accumulate(np.clip(F, 0.0, 1.0))
        object.__setattr__(self, "jump_points", _readonly(x.copy()))
        object.__setattr__(self, "cdf_values", _readonly(F))

    @property
    def masses(self) -> np.ndarray:
        """Jump sizes P(Y = x_k) = F(x_k) - F(x_k-)."""
        return np.diff(self.cdf_values, prepend=0.0)

    def to_pmf(self) -> DiscretePMF:
        return DiscretePMF(self.jump_points, self.masses)

    def __call__(self, x: float, tol: Optional[float] = None) -> float:
        """F(x) = P(Y <= x); jump points within ``tol`` of x count as <= x."""
        tol = get_tolerance() if tol is None else tol
        k = np.searchsorted(self.jump_points, x + tol, side="right")
        return float(self.cdf_values[k - 1]) if k > 0 else 0.0

    def left_limit(self, x: float, tol: Optional[float] = None) -> float:
        """F(x-) = P(Y < x); jump points within ``tol`` of x are excluded."""
        tol = get_tolerance() if tol is None else tol
        k = np.searchsorted(self.jump_points, x - tol, side="left")
        return float(self.cdf_values[k - 1]) if k > 0 else 0.0


def as_cdf(obj) -> StepCDF:
    if isinstance(obj, StepCDF):
        return obj
    if isinstance(obj, DiscretePMF):
        return obj.to_cdf()
    raise TypeError(f"expected StepCDF or DiscretePMF, got {type(obj).__name__}")


def as_pmf(obj) -> DiscretePMF:
    if isinstance(obj, DiscretePMF):
        return obj
    if isinstance(obj, StepCDF):
        return obj.to_pmf()
    raise TypeError(f"expected DiscretePMF or StepCDF, got {type(obj).__name__}")


_EVENT_INTERVAL = re.compile(r"^\s*([\[\(])\s*([^,]+?)\s*,\s*([^,]+?)\s*([\]\)])\s*$")
_EVENT_ATOMS = re.compile(r"^\s*\{(.*)\}\s*$")


@dataclass(frozen=True)
class DeltaEvent:
    """A set of treatment-effect values: an interval or a finite set of atoms."""

    lo: float = -math.inf
    hi: float = math.inf
    lo_closed: bool = True
    hi_closed: bool = True
    atoms: Optional[tuple] = None

    def __post_init__(self):
        # infinite ends are always open, so equal sets compare equal
        if math.isinf(self.lo):
            object.__setattr__(self, "lo_closed", False)
        if math.isinf(self.hi):
            object.__setattr__(self, "hi_closed", False)

    @classmethod
    def interval(cls, lo: float, hi: float) -> "DeltaEvent":
        return cls(float(lo), float(hi))

    @classmethod
    def at_most(cls, delta: float) -> "DeltaEvent":
        return cls(hi=float(delta))

    @classmethod
    def below(cls, delta: float) -> "DeltaEvent":
        return cls(hi=float(delta), hi_closed=False)

    @classmethod
    def singleton(cls, delta: float) -> "DeltaEvent":
        return cls(atoms=(float(delta),))

    @classmethod
    def of_atoms(cls, values: Iterable[float]) -> "DeltaEvent":
        return cls(atoms=tuple(sorted(float(v) for v in values)))

    @classmethod
    def parse(cls, text: str) -> "DeltaEvent":
        """Parse ``"[-1,0]"``, ``"(-inf,2]"``, ``"(-inf,0)"`` or ``"{1,2}"``."""
        m = _EVENT_ATOMS.match(text)
        if m:
            body = m.group(1).strip()
            parts = [p for p in body.split(",") if p.strip()] if body else []
            try:
                return cls.of_atoms(float(p) for p in parts)
            except ValueError:
                raise ValueError(f"cannot parse event atoms: {text!r}") from None
        m = _EVENT_INTERVAL.match(text)
        if not m:
            raise ValueError(f"cannot parse event: {text!r}")
        try:
            lo, hi = float(m.group(2)), float(m.group(3))
        except ValueError:
            raise ValueError(f"cannot parse event bounds: {text!r}") from None
        if lo > hi:
            raise ValueError(f"empty interval: {text!r}")
        return cls(lo, hi, m.group(1) == "[", m.group(4) == "]")

    def contains(self, value: float, tol: Optional[float] = None) -> bool:
        tol = get_tolerance() if tol is None else tol
        if self.atoms is not None:
            return any(abs(value - a) <= tol for a in self.atoms)
        above = value >= self.lo - tol if self.lo_closed else value > self.lo + tol
        below = value <= self.hi + tol if self.hi_closed else value < self.hi - tol
        return above and below

    def __str__(self) -> str:
        if self.atoms is not None:
            return "{" + ",".join(f"{a:g}" for a in self.atoms) + "}"
        left = "[" if self.lo_closed and math.isfinite(self.lo) else "("
        right = "]" if self.hi_closed and math.isfinite(self.hi) else ")"
        return f"{left}{self.lo:g},{self.hi:g}{right}"


@dataclass(frozen=True, eq=False)
class Coupling:
    """Joint pmf of (Y1, Y0): rows index Y1 values, columns index Y0 values."""

    row_support: np.ndarray
    col_support: np.ndarray
    mass: np.ndarray

    def __post_init__(self):
        rows = np.asarray(self.row_support, dtype=float).ravel()
        cols = np.asarray(self.col_support, dtype=float).ravel()
        mass = np.array(self.mass, dtype=float)
        if mass.shape != (rows.size, cols.size):
            raise StructureError(
                f"mass has shape {mass.shape}, expected {(rows.size, cols.size)}"
            )
        if np.any(mass < -CLAMP_WINDOW):
            raise ValueError(f"coupling has negative mass {mass.min()!r}")
        mass = np.maximum(mass, 0.0)
        object.__setattr__(self, "row_support", _readonly(rows.copy()))
        object.__setattr__(self, "col_support", _readonly(cols.copy()))
        object.__setattr__(self, "mass", _readonly(mass))

    @property
    def shape(self) -> tuple:
        return self.mass.shape

    def differences(self) -> np.ndarray:
        """Matrix of treatment-effect values y1 - y0 per cell."""
        return self.row_support[:, None] - self.col_support[None, :]

    def event_mass(self, event: DeltaEvent, tol: Optional[float] = None) -> float:
        diffs = self.differences()
        hit = np.vectorize(lambda d: event.contains(d, tol), otypes=[bool])(diffs)
        return float(self.mass[hit].sum())

    def delta_mass(self, delta: float, tol: Optional[float] = None) -> float:
        tol = get_tolerance() if tol is None else tol
        return float(self.mass[np.abs(self.differences() - delta) <= tol].sum())

    def to_dict(self) -> dict:
        return {
            "row_support": self.row_support.tolist(),
            "col_support": self.col_support.tolist(),
            "mass": self.mass.tolist(),
        }

    @classmethod
    def from_dict(cls, obj: dict) -> "Coupling":
        return cls(obj["row_support"], obj["col_support"], obj["mass"])


@dataclass(frozen=True)
class CouplingCheck:
    """Outcome of :func:`verify_coupling`; truthy iff the margins match."""

    valid: bool
    max_deviation: float
    total_mass: float

    def __bool__(self) -> bool:
        return self.valid


def _same_support(a: np.ndarray, b: np.ndarray, tol: float) -> bool:
    return a.shape == b.shape and bool(np.all(np.abs(a - b) <= tol))


def verify_coupling(c: Coupling, pmf1: DiscretePMF, pmf0: DiscretePMF,
                    tol: Optional[float] = None) -> CouplingCheck:
    """Check that ``c`` has row margin ``pmf1`` and column margin ``pmf0``.

    Rows of ``c`` may carry zero-mass support points that ``pmf1`` dropped;
    they are matched to probability 0. Any other support disagreement raises
    :class:`StructureError`, which is distinct from a failed margin check.
    """
    tol = get_tolerance() if tol is None else tol
    row_target = _aligned_margin(c.row_support, pmf1, tol, "row")
    col_target = _aligned_margin(c.col_support, pmf0, tol, "column")
    dev_rows = np.abs(c.mass.sum(axis=1) - row_target)
    dev_cols = np.abs(c.mass.sum(axis=0) - col_target)
    max_dev = float(max(dev_rows.max(initial=0.0), dev_cols.max(initial=0.0)))
    total = float(c.mass.sum())
    return CouplingCheck(max_dev <= tol and abs(total - 1.0) <= tol, max_dev, total)


def _aligned_margin(coupling_support: np.ndarray, pmf: DiscretePMF, tol: float,
                    which: str) -> np.ndarray:
    if _same_support(coupling_support, pmf.support, tol):
        return pmf.probs
    target = np.zeros(coupling_support.size)
    seen = 0
    for k, s in enumerate(coupling_support):
        idx = pmf.index_of(s, tol)
        if idx is not None:
            target[k] = pmf.probs[idx]
            seen += 1
    if seen != pmf.support.size:
        raise StructureError(
            f"{which} support {coupling_support.tolist()} does not cover margin support "
            f"{pmf.support.tolist()}"
        )
    return target


@dataclass(frozen=True, eq=False)
class BoundPair:
    """Closed interval [lower, upper] for P(effect in ``event``).

    Certificates are couplings attaining the respective endpoint.
    """

    lower: float
    upper: float
    lower_certificate: Optional[Coupling] = None
    upper_certificate: Optional[Coupling] = None
    event: Optional[DeltaEvent] = None

    def __post_init__(self):
        lo = check_probability(self.lower, "lower")
        hi = check_probability(self.upper, "upper")
        if lo > hi + CLAMP_WINDOW:
            raise ValueError(f"lower bound {lo!r} exceeds upper bound {hi!r}")
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", max(lo, hi))

    @property
    def width(self) -> float:
        return self.upper - self.lower

    def as_tuple(self) -> tuple:
        return (self.lower, self.upper)

    def contains(self, other: "BoundPair", tol: Optional[float] = None) -> bool:
        tol = get_tolerance() if tol is None else tol
        return self.lower <= other.lower + tol and other.upper <= self.upper + tol

    def certificate_errors(self) -> dict:
        """|functional(certificate) - endpoint| for every attached certificate."""
        if self.event is None:
            return {}
        out = {}
        if self.lower_certificate is not None:
            out["lower"] = abs(self.lower_certificate.event_mass(self.event) - self.lower)
        if self.upper_certificate is not None:
            out["upper"] = abs(self.upper_certificate.event_mass(self.event) - self.upper)
        return out

    def to_dict(self, with_certificates: bool = True) -> dict:
        out = {"lower": self.lower, "upper": self.upper}
        if self.event is not None:
            out["event"] = str(self.event)
        if with_certificates:
            if self.lower_certificate is not None:
                out["lower_coupling"] = self.lower_certificate.to_dict()
            if self.upper_certificate is not None:
                out["upper_coupling"] = self.upper_certificate.to_dict()
        return out


def minkowski_difference(support1: Sequence[float], support0: Sequence[float],
                         tol: Optional[float] = None) -> np.ndarray:
    """Sorted distinct values of y1 - y0 over both supports (merged within ``tol``)."""
    tol = get_tolerance() if tol is None else tol
    diffs = np.sort((np.asarray(support1, float)[:, None] - np.asarray(support0, float)[None, :]).ravel())
    out = [diffs[0]]
    for d in diffs[1:]:
        if d - out[-1] > tol:
            out.append(d)
    return np.array(out)


def read_pmf(source, path: str = "$") -> DiscretePMF:
    """Load a pmf from a JSON or CSV file (or an already-parsed JSON object).

    JSON: ``{"support": [...], "probs": [...]}``.
    CSV: header ``value,prob`` then one row per support point.
    """
    if isinstance(source, dict):
        return DiscretePMF.from_dict(source, path)
    p = Path(source)
    try:
        text = p.read_text()
    except OSError as exc:
        raise InputError(str(p), f"cannot read file ({exc.strerror})") from None
    if p.suffix.lower() == ".csv" or not text.lstrip().startswith("{"):
        return _pmf_from_csv(text, str(p))
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InputError(str(p), f"invalid JSON at line {exc.lineno} column {exc.colno}") from None
    return DiscretePMF.from_dict(obj, str(p))


def _pmf_from_csv(text: str, where: str) -> DiscretePMF:
    reader = csv.reader(io.StringIO(text))
    rows = [r for r in reader if r and any(cell.strip() for cell in r)]
    if not rows:
        raise InputError(where, "empty CSV")
    header = [h.strip().lower() for h in rows[0]]
    if header != ["value", "prob"]:
        raise InputError(f"{where}:1", f"expected header 'value,prob', got {','.join(rows[0])!r}")
    values, probs = [], []
    for lineno, row in enumerate(rows[1:], start=2):
        if len(row) != 2:
            raise InputError(f"{where}:{lineno}", f"expected 2 columns, got {len(row)}")
        for col, cell, sink in (("value", row[0], values), ("prob", row[1], probs)):
            try:
                sink.append(float(cell))
            except ValueError:
                raise InputError(f"{where}:{lineno}.{col}", f"not a number: {cell!r}") from None
    order = np.argsort(values, kind="stable")
    try:
        return DiscretePMF(np.asarray(values)[order], np.asarray(probs)[order])
    except ValueError as exc:
        raise InputError(where, str(exc)) from None


def write_pmf_csv(pmf: DiscretePMF) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["value", "prob"])
    for s, p in zip(pmf.support, pmf.probs):
        w.writerow([repr(float(s)), repr(float(p))])
    return buf.getvalue()
