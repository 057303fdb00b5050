"""Sharp bounds on P(Y1 - Y0 = delta) for finite-support margins.

The event {Y1 - Y0 = delta} is the union of the matched cells
(i, i - delta). Each cell obeys its Frechet bounds [L_i, U_i], and the sums
of those bounds are attained simultaneously:

* upper: rows whose bound is the row mass are filled on the matched cell,
  columns whose bound is the column mass likewise, and the residual block is
  filled with a product coupling of the leftover margins;
* lower: at most one L_i is positive (matched cells share no row or column).
  With one positive L_i the row and column of that cell carry everything;
  with none, a min-cost transportation solve empties the matched cells and
  its optimum certifies the bound.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .core import (BoundPair, Coupling, DeltaEvent, DiscretePMF, get_tolerance,
                   verify_coupling)
from .oracle import OracleError, TransportInstance, extremize_mass


@dataclass(frozen=True)
class CellBound:
    """Frechet bounds on P(Y1 = i, Y0 = j) for one matched cell, j = i - delta."""

    i: float
    j: float
    row: int
    col: int
    lower: float
    upper: float


def frechet_cell_bounds(pmf1: DiscretePMF, pmf0: DiscretePMF, delta: float,
                        tol: Optional[float] = None) -> list:
    """One :class:`CellBound` per Y1 support point whose partner i - delta is in Y0's support."""
    tol = get_tolerance() if tol is None else tol
    cells = []
    for r, (i, a) in enumerate(zip(pmf1.support, pmf1.probs)):
        c = pmf0.index_of(i - delta, tol)
        if c is None:
            continue
        b = pmf0.probs[c]
        lower = a - (1.0 - b)
        # margins summing to 1 leave rounding residue of a few ulps
        if lower <= 1e-12:
            lower = 0.0
        cells.append(CellBound(float(i), float(pmf0.support[c]), r, c, float(lower),
                               float(min(a, b))))
    positive = [cb for cb in cells if cb.lower > 0]
    if len(positive) > 1:
        raise AssertionError(f"more than one positive Frechet lower bound: {positive}")
    return cells


def build_upper_coupling(pmf1: DiscretePMF, pmf0: DiscretePMF, delta: float,
                         cells: Optional[list] = None) -> Coupling:
    """Coupling that puts U_i = min(P(Y1=i), P(Y0=i-delta)) on every matched cell."""
    if cells is None:
        cells = frechet_cell_bounds(pmf1, pmf0, delta)
    a, b = pmf1.probs, pmf0.probs
    x = np.zeros((a.size, b.size))
    row_left = a.astype(float).copy()
    col_left = b.astype(float).copy()
    forced_rows, forced_cols = set(), set()
    for cb in cells:
        if a[cb.row] <= b[cb.col]:   # J1 (ties land here)
            x[cb.row, cb.col] = a[cb.row]
            forced_rows.add(cb.row)
        else:                        # J2
            x[cb.row, cb.col] = b[cb.col]
            forced_cols.add(cb.col)
        row_left[cb.row] -= x[cb.row, cb.col]
        col_left[cb.col] -= x[cb.row, cb.col]
    free_rows = [r for r in range(a.size) if r not in forced_rows]
    free_cols = [c for c in range(b.size) if c not in forced_cols]
    r_res = np.maximum(row_left[free_rows], 0.0)
    c_res = np.maximum(col_left[free_cols], 0.0)
    s = 1.0 - sum(a[r] for r in forced_rows) - sum(b[c] for c in forced_cols)
    if s > 1e-12 and free_rows and free_cols:
        x[np.ix_(free_rows, free_cols)] = np.outer(r_res, c_res) / s
    return Coupling(pmf1.support, pmf0.support, x)


def case2_lower_coupling(pmf1: DiscretePMF, pmf0: DiscretePMF, cell: CellBound) -> Coupling:
    """Explicit minimizer when ``cell`` is the only matched cell with L > 0.

    Row ``cell.i`` takes every Y0 mass except at ``cell.j``; column
    ``cell.j`` takes every Y1 mass except at ``cell.i``; the cell itself
    keeps ``L = P(Y1=i) + P(Y0=j) - 1``. Everything else is zero, so no other
    matched cell carries mass.
    """
    x = np.zeros((len(pmf1), len(pmf0)))
    x[cell.row, :] = pmf0.probs
    x[:, cell.col] = pmf1.probs
    x[cell.row, cell.col] = cell.lower
    return Coupling(pmf1.support, pmf0.support, x)


def build_lower_coupling(pmf1: DiscretePMF, pmf0: DiscretePMF, delta: float,
                         cells: Optional[list] = None) -> Coupling:
    """Coupling that puts L_i on every matched cell (total mass sum L_i)."""
    if cells is None:
        cells = frechet_cell_bounds(pmf1, pmf0, delta)
    target = sum(cb.lower for cb in cells)
    positive = [cb for cb in cells if cb.lower > 0]
    if len(positive) == 1:
        return case2_lower_coupling(pmf1, pmf0, positive[0])
    mask = np.zeros((len(pmf1), len(pmf0)), dtype=bool)
    for cb in cells:
        mask[cb.row, cb.col] = True
    result = extremize_mass(TransportInstance(pmf1, pmf0, mask), "min")
    if abs(result.value - target) > get_tolerance():
        raise OracleError(
            f"min matched mass {result.value!r} differs from the Frechet sum {target!r}")
    return result.coupling


def ite_pmf_bounds(pmf1: DiscretePMF, pmf0: DiscretePMF, delta: float,
                   certificates: bool = True) -> BoundPair:
    """Sharp bounds [sum L_i, sum U_i] on P(Y1 - Y0 = delta)."""
    cells = frechet_cell_bounds(pmf1, pmf0, delta)
    lower = sum(cb.lower for cb in cells)
    upper = sum(cb.upper for cb in cells)
    if upper > 1.0 + get_tolerance():
        raise AssertionError(f"sum of Frechet upper bounds exceeds 1: {upper!r}")
    if not certificates:
        return BoundPair(lower, min(upper, 1.0), event=DeltaEvent.singleton(delta))
    lo_c = build_lower_coupling(pmf1, pmf0, delta, cells)
    hi_c = build_upper_coupling(pmf1, pmf0, delta, cells)
    for name, c in (("lower", lo_c), ("upper", hi_c)):
        check = verify_coupling(c, pmf1, pmf0)
        if not check:
            raise OracleError(f"{name} certificate misses the margins by {check.max_deviation:.3g}")
    return BoundPair(lower, min(upper, 1.0), lo_c, hi_c, DeltaEvent.singleton(delta))
