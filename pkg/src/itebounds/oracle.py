"""Exact extremization of cell mass over the transportation polytope.

Given two margins (rows: Y1, columns: Y0) and a set of cells, find the
smallest and largest total mass the set can carry under any coupling of the
margins. Couplings with fixed margins form a transportation polytope, so the
problem is a transportation LP with 0/1 costs. It is solved with the primal
transportation simplex (u-v method), entering and leaving variables chosen by
Bland's rule. Because costs are integers the dual values and reduced costs are
exact, and only the flows carry rounding error.

:func:`extremize_by_enumeration` solves the same problem by listing every
basic feasible solution and exists to check the simplex on small instances.
"""

from __future__ import annotations

import itertools
import logging
from dataclasses import dataclass
from typing import Iterable, Optional

import numpy as np

from .core import (BoundPair, Coupling, DeltaEvent, DiscretePMF, get_tolerance,
                   verify_coupling)

logger = logging.getLogger(__name__)

DEFAULT_SIZE_GUARD = 20
ENUMERATION_GUARD = 4


class OracleError(RuntimeError):
    """The transportation solve failed to reach a certified optimum."""


class OracleSizeError(ValueError):
    """Instance exceeds the configured support-size guard."""


@dataclass(frozen=True, eq=False)
class TransportInstance:
    """Margins plus the cells whose total mass is extremized.

    ``cells`` is a boolean mask of shape ``(len(row_margin), len(col_margin))``.
    """

    row_margin: DiscretePMF
    col_margin: DiscretePMF
    cells: np.ndarray

    def __post_init__(self):
        mask = np.asarray(self.cells, dtype=bool)
        shape = (len(self.row_margin), len(self.col_margin))
        if mask.shape != shape:
            raise ValueError(f"cell mask has shape {mask.shape}, expected {shape}")
        mask = mask.copy()
        mask.setflags(write=False)
        object.__setattr__(self, "cells", mask)

    @classmethod
    def from_pairs(cls, row_margin: DiscretePMF, col_margin: DiscretePMF,
                   pairs: Iterable[tuple]) -> "TransportInstance":
        """Build from (y1, y0) support-value pairs."""
        mask = np.zeros((len(row_margin), len(col_margin)), dtype=bool)
        for y1, y0 in pairs:
            i, j = row_margin.index_of(y1), col_margin.index_of(y0)
            if i is None or j is None:
                raise ValueError(f"cell ({y1!r}, {y0!r}) is not in the support product")
            mask[i, j] = True
        return cls(row_margin, col_margin, mask)

    @classmethod
    def from_event(cls, row_margin: DiscretePMF, col_margin: DiscretePMF,
                   event: DeltaEvent) -> "TransportInstance":
        diffs = row_margin.support[:, None] - col_margin.support[None, :]
        tol = get_tolerance()
        mask = np.array([[event.contains(d, tol) for d in row] for row in diffs], dtype=bool)
        return cls(row_margin, col_margin, mask)

    def complement(self) -> "TransportInstance":
        return TransportInstance(self.row_margin, self.col_margin, ~self.cells)


@dataclass(frozen=True, eq=False)
class OracleResult:
    value: float
    coupling: Coupling
    duality_gap: float
    iterations: int
    rescale: float


def _rescaled(p: DiscretePMF) -> tuple[list, float]:
    total = float(p.probs.sum())
    return (p.probs / total).tolist(), abs(total - 1.0)


def _northwest_corner(a: list, b: list) -> tuple[list, list]:
    m, n = len(a), len(b)
    s, d = list(a), list(b)
    x = [[0.0] * n for _ in range(m)]
    basis = []
    i = j = 0
    while True:
        q = min(s[i], d[j])
        x[i][j] = q
        basis.append((i, j))
        s[i] -= q
        d[j] -= q
        if i == m - 1 and j == n - 1:
            break
        if j == n - 1 or (i < m - 1 and s[i] <= d[j]):
            i += 1
        else:
            j += 1
    return x, basis


def _tree_adjacency(basis: list, m: int, n: int) -> list:
    adj = [[] for _ in range(m + n)]
    for i, j in basis:
        adj[i].append(m + j)
        adj[m + j].append(i)
    return adj


def _duals(adj: list, cost: list, m: int, n: int) -> tuple[list, list]:
    u = [None] * m
    v = [None] * n
    u[0] = 0
    stack = [0]
    while stack:
        node = stack.pop()
        for nb in adj[node]:
            if node < m:
                j = nb - m
                if v[j] is None:
                    v[j] = cost[node][j] - u[node]
                    stack.append(nb)
            else:
                if u[nb] is None:
                    u[nb] = cost[nb][node - m] - v[node - m]
                    stack.append(nb)
    return u, v


def _tree_path(adj: list, start: int, goal: int) -> list:
    parent = {start: None}
    stack = [start]
    while stack:
        node = stack.pop()
        if node == goal:
            break
        for nb in adj[node]:
            if nb not in parent:
                parent[nb] = node
                stack.append(nb)
    path = [goal]
    while path[-1] != start:
        path.append(parent[path[-1]])
    path.reverse()
    return path


def _transport_simplex(a: list, b: list, cost: list, max_iter: int) -> tuple:
    m, n = len(a), len(b)
    x, basis = _northwest_corner(a, b)
    in_basis = set(basis)
    for it in range(max_iter):
        adj = _tree_adjacency(basis, m, n)
        u, v = _duals(adj, cost, m, n)
        entering = None
        for i in range(m):
            ui, ci = u[i], cost[i]
            for j in range(n):
                if (i, j) not in in_basis and ci[j] - ui - v[j] < 0:
                    entering = (i, j)
                    break
            if entering is not None:
                break
        if entering is None:
            return x, u, v, it
        ei, ej = entering
        # cycle: entering cell, then the tree path from column ej back to row ei
        path = _tree_path(adj, m + ej, ei)
        edges = []
        for p, q in zip(path, path[1:]):
            edges.append((q, p - m) if p >= m else (p, q - m))
        minus = edges[0::2]
        plus = edges[1::2]
        theta = min(x[i][j] for i, j in minus)
        leaving = min((i * n + j, (i, j)) for i, j in minus if x[i][j] == theta)[1]
        for i, j in minus:
            x[i][j] -= theta
        for i, j in plus:
            x[i][j] += theta
        x[ei][ej] += theta
        x[leaving[0]][leaving[1]] = 0.0
        basis[basis.index(leaving)] = entering
        in_basis.discard(leaving)
        in_basis.add(entering)
    raise OracleError(f"transportation simplex did not converge in {max_iter} pivots")


def extremize_mass(inst: TransportInstance, direction: str = "max",
                   size_guard: int = DEFAULT_SIZE_GUARD) -> OracleResult:
    """Minimize or maximize the total mass on ``inst.cells`` over all couplings.

    Returns the optimum and a coupling attaining it. Raises
    :class:`OracleSizeError` above the size guard and :class:`OracleError` if
    the optimum cannot be certified (pivot cap hit, duality gap or margin
    check above tolerance).
    """
    if direction not in ("min", "max"):
        raise ValueError(f"direction must be 'min' or 'max', got {direction!r}")
    m, n = len(inst.row_margin), len(inst.col_margin)
    if m > size_guard or n > size_guard:
        raise OracleSizeError(f"instance is {m}x{n}, guard is {size_guard}x{size_guard}")
    a, dev_a = _rescaled(inst.row_margin)
    b, dev_b = _rescaled(inst.col_margin)
    rescale = max(dev_a, dev_b)
    tol = get_tolerance()
    if rescale > tol:
        logger.info("margins rescaled by a factor off 1 by %.3g", rescale)
    sign = 1 if direction == "min" else -1
    cost = [[sign if c else 0 for c in row] for row in inst.cells.tolist()]
    x, u, v, iters = _transport_simplex(a, b, cost, max_iter=50 * m * n + 100)
    primal = sum(cost[i][j] * x[i][j] for i in range(m) for j in range(n))
    dual = sum(ui * ai for ui, ai in zip(u, a)) + sum(vj * bj for vj, bj in zip(v, b))
    gap = abs(primal - dual)
    if gap > tol:
        raise OracleError(f"duality gap {gap:.3g} exceeds tolerance")
    coupling = Coupling(inst.row_margin.support, inst.col_margin.support, x)
    check = verify_coupling(coupling, inst.row_margin, inst.col_margin)
    if not check:
        raise OracleError(f"optimal coupling misses the margins by {check.max_deviation:.3g}")
    value = float(coupling.mass[inst.cells].sum())
    return OracleResult(min(max(value, 0.0), 1.0), coupling, gap, iters, rescale)


def _flows_on_tree(edges: tuple, a: list, b: list, m: int, n: int) -> Optional[list]:
    """Unique flows on a spanning tree of K_{m,n}, or None if not a tree."""
    parent = list(range(m + n))

    def find(z):
        while parent[z] != z:
            parent[z] = parent[parent[z]]
            z = parent[z]
        return z

    for i, j in edges:
        ri, rj = find(i), find(m + j)
        if ri == rj:
            return None
        parent[ri] = rj
    residual = list(a) + list(b)
    remaining = {e for e in edges}
    degree = [0] * (m + n)
    for i, j in edges:
        degree[i] += 1
        degree[m + j] += 1
    x = [[0.0] * n for _ in range(m)]
    while remaining:
        for i, j in list(remaining):
            leaf = i if degree[i] == 1 else (m + j if degree[m + j] == 1 else None)
            if leaf is None:
                continue
            q = residual[leaf]
            x[i][j] = q
            residual[i] -= q
            residual[m + j] -= q
            degree[i] -= 1
            degree[m + j] -= 1
            remaining.discard((i, j))
    return x


def enumerate_vertices(row_margin: DiscretePMF, col_margin: DiscretePMF,
                       guard: int = ENUMERATION_GUARD) -> list:
    """All vertices of the transportation polytope, by brute force over bases."""
    m, n = len(row_margin), len(col_margin)
    if m > guard or n > guard:
        raise OracleSizeError(f"enumeration is limited to {guard}x{guard}, got {m}x{n}")
    a, _ = _rescaled(row_margin)
    b, _ = _rescaled(col_margin)
    cells = [(i, j) for i in range(m) for j in range(n)]
    seen = {}
    for edges in itertools.combinations(cells, m + n - 1):
        x = _flows_on_tree(edges, a, b, m, n)
        if x is None:
            continue
        arr = np.array(x)
        if arr.min() < -1e-12:
            continue
        key = tuple(np.round(arr, 12).ravel())
        seen.setdefault(key, np.maximum(arr, 0.0))
    return list(seen.values())


def extremize_by_enumeration(inst: TransportInstance, direction: str = "max") -> float:
    """Same optimum as :func:`extremize_mass`, computed over every vertex."""
    values = [float(v[inst.cells].sum()) for v in
              enumerate_vertices(inst.row_margin, inst.col_margin)]
    return min(values) if direction == "min" else max(values)


def worst_case_event_probability(pmf1: DiscretePMF, pmf0: DiscretePMF, event: DeltaEvent,
                                 check_complement: bool = True,
                                 size_guard: int = DEFAULT_SIZE_GUARD) -> BoundPair:
    """Sharp [min, max] of P(Y1 - Y0 in event) over couplings of the margins.

    With ``check_complement`` the identity max P(E) = 1 - min P(not E) is
    re-solved and enforced on every call.
    """
    inst = TransportInstance.from_event(pmf1, pmf0, event)
    lo = extremize_mass(inst, "min", size_guard)
    hi = extremize_mass(inst, "max", size_guard)
    if check_complement:
        comp_lo = extremize_mass(inst.complement(), "min", size_guard)
        comp_hi = extremize_mass(inst.complement(), "max", size_guard)
        tol = get_tolerance()
        if abs(hi.value - (1 - comp_lo.value)) > tol or abs(lo.value - (1 - comp_hi.value)) > tol:
            raise OracleError("complementary-event identity violated")
    return BoundPair(lo.value, hi.value, lo.coupling, hi.coupling, event)
