"""Classification of the (p0, p1) unit square into binary prediction-set regions."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from typing import Optional

from .binary import (BinaryMarginals, BinarySet, classify_best,
                     necessary_condition_valid_best, shortest_sets)
from .core import InputError, check_alpha

MIN_RESOLUTION = 10
TIE = (BinarySet.ZERO_TO_ONE, BinarySet.NEG_TO_ZERO)

# fixed palette and legend order; the tie entry covers cells holding both two-point sets
PALETTE = (
    ("NEG_ONE", "#d7191c"),
    ("ZERO", "#2c7bb6"),
    ("ONE", "#1a9641"),
    ("NEG_TO_ZERO", "#fdae61"),
    ("ZERO_TO_ONE", "#a6d96a"),
    ("ZERO_TO_ONE|NEG_TO_ZERO", "#7b3294"),
    ("FULL", "#e0e0e0"),
    ("SHADED", "#404040"),
)
_COLORS = dict(PALETTE)
_EMPTY_COLOR = "#ffffff"
_OTHER_COLOR = "#999999"


def parse_mode(mode: str) -> tuple[str, Optional[BinarySet]]:
    """``shortest``, ``best`` or ``necessary:<set>`` (name or label)."""
    if mode in ("shortest", "best"):
        return mode, None
    if mode.startswith("necessary:"):
        return "necessary", BinarySet.parse(mode.split(":", 1)[1])
    raise ValueError(f"unknown region-map mode {mode!r}; use shortest, best or necessary:<set>")


@dataclass(frozen=True)
class RegionMap:
    """Per-cell tags on an R x R grid of cell centers ((i + 0.5) / R, (j + 0.5) / R).

    ``cells[i][j]`` holds the tags at p0 index i and p1 index j.
    """

    resolution: int
    cells: tuple
    alpha: Optional[float] = None
    mode: str = ""

    def tags_at(self, p0: float, p1: float) -> tuple:
        """Tags of the cell containing (p0, p1)."""
        R = self.resolution
        i = min(int(p0 * R), R - 1)
        j = min(int(p1 * R), R - 1)
        return self.cells[i][j]

    def count(self, key: str) -> int:
        return sum(1 for col in self.cells for tags in col if "|".join(tags) == key)

    def area(self, key: str) -> float:
        return self.count(key) / self.resolution ** 2

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["p0", "p1", "tags"])
        R = self.resolution
        for i in range(R):
            for j in range(R):
                w.writerow([repr((i + 0.5) / R), repr((j + 0.5) / R), "|".join(self.cells[i][j])])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str, where: str = "<csv>") -> "RegionMap":
        rows = list(csv.reader(io.StringIO(text)))
        if not rows or [h.strip() for h in rows[0]] != ["p0", "p1", "tags"]:
            raise InputError(f"{where}:1", "expected header 'p0,p1,tags'")
        body = rows[1:]
        R = math.isqrt(len(body))
        if R * R != len(body) or R < 1:
            raise InputError(where, f"{len(body)} rows do not form a square grid")
        cells = [[()] * R for _ in range(R)]
        for lineno, row in enumerate(body, start=2):
            if len(row) != 3:
                raise InputError(f"{where}:{lineno}", f"expected 3 columns, got {len(row)}")
            try:
                i = round(float(row[0]) * R - 0.5)
                j = round(float(row[1]) * R - 0.5)
            except ValueError:
                raise InputError(f"{where}:{lineno}", "p0 and p1 must be numbers") from None
            if not (0 <= i < R and 0 <= j < R):
                raise InputError(f"{where}:{lineno}", "coordinates fall outside the unit square")
            cells[i][j] = tuple(t for t in row[2].split("|") if t)
        return cls(R, tuple(tuple(c) for c in cells))


def region_map(alpha: float, resolution: int = 199, mode: str = "best") -> RegionMap:
    alpha = check_alpha(alpha)
    if int(resolution) != resolution or resolution < MIN_RESOLUTION:
        raise ValueError(f"resolution must be an integer >= {MIN_RESOLUTION}, got {resolution!r}")
    kind, target = parse_mode(mode)
    R = int(resolution)
    cols = []
    for i in range(R):
        col = []
        for j in range(R):
            m = BinaryMarginals((i + 0.5) / R, (j + 0.5) / R)
            if kind == "best":
                tags = tuple(s.name for s in classify_best(m, alpha))
            elif kind == "shortest":
                tags = tuple(s.name for s in shortest_sets(m, alpha))
            else:
                tags = ("SHADED",) if necessary_condition_valid_best(target, m, alpha) else ()
            col.append(tags)
        cols.append(tuple(col))
    return RegionMap(R, tuple(cols), alpha, mode)


def _color(tags: tuple) -> str:
    if not tags:
        return _EMPTY_COLOR
    return _COLORS.get("|".join(tags), _OTHER_COLOR)


def render_svg(rmap: RegionMap, cell_px: Optional[int] = None) -> str:
    """Flat SVG: one rect per horizontal run of equal color, p0 rightwards, p1 upwards.

    The output depends only on the grid tags, so a map read back from CSV
    renders to the same bytes.
    """
    R = rmap.resolution
    px = cell_px or max(1, 600 // R)
    size = R * px
    legend_w = 190
    out = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{size + legend_w}" '
        f'height="{max(size, 20 * len(PALETTE) + 20)}">',
        f'<rect x="0" y="0" width="{size}" height="{size}" fill="{_EMPTY_COLOR}" stroke="#000000"/>',
    ]
    for j in range(R):
        y = (R - 1 - j) * px
        i = 0
        while i < R:
            color = _color(rmap.cells[i][j])
            k = i
            while k + 1 < R and _color(rmap.cells[k + 1][j]) == color:
                k += 1
            if color != _EMPTY_COLOR:
                out.append(f'<rect x="{i * px}" y="{y}" width="{(k - i + 1) * px}" '
                           f'height="{px}" fill="{color}"/>')
            i = k + 1
    for n, (key, color) in enumerate(PALETTE):
        y = 10 + 20 * n
        out.append(f'<rect x="{size + 10}" y="{y}" width="14" height="14" fill="{color}" '
                   'stroke="#000000"/>')
        out.append(f'<text x="{size + 30}" y="{y + 12}" font-family="monospace" '
                   f'font-size="11">{key}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def boundary_tolerance(alpha: float, resolution: int) -> float:
    """Area slack for a region whose boundary may move by one grid cell.

    The tie region is two right triangles with legs alpha, so its boundary has
    length 2 * alpha * (2 + sqrt 2); shifting it by one cell width changes the
    area by at most that length times the cell width.
    """
    return 2 * alpha * (2 + math.sqrt(2)) / resolution
