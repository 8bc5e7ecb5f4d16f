"""Rate pentagons, sampled union frontiers, convex hulls and dominance.

A region in the (R1, R2) plane is represented by its upper-right
boundary, a :class:`Frontier`: points sorted by increasing R1 with R2
nonincreasing, running from ``(0, maxR2)`` to ``(maxR1, 0)``. The region
itself is the down-closed set under the piecewise-linear curve through
those points.
"""

from __future__ import annotations

import io
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

__all__ = [
    "RegionBounds",
    "Frontier",
    "pentagon_vertices",
    "pentagon_area",
    "union_frontier",
    "convex_hull_frontier",
    "dominates",
    "frontier_area",
    "frontier_to_csv",
    "DEFAULT_ANGLE_SAMPLES",
]

DEFAULT_ANGLE_SAMPLES = 181
_EPS = 1e-12


@dataclass(frozen=True)
class RegionBounds:
    """Caps ``R1 <= a``, ``R2 <= b``, ``R1 + R2 <= c`` (bits per channel use)."""

    a: float
    b: float
    c: float

    def as_tuple(self):
        return (self.a, self.b, self.c)

    def swapped(self) -> "RegionBounds":
        return RegionBounds(self.b, self.a, self.c)

    def reduced(self) -> "RegionBounds":
        """Same pentagon with the individual caps tightened to ``min(a, c)`` and ``min(b, c)``."""
        return RegionBounds(min(self.a, self.c), min(self.b, self.c), self.c)


@dataclass(frozen=True)
class Frontier:
    points: np.ndarray = field(repr=False)

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float).reshape(-1, 2)
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)

    @property
    def r1(self) -> np.ndarray:
        return self.points[:, 0]

    @property
    def r2(self) -> np.ndarray:
        return self.points[:, 1]

    def __len__(self):
        return len(self.points)

    def swapped(self) -> "Frontier":
        return Frontier(self.points[::-1, ::-1])


def pentagon_vertices(rb: RegionBounds) -> list[tuple[float, float]]:
    """Vertices of ``{R >= 0, R1 <= a, R2 <= b, R1 + R2 <= c}``, counterclockwise from the origin.

    Degenerate shapes (rectangle, triangle, segment, point) come out with
    repeated vertices removed.

    >>> pentagon_vertices(RegionBounds(2, 2, 3))
    [(0.0, 0.0), (2.0, 0.0), (2.0, 1.0), (1.0, 2.0), (0.0, 2.0)]
    """
    a, b, c = (max(float(v), 0.0) for v in rb.as_tuple())
    ea, eb = min(a, c), min(b, c)
    raw = [
        (0.0, 0.0),
        (ea, 0.0),
        (ea, min(eb, c - ea)),
        (min(ea, c - eb), eb),
        (0.0, eb),
    ]
    out = []
    for v in raw:
        if not out or v != out[-1]:
            out.append(v)
    if len(out) > 1 and out[-1] == out[0]:
        out.pop()
    return out


def pentagon_area(rb: RegionBounds) -> float:
    """Shoelace area of :func:`pentagon_vertices`."""
    v = np.array(pentagon_vertices(rb), dtype=float)
    if len(v) < 3:
        return 0.0
    x, y = v[:, 0], v[:, 1]
    return 0.5 * float(np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1)))


def _weak_pareto(points: np.ndarray) -> np.ndarray:
    """Drop points strictly dominated in both coordinates; sort by R1 asc, R2 desc."""
    pts = np.unique(np.asarray(points, dtype=float), axis=0)
    order = np.lexsort((-pts[:, 1], pts[:, 0]))
    pts = pts[order]
    keep = np.ones(len(pts), dtype=bool)
    # scanning from the right, track the best R2 among strictly larger R1
    best = -np.inf
    i = len(pts) - 1
    while i >= 0:
        j = i
        while j > 0 and pts[j - 1, 0] == pts[i, 0]:
            j -= 1
        for m in range(j, i + 1):
            if pts[m, 1] < best:
                keep[m] = False
        best = max(best, pts[j:i + 1, 1].max())
        i = j - 1
    return pts[keep]


def union_frontier(bounds: Sequence[RegionBounds], angle_samples: int = DEFAULT_ANGLE_SAMPLES) -> Frontier:
    """Radially sampled boundary of the union of pentagons.

    For each direction on a uniform grid over ``[0, pi/2]`` the farthest
    boundary point of any pentagon along that ray is kept; the samples are
    then Pareto filtered.
    """
    if len(bounds) == 0:
        raise ValueError("union_frontier needs at least one RegionBounds")
    if angle_samples < 2:
        raise ValueError("angle_samples must be >= 2")
    abc = np.array([[max(v, 0.0) for v in rb.as_tuple()] for rb in bounds], dtype=float)
    theta = np.linspace(0.0, np.pi / 2, angle_samples)
    cos, sin = np.cos(theta), np.sin(theta)
    cos[-1] = 0.0
    sin[0] = 0.0
    with np.errstate(divide="ignore", invalid="ignore"):
        ra = np.where(cos[None, :] > 0, abc[:, :1] / cos[None, :], np.inf)
        rb_ = np.where(sin[None, :] > 0, abc[:, 1:2] / sin[None, :], np.inf)
        rc = abc[:, 2:3] / (cos + sin)[None, :]
    radius = np.minimum(np.minimum(ra, rb_), rc).max(axis=0)
    pts = np.column_stack([radius * cos, radius * sin])
    return Frontier(_weak_pareto(pts))


def convex_hull_frontier(f: Frontier) -> Frontier:
    """Upper-right convex hull (time sharing between frontier points).

    Collinear points are kept so that an already-convex frontier is
    returned unchanged.
    """
    pts = f.points
    if len(pts) == 0:
        return f
    max_r1 = pts[:, 0].max()
    # one point per R1 (the highest), then the concave majorant
    xs = np.unique(pts[:, 0])
    tops = np.array([[x, pts[pts[:, 0] == x, 1].max()] for x in xs])
    hull: list[np.ndarray] = []
    for p in tops:
        while len(hull) >= 2:
            o, a = hull[-2], hull[-1]
            cross = (a[0] - o[0]) * (p[1] - o[1]) - (a[1] - o[1]) * (p[0] - o[0])
            if cross > _EPS * max(1.0, abs(p[0]) + abs(p[1])):
                hull.pop()
            else:
                break
        hull.append(p)
    out = [tuple(h) for h in hull]
    if out[0][0] > 0:
        out.insert(0, (0.0, out[0][1]))
    if out[-1][1] > 0:
        out.append((max_r1, 0.0))
    return Frontier(np.array(out))


def _upper_envelope(f: Frontier, x: np.ndarray) -> np.ndarray:
    """Height of the region under ``f`` at abscissae ``x`` (-inf outside)."""
    pts = f.points
    x = np.asarray(x, dtype=float)
    out = np.full(x.shape, -np.inf)
    if len(pts) == 1:
        out[x <= pts[0, 0]] = pts[0, 1]
        return out
    x0, y0 = pts[:-1, 0], pts[:-1, 1]
    x1, y1 = pts[1:, 0], pts[1:, 1]
    for xa, ya, xb, yb in zip(x0, y0, x1, y1):
        inside = (x >= xa) & (x <= xb)
        if not inside.any():
            continue
        if xb == xa:
            val = max(ya, yb)
        else:
            val = ya + (yb - ya) * ((x[inside] - xa) / (xb - xa))
        out[inside] = np.maximum(out[inside], val)
    # the region is down-closed: anything left of the first point is capped by its height
    out = np.where(x < pts[0, 0], np.maximum(out, pts[:, 1].max()), out)
    return out


def dominates(fA: Frontier, fB: Frontier, tol: float = 0.0) -> bool:
    """True iff every point of ``fB`` lies in the region under ``fA`` grown by ``tol`` (sup-norm)."""
    if len(fB) == 0:
        return True
    p = fB.points
    x = np.maximum(p[:, 0] - tol, 0.0)
    y = np.maximum(p[:, 1] - tol, 0.0)
    height = _upper_envelope(fA, x)
    scale = 1.0 + np.abs(fA.points).max(initial=0.0)
    return bool(np.all(y <= height + _EPS * scale))


def frontier_area(f: Frontier) -> float:
    """Area of the region under the frontier (shoelace over origin + boundary)."""
    pts = f.points
    if len(pts) == 0:
        return 0.0
    poly = [(0.0, 0.0)]
    if pts[0, 0] > 0:
        poly.append((0.0, pts[0, 1]))
    poly.extend(map(tuple, pts))
    if pts[-1, 1] > 0:
        poly.append((pts[-1, 0], 0.0))
    v = np.array(poly)
    # boundary is traversed clockwise (left to right along the top)
    return 0.5 * abs(float(np.dot(v[:, 0], np.roll(v[:, 1], -1)) - np.dot(v[:, 1], np.roll(v[:, 0], -1))))


def _fmt(x: float) -> str:
    s = format(float(x), ".12g")
    return "0" if s == "-0" else s


def frontier_to_csv(f: Frontier, header: bool = True) -> str:
    """``R1,R2`` rows in increasing R1 order, 12 significant digits."""
    buf = io.StringIO()
    if header:
        buf.write("R1,R2\n")
    for r1, r2 in f.points:
        buf.write(f"{_fmt(r1)},{_fmt(r2)}\n")
    return buf.getvalue()


def format_number(x: float) -> str:
    return _fmt(x)
