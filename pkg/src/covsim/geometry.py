"""Bounded Voronoi tessellation of a rectangle plus exact polygon measures.

Cells are obtained by mirroring every site across all four walls, running
scipy's Voronoi on the extended 5n-point set, and clipping the n original
cells back to the rectangle.  Clipping is done explicitly (half-plane
Sutherland-Hodgman) so cell vertices land exactly on the walls instead of
overshooting by floating-point epsilon.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

import numpy as np
from scipy.spatial import Voronoi

from .errors import DegeneratePolygon, DuplicateAgents, PositionOutsideRegion

# Pairwise separation below which two agents count as coincident (m).
DUPLICATE_TOL = 1e-9
# Slack allowed when checking vertices against the region walls (m).
BOUNDARY_TOL = 1e-9
# Polygons with less area than this (m^2) are degenerate.
DEGENERATE_AREA = 1e-12


class Point(NamedTuple):
    x: float
    y: float


@dataclass(frozen=True)
class Region:
    """Axis-aligned bounding rectangle of the sensed environment."""

    x_min: float
    x_max: float
    y_min: float
    y_max: float

    def __post_init__(self):
        if not (self.x_min < self.x_max and self.y_min < self.y_max):
            raise ValueError(f"region bounds not well ordered: {self}")
        for v in (self.x_min, self.x_max, self.y_min, self.y_max):
            if not np.isfinite(v):
                raise ValueError("region bounds must be finite")

    @property
    def width(self) -> float:
        return self.x_max - self.x_min

    @property
    def height(self) -> float:
        return self.y_max - self.y_min

    @property
    def area(self) -> float:
        return self.width * self.height

    def corners(self) -> np.ndarray:
        return np.array(
            [
                (self.x_min, self.y_min),
                (self.x_max, self.y_min),
                (self.x_max, self.y_max),
                (self.x_min, self.y_max),
            ]
        )

    def contains(self, xy, tol: float = 0.0) -> bool:
        x, y = float(xy[0]), float(xy[1])
        return (
            self.x_min - tol <= x <= self.x_max + tol
            and self.y_min - tol <= y <= self.y_max + tol
        )

    def strictly_inside(self, xy) -> bool:
        x, y = float(xy[0]), float(xy[1])
        return self.x_min < x < self.x_max and self.y_min < y < self.y_max

    def as_polygon(self) -> "Polygon":
        return Polygon(self.corners())


@dataclass(frozen=True)
class Polygon:
    """Simple convex polygon, vertices in counterclockwise order."""

    vertices: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.vertices, dtype=float)
        if v.ndim != 2 or v.shape[1] != 2 or v.shape[0] < 3:
            raise DegeneratePolygon(f"need >=3 planar vertices, got shape {v.shape}")
        if not np.all(np.isfinite(v)):
            raise DegeneratePolygon("non-finite vertex")
        v = v.copy()
        v.setflags(write=False)
        object.__setattr__(self, "vertices", v)

    def __len__(self) -> int:
        return len(self.vertices)

    @property
    def bounds(self):
        v = self.vertices
        return (v[:, 0].min(), v[:, 0].max(), v[:, 1].min(), v[:, 1].max())

    def contains(self, xy, tol: float = 1e-9) -> bool:
        """Point-in-convex-polygon via half-plane tests (CCW)."""
        v = self.vertices
        nxt = np.roll(v, -1, axis=0)
        e = nxt - v
        q = np.asarray(xy, dtype=float) - v
        cross = e[:, 0] * q[:, 1] - e[:, 1] * q[:, 0]
        return bool(np.all(cross >= -tol))


@dataclass(frozen=True)
class Tessellation:
    """One convex cell per agent, index-aligned with the input positions."""

    cells: list[Polygon]
    region: Region = field(compare=False)


def _as_positions(positions) -> np.ndarray:
    p = np.asarray(positions, dtype=float)
    if p.ndim == 1:
        p = p.reshape(1, -1)
    if p.ndim != 2 or p.shape[1] != 2:
        raise ValueError(f"positions must be (n, 2), got {p.shape}")
    if not np.all(np.isfinite(p)):
        raise PositionOutsideRegion("non-finite agent position")
    return p


def _require_interior(positions: np.ndarray, region: Region) -> None:
    for i, (x, y) in enumerate(positions):
        if not (region.x_min < x < region.x_max and region.y_min < y < region.y_max):
            raise PositionOutsideRegion(
                f"agent {i} at ({x}, {y}) is not strictly inside {region}"
            )


def _require_distinct(positions: np.ndarray, tol: float = DUPLICATE_TOL) -> None:
    n = len(positions)
    for i in range(n):
        d = positions[i + 1 :] - positions[i]
        if len(d) and np.min(np.hypot(d[:, 0], d[:, 1])) <= tol:
            j = i + 1 + int(np.argmin(np.hypot(d[:, 0], d[:, 1])))
            raise DuplicateAgents(f"agents {i} and {j} coincide within {tol} m")


def reflect_points(positions, region: Region) -> np.ndarray:
    """Mirror every position across each of the four walls.

    Returns a (4n, 2) array in block order: all-left, all-right, all-bottom
    (across y_min), all-top (across y_max), each block index-aligned with the
    input.
    """
    p = _as_positions(positions)
    _require_interior(p, region)
    left = np.column_stack([2.0 * region.x_min - p[:, 0], p[:, 1]])
    right = np.column_stack([2.0 * region.x_max - p[:, 0], p[:, 1]])
    bottom = np.column_stack([p[:, 0], 2.0 * region.y_min - p[:, 1]])
    top = np.column_stack([p[:, 0], 2.0 * region.y_max - p[:, 1]])
    return np.vstack([left, right, bottom, top])


def polygon_area(poly: Polygon) -> float:
    """Shoelace area; positive for CCW input."""
    v = poly.vertices
    x, y = v[:, 0], v[:, 1]
    a = 0.5 * np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y)
    if a < DEGENERATE_AREA:
        raise DegeneratePolygon(f"area {a} below {DEGENERATE_AREA}")
    return float(a)


def polygon_centroid_uniform(poly: Polygon) -> Point:
    """Area-weighted centroid of a simple polygon."""
    v = poly.vertices
    x, y = v[:, 0], v[:, 1]
    xn, yn = np.roll(x, -1), np.roll(y, -1)
    w = x * yn - xn * y
    a = 0.5 * np.sum(w)
    if a < DEGENERATE_AREA:
        raise DegeneratePolygon(f"area {a} below {DEGENERATE_AREA}")
    cx = np.sum((x + xn) * w) / (6.0 * a)
    cy = np.sum((y + yn) * w) / (6.0 * a)
    return Point(float(cx), float(cy))


def canonicalize_ccw(vertices) -> Polygon:
    """Order the vertex set of a convex polygon counterclockwise.

    Vertices are sorted by angle about their mean; the cycle is rotated so
    the lexicographically smallest (x, then y) vertex comes first, which
    makes output deterministic.  Near-duplicate vertices are merged.
    """
    v = np.asarray(vertices, dtype=float).reshape(-1, 2)
    if not np.all(np.isfinite(v)):
        raise DegeneratePolygon("non-finite vertex")
    center = v.mean(axis=0)
    ang = np.arctan2(v[:, 1] - center[1], v[:, 0] - center[0])
    rad = np.hypot(v[:, 0] - center[0], v[:, 1] - center[1])
    order = np.lexsort((rad, ang))
    v = v[order]

    # Merge consecutive near-duplicates (cyclically).
    keep = []
    for i in range(len(v)):
        if not keep or np.hypot(*(v[i] - v[keep[-1]])) > DUPLICATE_TOL:
            keep.append(i)
    if len(keep) > 1 and np.hypot(*(v[keep[0]] - v[keep[-1]])) <= DUPLICATE_TOL:
        keep.pop()
    v = v[keep]
    if len(v) < 3:
        raise DegeneratePolygon("fewer than 3 distinct vertices")

    start = np.lexsort((v[:, 1], v[:, 0]))[0]
    v = np.roll(v, -start, axis=0)
    poly = Polygon(v)
    polygon_area(poly)  # raises DegeneratePolygon for collinear sets
    return poly


def clip_to_region(vertices: np.ndarray, region: Region) -> np.ndarray:
    """Sutherland-Hodgman clip of an ordered convex polygon to a rectangle.

    Intersection points get the wall coordinate exactly, restoring the
    containment invariant after floating-point Voronoi vertices.
    """
    # (axis, bound, keep_leq): keep x >= x_min, x <= x_max, y >= y_min, y <= y_max
    walls = (
        (0, region.x_min, False),
        (0, region.x_max, True),
        (1, region.y_min, False),
        (1, region.y_max, True),
    )
    poly = [tuple(p) for p in np.asarray(vertices, dtype=float)]
    for axis, bound, keep_leq in walls:
        if not poly:
            break
        out = []
        prev = poly[-1]
        for cur in poly:
            prev_in = (prev[axis] <= bound) if keep_leq else (prev[axis] >= bound)
            cur_in = (cur[axis] <= bound) if keep_leq else (cur[axis] >= bound)
            if cur_in != prev_in:
                t = (bound - prev[axis]) / (cur[axis] - prev[axis])
                other = prev[1 - axis] + t * (cur[1 - axis] - prev[1 - axis])
                pt = (bound, other) if axis == 0 else (other, bound)
                out.append(pt)
            if cur_in:
                out.append(cur)
            prev = cur
        poly = out
    return np.asarray(poly, dtype=float).reshape(-1, 2)


def bounded_voronoi(positions, region: Region) -> Tessellation:
    """Voronoi cells of the positions, clipped exactly to the region.

    Computes the diagram of the 5n-point set (originals plus their four
    reflections); inside the rectangle the nearest site is always one of the
    originals, so the first n cells restricted to the rectangle partition it.
    """
    p = _as_positions(positions)
    _require_interior(p, region)
    _require_distinct(p)
    n = len(p)
    if n == 1:
        return Tessellation(cells=[region.as_polygon()], region=region)

    extended = np.vstack([p, reflect_points(p, region)])
    vor = Voronoi(extended)
    cells = []
    for i in range(n):
        idx = vor.regions[vor.point_region[i]]
        if -1 in idx:
            raise DegeneratePolygon(f"unbounded cell for agent {i}")
        raw = canonicalize_ccw(vor.vertices[idx])
        clipped = clip_to_region(raw.vertices, region)
        cell = canonicalize_ccw(clipped)
        for vx, vy in cell.vertices:
            if not region.contains((vx, vy), tol=BOUNDARY_TOL):
                raise DegeneratePolygon(
                    f"cell vertex ({vx}, {vy}) escaped region for agent {i}"
                )
        cells.append(cell)
    return Tessellation(cells=cells, region=region)
