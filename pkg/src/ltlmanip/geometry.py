"""Polygon kernel on top of shapely.

Circles are everywhere replaced by 16-gons whose area equals the circle's,
so dilations stay purely polygonal.  Polygon sets are plain lists of shapely
``Polygon`` objects.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence, Union

import numpy as np
import shapely
from shapely.geometry import MultiPolygon, Point, Polygon
from shapely.geometry.base import BaseGeometry
from shapely.geometry.polygon import orient
from shapely.ops import unary_union

EPS = 1e-9  # predicate snapping
AREA_TOL = 1e-6
ARC_SEGMENTS = 16

# radius factor making the regular 16-gon's area equal to the circle's
_AREA_SCALE = math.sqrt(math.pi / (ARC_SEGMENTS / 2 * math.sin(2 * math.pi / ARC_SEGMENTS)))


class DegenerateGeometry(ValueError):
    pass


@dataclass(frozen=True)
class Disk:
    center: tuple
    radius: float

    def __post_init__(self):
        if not self.radius > 0:
            raise DegenerateGeometry(f"disk radius must be positive, got {self.radius}")
        object.__setattr__(self, "center", (float(self.center[0]), float(self.center[1])))

    def polygon(self) -> Polygon:
        return circle_polygon(self.center, self.radius)


Shape = Union[Polygon, MultiPolygon, Disk]


def circle_polygon(center: Sequence[float], radius: float, n: int = ARC_SEGMENTS) -> Polygon:
    """Regular ``n``-gon with the same area as the circle (one vertex on +x)."""
    if radius <= 0:
        raise DegenerateGeometry("radius must be positive")
    scale = math.sqrt(math.pi / (n / 2 * math.sin(2 * math.pi / n)))
    ang = np.arange(n) * (2 * math.pi / n)
    rv = radius * scale
    pts = np.column_stack([center[0] + rv * np.cos(ang), center[1] + rv * np.sin(ang)])
    return Polygon(pts)


def _ngon_offsets(radius: float) -> np.ndarray:
    ang = np.arange(ARC_SEGMENTS) * (2 * math.pi / ARC_SEGMENTS)
    rv = radius * _AREA_SCALE
    return np.column_stack([rv * np.cos(ang), rv * np.sin(ang)])


def make_polygon(exterior: Sequence, holes: Sequence = ()) -> Polygon:
    """Validated polygon with counter-clockwise exterior and clockwise holes."""
    try:
        p = Polygon(exterior, [h for h in holes])
    except (ValueError, TypeError) as exc:
        raise DegenerateGeometry(f"bad polygon rings: {exc}") from exc
    if not p.is_valid:
        raise DegenerateGeometry(f"invalid polygon: {shapely.is_valid_reason(p)}")
    if p.area <= AREA_TOL:
        raise DegenerateGeometry("polygon has (near) zero area")
    return orient(p, 1.0)


def polygons_of(geom, drop_tiny: bool = True) -> list:
    """Flatten a geometry or an iterable of geometries into polygons."""
    if geom is None:
        return []
    if isinstance(geom, Disk):
        return [geom.polygon()]
    if isinstance(geom, Polygon):
        if geom.is_empty or (drop_tiny and geom.area <= AREA_TOL):
            return []
        return [orient(geom, 1.0)]
    if isinstance(geom, BaseGeometry):
        return polygons_of(getattr(geom, "geoms", ()), drop_tiny)
    out = []
    for g in geom:
        out.extend(polygons_of(g, drop_tiny))
    return out


def union_all(geoms) -> BaseGeometry:
    polys = polygons_of(geoms)
    if not polys:
        return Polygon()
    return unary_union(polys)


def boolean(op: str, a, b) -> list:
    """Union, difference or intersection of two polygon sets."""
    for p in polygons_of(a, drop_tiny=False) + polygons_of(b, drop_tiny=False):
        if p.area <= AREA_TOL:
            raise DegenerateGeometry("zero-area operand")
    ga, gb = union_all(a), union_all(b)
    if op == "union":
        out = ga.union(gb)
    elif op == "difference":
        out = ga.difference(gb)
    elif op == "intersection":
        out = ga.intersection(gb)
    else:
        raise ValueError(f"unknown boolean operation {op!r}")
    return polygons_of(out)


def _edge_sweeps(rings: Iterable[np.ndarray], by: float) -> list:
    """Convex hulls of each boundary edge swept by the 16-gon."""
    off = _ngon_offsets(by)
    hulls = []
    for ring in rings:
        pts = np.asarray(ring)[:, :2]
        for a, b in zip(pts[:-1], pts[1:]):
            cloud = np.vstack([a + off, b + off])
            hulls.append(shapely.convex_hull(shapely.multipoints(cloud)))
    return hulls


def _rings(geom) -> list:
    rings = []
    for p in polygons_of(geom):
        rings.append(np.asarray(p.exterior.coords))
        rings.extend(np.asarray(h.coords) for h in p.interiors)
    return rings


def dilate(shape: Shape, by: float) -> BaseGeometry:
    """Minkowski sum with a disk of radius ``by`` (the disk drawn as a 16-gon)."""
    if by < 0:
        raise ValueError("dilation radius must be non-negative")
    if isinstance(shape, Disk):
        return circle_polygon(shape.center, shape.radius + by)
    if by == 0:
        return union_all(shape)
    return unary_union(polygons_of(shape) + _edge_sweeps(_rings(shape), by))


def erode(shape, by: float) -> BaseGeometry:
    """Points of ``shape`` at least ``by`` away from its boundary."""
    if by < 0:
        raise ValueError("erosion radius must be non-negative")
    base = union_all(shape)
    if by == 0:
        return base
    return base.difference(unary_union(_edge_sweeps(_rings(base), by)))


def convex_hull(geoms) -> Polygon:
    polys = polygons_of(geoms)
    if not polys:
        raise DegenerateGeometry("convex hull of an empty set")
    hull = unary_union(polys).convex_hull
    if not isinstance(hull, Polygon) or hull.area <= AREA_TOL:
        raise DegenerateGeometry("convex hull is degenerate")
    return orient(hull, 1.0)


def components(geoms, eps: float = EPS) -> list:
    """Group polygons whose closures touch (distance ``<= eps``) into components.

    Each component is returned as a single (multi)polygon; the list is sorted
    by the lower-left corner of the bounding boxes.
    """
    polys = polygons_of(geoms)
    n = len(polys)
    parent = list(range(n))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    if n > 1:
        tree = shapely.STRtree(polys)
        left, right = tree.query(polys, predicate="dwithin", distance=eps)
        for i, j in zip(left, right):
            ri, rj = find(int(i)), find(int(j))
            if ri != rj:
                parent[max(ri, rj)] = min(ri, rj)
    groups: dict = {}
    for i in range(n):
        groups.setdefault(find(i), []).append(polys[i])
    comps = [unary_union(g) if len(g) > 1 else g[0] for g in groups.values()]
    comps.sort(key=lambda g: (round(g.bounds[0], 9), round(g.bounds[1], 9), -g.area))
    return comps


def contains(poly, x: Sequence[float], eps: float = EPS) -> bool:
    """Closed membership: boundary points count as inside."""
    if poly is None or poly.is_empty:
        return False
    pt = Point(float(x[0]), float(x[1]))
    return poly.covers(pt) or poly.distance(pt) <= eps


def distance(poly, x: Sequence[float]) -> float:
    return poly.distance(Point(float(x[0]), float(x[1])))


def centroid(poly) -> tuple:
    c = poly.centroid
    return (c.x, c.y)


def polygon_to_json(p: Polygon) -> list:
    ext = [[float(x), float(y)] for x, y in list(p.exterior.coords)[:-1]]
    if not p.interiors:
        return ext
    return [ext] + [[[float(x), float(y)] for x, y in list(h.coords)[:-1]] for h in p.interiors]


def polygon_from_json(data: Sequence) -> Polygon:
    """Accepts ``[[x, y], ...]`` or ``[exterior, hole, ...]`` ring lists."""
    if not data:
        raise DegenerateGeometry("empty polygon")
    if isinstance(data[0][0], (int, float)):
        return make_polygon(data)
    return make_polygon(data[0], data[1:])


def boundary_segments(geoms) -> np.ndarray:
    """All boundary edges as an ``(n, 2, 2)`` array."""
    segs = []
    for ring in _rings(geoms):
        segs.append(np.stack([ring[:-1, :2], ring[1:, :2]], axis=1))
    if not segs:
        return np.zeros((0, 2, 2))
    return np.concatenate(segs)
