"""Shortest paths inside a polygonal freespace component.

Nodes are the reflex corners of the slightly shrunk freespace; a Dijkstra
pass from the goal gives every node its remaining path length, so a query
only needs the nodes visible from the current position.
"""

from __future__ import annotations

import heapq
import math

import numpy as np
import shapely
from shapely.geometry import Polygon

from . import geometry as geo

SHRINK = 0.03
QUERY_SLACK = 0.02


def _reflex_vertices(poly: Polygon) -> list:
    """Vertices where the freespace boundary turns into the free side (obstacle corners)."""
    out = []
    rings = [(np.asarray(poly.exterior.coords)[:-1], True)]
    rings += [(np.asarray(h.coords)[:-1], False) for h in poly.interiors]
    for pts, is_ext in rings:
        n = len(pts)
        if n < 3:
            continue
        area = 0.5 * np.sum(pts[:, 0] * np.roll(pts[:, 1], -1) - np.roll(pts[:, 0], -1) * pts[:, 1])
        ccw = area > 0
        for i in range(n):
            a, b, c = pts[i - 1], pts[i], pts[(i + 1) % n]
            cross = (b[0] - a[0]) * (c[1] - b[1]) - (b[1] - a[1]) * (c[0] - b[0])
            # exterior CCW: right turns are reflex; holes are the other way round
            if ((cross < 0) == ccw) == is_ext:
                out.append((float(b[0]), float(b[1])))
    return out


class VisibilityPlanner:
    def __init__(self, freespace, goal, shrink: float = SHRINK):
        self.goal = (float(goal[0]), float(goal[1]))
        self.free = freespace
        self.visible_area = freespace.buffer(QUERY_SLACK)
        shrunk = freespace.buffer(-shrink, join_style="mitre")
        nodes = []
        for p in geo.polygons_of(shrunk):
            nodes.extend(_reflex_vertices(p))
        self.nodes = np.array(nodes, dtype=float).reshape(-1, 2)
        self.dist, self.next = self._dijkstra(shrunk.buffer(1e-7) if not shrunk.is_empty else freespace)

    def _visible(self, area, a: np.ndarray, bs: np.ndarray) -> np.ndarray:
        if len(bs) == 0:
            return np.zeros(0, dtype=bool)
        lines = shapely.linestrings(np.stack([np.broadcast_to(a, bs.shape), bs], axis=1))
        same = np.all(np.isclose(bs, a), axis=1)
        lines = np.where(same, None, lines)
        out = shapely.covers(area, lines)
        out[same] = True
        return out

    def _dijkstra(self, area) -> tuple:
        n = len(self.nodes)
        pts = np.vstack([self.nodes, np.array([self.goal])]) if n else np.array([self.goal])
        g = n  # goal index
        dist = np.full(n + 1, math.inf)
        nxt = np.full(n + 1, -1)
        dist[g] = 0.0
        if n == 0:
            return dist, nxt
        # adjacency: mutual visibility among nodes and the goal
        vis = np.zeros((n + 1, n + 1), dtype=bool)
        for i in range(n):
            vis[i, i + 1:n] = self._visible(area, pts[i], pts[i + 1:n])
        # the goal may sit closer to the boundary than the shrink distance
        vis[:n, g] = self._visible(self.visible_area, pts[g], pts[:n])
        vis = vis | vis.T
        heap = [(0.0, g)]
        done = np.zeros(n + 1, dtype=bool)
        while heap:
            d, i = heapq.heappop(heap)
            if done[i]:
                continue
            done[i] = True
            for j in np.nonzero(vis[i])[0]:
                nd = d + float(np.hypot(*(pts[i] - pts[j])))
                if nd < dist[j] - 1e-12:
                    dist[j] = nd
                    nxt[j] = i
                    heapq.heappush(heap, (nd, int(j)))
        return dist, nxt

    def path(self, x) -> list:
        """Polyline from ``x`` (exclusive) to the goal."""
        x = np.asarray(x, dtype=float)
        goal = np.array(self.goal)
        if self._visible(self.visible_area, x, goal[None])[0]:
            return [self.goal]
        n = len(self.nodes)
        if n == 0:
            return [self.goal]
        vis = self._visible(self.visible_area, x, self.nodes)
        cost = np.where(vis, np.hypot(*(self.nodes - x).T) + self.dist[:n], math.inf)
        i = int(np.argmin(cost))
        if not math.isfinite(cost[i]):
            return [self.goal]
        out = []
        while i != n and i >= 0:
            out.append((float(self.nodes[i][0]), float(self.nodes[i][1])))
            i = int(self.next[i])
        out.append(self.goal)
        return out

    def carrot(self, x, lookahead: float) -> tuple:
        """Point at arc length ``lookahead`` along the path from ``x`` (or the goal)."""
        pts = [tuple(map(float, x))] + self.path(x)
        left = lookahead
        for a, b in zip(pts, pts[1:]):
            seg = math.hypot(b[0] - a[0], b[1] - a[1])
            if seg >= left:
                t = left / seg if seg > 0 else 0.0
                return (a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1]))
            left -= seg
        return pts[-1]
