"""Freespace topology checking and blocking-object extraction.

Given the enclosing freespace, the dilated movable objects and the dilated
localized obstacles, decide whether the goal lies in the robot's freespace
component, can be connected to it by moving objects out of the way, or is
cut off by fixed obstacles only.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from typing import Mapping, Optional, Sequence

import json

from shapely.geometry import Point, mapping

from . import geometry as geo

SNAP_TOL = 0.05  # how far outside a component a point may be snapped to it


class TopologyError(ValueError):
    pass


class RobotInObstacle(TopologyError):
    pass


class CycleError(TopologyError):
    """Some movable cluster touches more than two freespace components."""


class GoalNotInTree(TopologyError):
    pass


@dataclass(frozen=True)
class ConnectivityTree:
    vertices: tuple  # ("free", index) or ("cluster", index)
    parent: Mapping[tuple, Optional[tuple]]
    edges: tuple  # (parent, child) pairs
    root: tuple

    def path_to_root(self, v: tuple) -> list:
        if v not in self.parent:
            raise GoalNotInTree(f"{v} is not in the tree")
        out = [v]
        while self.parent[out[-1]] is not None:
            out.append(self.parent[out[-1]])
        return out


@dataclass(frozen=True)
class TopologyResult:
    enclosing_freespace: object
    freespace: object
    is_feasible: bool
    blocking: tuple = ()  # bottom of the stack first; pop from the end
    free_components: tuple = field(default=(), repr=False)
    clusters: tuple = field(default=(), repr=False)
    tree: Optional[ConnectivityTree] = field(default=None, repr=False)
    goal_in_freespace: bool = False


def locate(comps: Sequence, x, snap: float = SNAP_TOL) -> Optional[int]:
    """Index of the component containing ``x``, snapping to the nearest one within ``snap``."""
    best, best_d = None, snap
    for i, c in enumerate(comps):
        d = geo.distance(c, x)
        if d <= geo.EPS:
            return i
        if d <= best_d:
            best, best_d = i, d
    return best


def connectivity_tree(free: Sequence, clusters: Sequence, root: int, eps: float = geo.EPS) -> ConnectivityTree:
    """Breadth-first tree over closure adjacency between freespace components and clusters."""
    adj: dict = {}
    for i, f in enumerate(free):
        for j, c in enumerate(clusters):
            if f.distance(c) <= eps:
                adj.setdefault(("free", i), []).append(("cluster", j))
                adj.setdefault(("cluster", j), []).append(("free", i))
    start = ("free", root)
    parent = {start: None}
    order = [start]
    edges = []
    queue = deque([start])
    while queue:
        v = queue.popleft()
        for w in adj.get(v, ()):
            if w == parent[v]:
                continue
            if w in parent:
                raise CycleError(f"regions {v} and {w} close a cycle")
            parent[w] = v
            order.append(w)
            edges.append((v, w))
            queue.append(w)
    return ConnectivityTree(tuple(order), parent, tuple(edges), start)


def backtrack_blocking(
    tree: ConnectivityTree,
    goal,
    free: Sequence,
    clusters: Sequence,
    movables: Mapping[str, object],
    robot=None,
) -> tuple:
    """Objects of every cluster between the goal and the root, nearest-to-goal pushed first."""
    start = None
    for v in tree.vertices:
        region = free[v[1]] if v[0] == "free" else clusters[v[1]]
        if geo.contains(region, goal):
            start = v
            break
    if start is None:
        raise GoalNotInTree("the goal lies in no region of the tree")
    stack = []
    for v in tree.path_to_root(start):
        if v[0] != "cluster":
            continue
        cl = clusters[v[1]]
        members = [k for k in sorted(movables) if not movables[k].is_empty and movables[k].distance(cl) <= geo.EPS]
        if robot is not None:
            # within a cluster the object nearest the robot ends on top
            members.sort(key=lambda k: -movables[k].centroid.distance(Point(robot)))
        stack.extend(m for m in members if m not in stack)
    return tuple(stack)


def topology_check(
    x,
    goal,
    enclosing,
    movables: Mapping[str, object],
    obstacles: Sequence = (),
) -> TopologyResult:
    """One pass of the topology check.

    ``movables`` maps object ids to dilated object polygons, ``obstacles``
    holds the dilated localized fixed obstacles.
    """
    blocked = geo.union_all(list(movables.values()) + list(obstacles))
    free = geo.components(enclosing.difference(blocked) if not blocked.is_empty else enclosing)
    k = locate(free, x)
    if k is None:
        raise RobotInObstacle(f"({x[0]:.3f}, {x[1]:.3f}) is not in the freespace")
    F = free[k]
    hull = geo.convex_hull(F)
    if geo.contains(F, goal):
        return TopologyResult(hull, F, True, (), tuple(free), (), None, True)

    # moving objects cannot open a passage through fixed obstacles
    fixed = geo.union_all(list(obstacles))
    room = enclosing.difference(fixed) if not fixed.is_empty else enclosing
    clipped = {k: m.intersection(room) for k, m in movables.items()}
    clusters = geo.components(list(clipped.values()))
    joint = geo.components(list(free) + list(clusters))
    jx, jg = locate(joint, x), locate(joint, goal, snap=geo.EPS)
    if jx is None or jg is None or jx != jg:
        return TopologyResult(hull, F, False, (), tuple(free), tuple(clusters), None, False)
    tree = connectivity_tree(free, clusters, k)
    stack = backtrack_blocking(tree, goal, free, clusters, clipped, robot=x)
    return TopologyResult(hull, F, True, stack, tuple(free), tuple(clusters), tree, False)


def debug_dump(result: TopologyResult) -> str:
    """GeoJSON-like snapshot of one topology check."""
    feats = []
    for i, f in enumerate(result.free_components):
        feats.append({"type": "Feature", "properties": {"kind": "free", "index": i}, "geometry": mapping(f)})
    for i, c in enumerate(result.clusters):
        feats.append({"type": "Feature", "properties": {"kind": "cluster", "index": i}, "geometry": mapping(c)})
    doc = {
        "type": "FeatureCollection",
        "features": feats,
        "tree_edges": [[list(a), list(b)] for a, b in (result.tree.edges if result.tree else ())],
        "blocking": list(result.blocking),
        "is_feasible": result.is_feasible,
    }
    return json.dumps(doc, sort_keys=True)
