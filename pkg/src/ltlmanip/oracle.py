"""Grid flood-fill cross-check of the topology check.

Obstacles are rasterized at a fixed resolution, dilated with an exact
Euclidean distance transform and the free cells labelled into connected
components.  Nothing here touches the polygon machinery used by the
planner, so the answers serve as an independent reference.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping, Optional, Sequence

import numpy as np
from matplotlib.path import Path as MplPath
from scipy import ndimage

RESOLUTION = 0.01
_FOUR = ndimage.generate_binary_structure(2, 1)


@dataclass(frozen=True)
class OracleAnswer:
    is_feasible: bool
    has_blocking: bool
    goal_in_freespace: bool


class Grid:
    """Cell centers covering ``bounds`` with spacing ``h``."""

    def __init__(self, bounds, h: float = RESOLUTION, pad: float = 0.05):
        minx, miny, maxx, maxy = bounds
        self.h = h
        self.x0, self.y0 = minx - pad, miny - pad
        self.nx = int(math.ceil((maxx - minx + 2 * pad) / h)) + 1
        self.ny = int(math.ceil((maxy - miny + 2 * pad) / h)) + 1
        self.xs = self.x0 + h * np.arange(self.nx)
        self.ys = self.y0 + h * np.arange(self.ny)

    def index(self, p) -> tuple:
        i = int(round((p[1] - self.y0) / self.h))
        j = int(round((p[0] - self.x0) / self.h))
        return min(max(i, 0), self.ny - 1), min(max(j, 0), self.nx - 1)

    def _window(self, bounds) -> tuple:
        minx, miny, maxx, maxy = bounds
        j0 = max(int(math.floor((minx - self.x0) / self.h)) - 1, 0)
        j1 = min(int(math.ceil((maxx - self.x0) / self.h)) + 2, self.nx)
        i0 = max(int(math.floor((miny - self.y0) / self.h)) - 1, 0)
        i1 = min(int(math.ceil((maxy - self.y0) / self.h)) + 2, self.ny)
        return i0, i1, j0, j1

    def rasterize_ring(self, mask: np.ndarray, ring: np.ndarray, value: bool = True) -> None:
        """Set cells whose centers lie inside the closed ring (bounding-box window only)."""
        ring = np.asarray(ring, dtype=float)
        i0, i1, j0, j1 = self._window((ring[:, 0].min(), ring[:, 1].min(), ring[:, 0].max(), ring[:, 1].max()))
        if i0 >= i1 or j0 >= j1:
            return
        X, Y = np.meshgrid(self.xs[j0:j1], self.ys[i0:i1])
        inside = MplPath(ring).contains_points(np.column_stack([X.ravel(), Y.ravel()])).reshape(X.shape)
        mask[i0:i1, j0:j1][inside] = value

    def rasterize_disk(self, mask: np.ndarray, center, radius: float) -> None:
        cx, cy = center
        i0, i1, j0, j1 = self._window((cx - radius, cy - radius, cx + radius, cy + radius))
        if i0 >= i1 or j0 >= j1:
            return
        X, Y = np.meshgrid(self.xs[j0:j1], self.ys[i0:i1])
        mask[i0:i1, j0:j1] |= (X - cx) ** 2 + (Y - cy) ** 2 <= radius**2


def _rings(poly) -> list:
    """(exterior, holes) coordinate arrays of a polygon given as shapely or as nested lists."""
    if hasattr(poly, "exterior"):
        return [np.asarray(poly.exterior.coords)] + [np.asarray(h.coords) for h in poly.interiors]
    return [np.asarray(poly, dtype=float)]


def obstacle_mask(
    grid: Grid,
    workspace,
    polygons: Sequence = (),
    disks: Sequence = (),
) -> np.ndarray:
    """True on cells occupied by obstacles or outside the workspace."""
    inside = np.zeros((grid.ny, grid.nx), dtype=bool)
    rings = _rings(workspace)
    grid.rasterize_ring(inside, rings[0])
    for hole in rings[1:]:
        grid.rasterize_ring(inside, hole, value=False)
    mask = ~inside
    for poly in polygons:
        rs = _rings(poly)
        m = np.zeros_like(mask)
        grid.rasterize_ring(m, rs[0])
        for hole in rs[1:]:
            grid.rasterize_ring(m, hole, value=False)
        mask |= m
    for center, radius in disks:
        grid.rasterize_disk(mask, center, radius)
    return mask


def free_cells(mask: np.ndarray, h: float, radius: float) -> np.ndarray:
    """Cells whose distance to every obstacle cell exceeds ``radius``."""
    dist = ndimage.distance_transform_edt(~mask) * h
    return dist > radius


def _component_of(labels: np.ndarray, free: np.ndarray, grid: Grid, p, snap: float) -> int:
    i, j = grid.index(p)
    if labels[i, j]:
        return int(labels[i, j])
    k = int(math.ceil(snap / grid.h))
    i0, i1 = max(i - k, 0), min(i + k + 1, grid.ny)
    j0, j1 = max(j - k, 0), min(j + k + 1, grid.nx)
    win = labels[i0:i1, j0:j1]
    ii, jj = np.nonzero(win)
    if len(ii) == 0:
        return 0
    d = (ii + i0 - i) ** 2 + (jj + j0 - j) ** 2
    best = int(np.argmin(d))
    if math.sqrt(d[best]) * grid.h > snap:
        return 0
    return int(win[ii[best], jj[best]])


def flood_fill_check(
    x,
    goal,
    radius: float,
    workspace,
    obstacles: Sequence = (),
    movables: Mapping[str, tuple] = {},
    h: float = RESOLUTION,
    snap: float = 0.05,
) -> OracleAnswer:
    """Grid version of the topology question for a disk of ``radius``.

    ``obstacles`` are fixed polygons, ``movables`` map ids to
    ``((cx, cy), rho)``.  The goal is feasible without blocking when it
    shares the robot's free component, feasible with blocking when it shares
    it only once the movables are removed, and infeasible otherwise.
    """
    bounds = workspace.bounds if hasattr(workspace, "bounds") else (
        *np.min(np.asarray(workspace), axis=0), *np.max(np.asarray(workspace), axis=0))
    grid = Grid(bounds, h)
    fixed = obstacle_mask(grid, workspace, obstacles)
    full = fixed.copy()
    for center, rho in movables.values():
        grid.rasterize_disk(full, center, rho)

    free_all = free_cells(full, h, radius)
    labels, _ = ndimage.label(free_all, structure=_FOUR)
    cx = _component_of(labels, free_all, grid, x, snap)
    if cx == 0:
        raise ValueError("the robot is not in the grid freespace")
    cg = _component_of(labels, free_all, grid, goal, h)
    if cg == cx:
        return OracleAnswer(True, False, True)

    free_fixed = free_cells(fixed, h, radius)
    labels_f, _ = ndimage.label(free_fixed, structure=_FOUR)
    fx = _component_of(labels_f, free_fixed, grid, x, snap)
    fg = _component_of(labels_f, free_fixed, grid, goal, h)
    if fx and fx == fg:
        return OracleAnswer(True, True, False)
    return OracleAnswer(False, False, False)


def scenario_oracle(scn, world=None, goals: Optional[Mapping[str, tuple]] = None, h: float = RESOLUTION) -> dict:
    """Oracle answers from the robot's pose to every region centroid (or the given goals).

    All familiar obstacles are treated as localized.
    """
    from .world import WorldState

    world = world or WorldState.initial(scn)
    if goals is None:
        goals = {k: (reg.centroid.x, reg.centroid.y) for k, reg in sorted(scn.regions.items())}
    movables = {k: (world.objects[k], scn.movables[k].radius) for k in sorted(world.objects) if k != world.carried}
    out = {}
    for name, g in goals.items():
        out[name] = flood_fill_check(world.position, g, scn.robot.radius, scn.workspace, scn.familiar_obstacles, movables, h)
    return out
