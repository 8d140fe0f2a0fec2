"""Reactive layer: sensing, local convex freespace, unicycle and pair control laws.

The controller drives towards the projection of a target point onto a
convex cell around the robot.  The cell is the sensor disk shrunk by the
body radius, cut by one half-plane per nearby obstacle primitive (a disk or
a boundary segment), each half-plane separating the body from the
obstacle's closest point.  Since consecutive positions stay inside the cell
the body never touches an obstacle.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

import numpy as np
import shapely

from . import geometry as geo
from .world import Params, Scenario, WorldState

CELL_SIDES = 64


class SingularJacobian(ValueError):
    pass


def wrap_angle(a: float) -> float:
    """Wrap to (-pi, pi]."""
    if -math.pi < a <= math.pi:
        return a
    a = math.fmod(a + math.pi, 2 * math.pi)
    if a <= 0:
        a += 2 * math.pi
    return a - math.pi


# ------------------------------------------------------------------ sensing


@dataclass(frozen=True)
class SensorReading:
    localized_familiar: frozenset
    unknown_fragments: tuple  # (index, (n, 2) array of boundary samples)
    range: float

    @property
    def sensed_unknown(self) -> frozenset:
        return frozenset(i for i, pts in self.unknown_fragments if len(pts))


def _boundary_samples(ob, step: float = 0.02) -> np.ndarray:
    if isinstance(ob, geo.Disk):
        n = max(32, int(math.ceil(2 * math.pi * ob.radius / step)))
        ang = np.arange(n) * (2 * math.pi / n)
        return np.column_stack([ob.center[0] + ob.radius * np.cos(ang), ob.center[1] + ob.radius * np.sin(ang)])
    ring = shapely.segmentize(ob.exterior, step)
    return np.asarray(ring.coords)[:-1, :2]


def sense(scn: Scenario, world: WorldState) -> SensorReading:
    """Familiar obstacles touching the range disk are localized whole; unknown ones yield fragments."""
    x = np.array(world.position)
    R = scn.robot.sensor_range
    here = shapely.Point(world.x, world.y)
    localized = set(world.localized)
    for i, ob in enumerate(scn.familiar_obstacles):
        if i not in localized and ob.distance(here) <= R:
            localized.add(i)
    frags = []
    for i, ob in enumerate(scn.unknown_obstacles):
        pts = _boundary_samples(ob)
        keep = pts[np.hypot(*(pts - x).T) <= R]
        frags.append((i, keep))
    return SensorReading(frozenset(localized), tuple(frags), R)


# ------------------------------------------------------------------ bodies


@dataclass(frozen=True)
class Body:
    """Disk used for planning: the robot alone or the circumscribed robot-object pair."""

    center: tuple
    radius: float
    offset: tuple = (0.0, 0.0)  # center in the robot frame


def pair_offsets(grasp_body: Sequence[float], robot_radius: float, obj_radius: float) -> tuple:
    """Center (robot frame) and radius of the smallest disk holding robot and object."""
    a, b = grasp_body
    dist = math.hypot(a, b)
    along = (dist + obj_radius - robot_radius) / 2
    return (a / dist * along, b / dist * along), (dist + obj_radius + robot_radius) / 2


def body_of(scn: Scenario, world: WorldState) -> Body:
    r = scn.robot.radius
    if world.carried is None:
        return Body(world.position, r)
    (c1, c2), rad = pair_offsets(world.grasp_body, r, scn.movables[world.carried].radius)
    c, s = math.cos(world.theta), math.sin(world.theta)
    return Body((world.x + c * c1 - s * c2, world.y + s * c1 + c * c2), rad, (c1, c2))


# ------------------------------------------------------------------ obstacle primitives


@dataclass(frozen=True)
class Primitives:
    segments: np.ndarray  # (n, 2, 2)
    disks: np.ndarray  # (m, 3): cx, cy, radius


def static_segments(scn: Scenario, familiar: Sequence[int], unknown: Sequence[int]) -> np.ndarray:
    polys = [scn.workspace] + [scn.familiar_obstacles[i] for i in familiar]
    polys += [scn.unknown_obstacles[i] for i in unknown if not isinstance(scn.unknown_obstacles[i], geo.Disk)]
    return geo.boundary_segments(polys)


def controller_primitives(scn: Scenario, world: WorldState, reading: SensorReading) -> Primitives:
    """Obstacles the controller knows about right now (the carried object excluded)."""
    unknown = sorted(reading.sensed_unknown)
    segs = static_segments(scn, sorted(reading.localized_familiar), unknown)
    disks = [(*scn.unknown_obstacles[i].center, scn.unknown_obstacles[i].radius) for i in unknown if isinstance(scn.unknown_obstacles[i], geo.Disk)]
    disks += [(*world.objects[k], scn.movables[k].radius) for k in sorted(world.objects) if k != world.carried]
    return Primitives(segs, np.array(disks, dtype=float).reshape(-1, 3))


def closest_on_segments(p: np.ndarray, segs: np.ndarray) -> tuple:
    """Closest points on each segment and their distances to ``p``."""
    if len(segs) == 0:
        return np.zeros((0, 2)), np.zeros(0)
    a, b = segs[:, 0], segs[:, 1]
    ab = b - a
    den = np.einsum("ij,ij->i", ab, ab)
    t = np.clip(np.einsum("ij,ij->i", p - a, ab) / np.where(den > 0, den, 1.0), 0.0, 1.0)
    c = a + t[:, None] * ab
    return c, np.hypot(*(p - c).T)


def closest_on_disks(p: np.ndarray, disks: np.ndarray) -> tuple:
    """Closest boundary points of each disk and the (signed) gap to ``p``."""
    if len(disks) == 0:
        return np.zeros((0, 2)), np.zeros(0)
    d = p - disks[:, :2]
    n = np.hypot(*d.T)
    u = d / np.where(n > 0, n, 1.0)[:, None]
    return disks[:, :2] + u * disks[:, 2:3], n - disks[:, 2]


# ------------------------------------------------------------------ local convex cell


def _clip(poly: np.ndarray, normal: np.ndarray, offset: float) -> np.ndarray:
    """Sutherland-Hodgman clip of a convex polygon by ``normal . y >= offset``."""
    if len(poly) == 0:
        return poly
    vals = poly @ normal - offset
    if vals.min() >= 0:
        return poly
    out = []
    n = len(poly)
    for i in range(n):
        a, b = poly[i], poly[(i + 1) % n]
        va, vb = vals[i], vals[(i + 1) % n]
        if va >= 0:
            out.append(a)
        if (va >= 0) != (vb >= 0):
            t = va / (va - vb)
            out.append(a + t * (b - a))
    return np.array(out).reshape(-1, 2)


def local_cell(center, radius: float, prims: Primitives, sensor_range: float, margin: float) -> np.ndarray:
    """Convex polygon of safe body-center positions near ``center``."""
    p = np.asarray(center, dtype=float)
    reach = max(sensor_range - radius, 1e-3)
    ang = np.arange(CELL_SIDES) * (2 * math.pi / CELL_SIDES)
    cell = p + reach * np.column_stack([np.cos(ang), np.sin(ang)])
    pts, gaps = [], []
    c, d = closest_on_segments(p, prims.segments)
    pts.append(c)
    gaps.append(d)
    c, d = closest_on_disks(p, prims.disks)
    pts.append(c)
    gaps.append(d)
    pts, gaps = np.concatenate(pts), np.concatenate(gaps)
    for q, gap in zip(pts, gaps):
        if gap > sensor_range or gap <= 0:
            continue
        normal = (p - q) / gap
        off = min(radius + margin, gap)
        cell = _clip(cell, normal, normal @ q + off)
    if len(cell) < 3:
        return np.array([p])
    return cell


def project(cell: np.ndarray, target) -> np.ndarray:
    """Euclidean projection of ``target`` onto a convex CCW polygon."""
    t = np.asarray(target, dtype=float)
    if len(cell) < 3:
        return cell[0].copy()
    a = cell
    b = np.roll(cell, -1, axis=0)
    e = b - a
    cross = e[:, 0] * (t[1] - a[:, 1]) - e[:, 1] * (t[0] - a[:, 0])
    if np.all(cross >= -1e-12):
        return t
    c, d = closest_on_segments(t, np.stack([a, b], axis=1))
    return c[int(np.argmin(d))]


def chord(cell: np.ndarray, p, h) -> tuple:
    """Range ``[s_lo, s_hi]`` such that ``p + s h`` stays in the cell."""
    if len(cell) < 3:
        return 0.0, 0.0
    p = np.asarray(p, dtype=float)
    a = cell
    e = np.roll(cell, -1, axis=0) - a
    n = np.column_stack([-e[:, 1], e[:, 0]])  # inward for CCW
    base = np.einsum("ij,ij->i", n, p - a)
    rate = n @ np.asarray(h)
    lo, hi = -math.inf, math.inf
    for b0, r in zip(base, rate):
        if abs(r) < 1e-15:
            continue
        s = -b0 / r
        if r > 0:
            lo = max(lo, s)
        else:
            hi = min(hi, s)
    return min(lo, 0.0), max(hi, 0.0)


# ------------------------------------------------------------------ control laws


def unicycle_command(pos, theta: float, target, cell: np.ndarray, params: Params) -> tuple:
    """Pursuit of ``target`` through the cell; returns (v, omega) within the caps."""
    p = np.asarray(pos, dtype=float)
    h = np.array([math.cos(theta), math.sin(theta)])
    lo, hi = chord(cell, p, h)
    v = params.k_v * float(np.clip(h @ (np.asarray(target) - p), lo, hi))
    e = project(cell, target) - p
    omega = 0.0
    if math.hypot(*e) > 1e-9:
        err = math.atan2(-h[1] * e[0] + h[0] * e[1], h @ e)
        # steer the heading line, driving backwards when the target is behind
        if err > math.pi / 2:
            err -= math.pi
        elif err <= -math.pi / 2:
            err += math.pi
        omega = params.k_theta * err
    return (float(np.clip(v, -params.v_max, params.v_max)), float(np.clip(omega, -params.omega_max, params.omega_max)))


def grasp_jacobian(theta: float, d_c: float, lateral: float = 0.0) -> np.ndarray:
    """Map from (v, omega) to the velocity of a point fixed ``(d_c, lateral)`` in the robot frame."""
    if d_c == 0:
        raise SingularJacobian("contact offset must be non-zero")
    c, s = math.cos(theta), math.sin(theta)
    return np.array([[c, -d_c * s - lateral * c], [s, d_c * c - lateral * s]])


def pair_input(theta: float, d_c: float, v_hat, lateral: float = 0.0) -> np.ndarray:
    """Unicycle input realising the pair-center velocity ``v_hat``."""
    return np.linalg.solve(grasp_jacobian(theta, d_c, lateral), np.asarray(v_hat, dtype=float))


def pair_command(body: Body, theta: float, target, cell: np.ndarray, params: Params) -> tuple:
    """Fully actuated move-to-projected-goal for the pair center, mapped to (v, omega)."""
    c = np.asarray(body.center)
    v_hat = params.k_v * (project(cell, target) - c)
    u = pair_input(theta, body.offset[0], v_hat, body.offset[1])
    scale = max(1.0, abs(u[0]) / params.v_max, abs(u[1]) / params.omega_max)
    return (float(u[0] / scale), float(u[1] / scale))


def align_command(world: WorldState, point, params: Params) -> tuple:
    err = wrap_angle(math.atan2(point[1] - world.y, point[0] - world.x) - world.theta)
    return (0.0, float(np.clip(params.k_theta * err, -params.omega_max, params.omega_max))), err


# ------------------------------------------------------------------ clearance


class ClearanceAudit:
    """Smallest gap between the robot (and carried object) and any obstacle or other object.

    All obstacles count, sensed or not; negative values mean overlap.
    """

    def __init__(self, scn: Scenario):
        self.scn = scn
        self.segments = static_segments(scn, range(len(scn.familiar_obstacles)), range(len(scn.unknown_obstacles)))
        self.solids = list(scn.familiar_obstacles) + [u for u in scn.unknown_obstacles if not isinstance(u, geo.Disk)]
        self.fixed_disks = [(*d.center, d.radius) for d in scn.unknown_obstacles if isinstance(d, geo.Disk)]

    def __call__(self, world: WorldState) -> float:
        scn = self.scn
        bodies = [(world.position, scn.robot.radius)]
        if world.carried is not None:
            bodies.append((world.objects[world.carried], scn.movables[world.carried].radius))
        disks = self.fixed_disks + [
            (*world.objects[k], scn.movables[k].radius) for k in sorted(world.objects) if k != world.carried
        ]
        disks = np.array(disks, dtype=float).reshape(-1, 3)
        best = math.inf
        for c, rad in bodies:
            p = np.asarray(c, dtype=float)
            _, d = closest_on_segments(p, self.segments)
            if len(d):
                best = min(best, float(d.min()) - rad)
            inside = any(shapely.contains_xy(s, p[0], p[1]) for s in self.solids)
            if inside or not shapely.covers(scn.workspace, shapely.Point(*p)):
                best = min(best, -rad)
            _, g = closest_on_disks(p, disks)
            if len(g):
                best = min(best, float(g.min()) - rad)
        return best


def physical_clearance(scn: Scenario, world: WorldState) -> float:
    return ClearanceAudit(scn)(world)


# ------------------------------------------------------------------ stuck detection


@dataclass
class StuckMonitor:
    window: float
    eps: float
    history: deque = field(default_factory=deque)

    def reset(self) -> None:
        self.history.clear()

    def update(self, t: float, pos) -> bool:
        self.history.append((t, pos))
        while len(self.history) > 1 and self.history[1][0] <= t - self.window + 1e-9:
            self.history.popleft()
        t0, p0 = self.history[0]
        return t - t0 >= self.window - 1e-9 and math.hypot(pos[0] - p0[0], pos[1] - p0[1]) < self.eps


# ------------------------------------------------------------------ kinematics


def _unicycle_rate(state: np.ndarray, u) -> np.ndarray:
    return np.array([u[0] * math.cos(state[2]), u[0] * math.sin(state[2]), u[1]])


def integrate_unicycle(pose, u, dt: float) -> tuple:
    """One classical Runge-Kutta step of the unicycle with constant input ``u``."""
    s = np.asarray(pose, dtype=float)
    k1 = _unicycle_rate(s, u)
    k2 = _unicycle_rate(s + dt / 2 * k1, u)
    k3 = _unicycle_rate(s + dt / 2 * k2, u)
    k4 = _unicycle_rate(s + dt * k3, u)
    out = s + dt / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
    return (float(out[0]), float(out[1]), wrap_angle(float(out[2])))


def apply_motion(world: WorldState, u, dt: float) -> None:
    """Integrate the robot and drag the carried object rigidly along."""
    world.x, world.y, world.theta = integrate_unicycle((world.x, world.y, world.theta), u, dt)
    if world.carried is not None:
        world.objects[world.carried] = world.carried_center()


def engage(world: WorldState, obj: str) -> None:
    cx, cy = world.objects[obj]
    dx, dy = cx - world.x, cy - world.y
    c, s = math.cos(world.theta), math.sin(world.theta)
    world.grasp_body = (c * dx + s * dy, -s * dx + c * dy)
    world.gripper = 1
    world.carried = obj


def disengage(world: WorldState) -> Optional[str]:
    obj = world.carried
    world.gripper = 0
    world.carried = None
    world.grasp_body = None
    return obj


# ------------------------------------------------------------------ action execution


@dataclass(frozen=True)
class ActionOutcome:
    kind: str  # achieved | infeasible | fix
    reason: str = ""
    blocking: tuple = ()

    @classmethod
    def achieved(cls) -> "ActionOutcome":
        return cls("achieved")

    @classmethod
    def infeasible(cls, reason: str) -> "ActionOutcome":
        return cls("infeasible", reason)

    @classmethod
    def fix(cls, blocking) -> "ActionOutcome":
        return cls("fix", "", tuple(blocking))


class Grounding:
    """Per-scenario caches shared by successive action executions."""

    def __init__(self, scn: Scenario):
        from .interface import WorldTopology

        self.scn = scn
        self.topology = WorldTopology(scn)
        self._planners: dict = {}
        self._spaces: dict = {}

    def planner(self, freespace, goal):
        from .paths import VisibilityPlanner

        key = (freespace.wkb, round(goal[0], 9), round(goal[1], 9))
        hit = self._planners.get(key)
        if hit is None:
            if len(self._planners) > 32:
                self._planners.clear()
            hit = self._planners[key] = VisibilityPlanner(freespace, goal)
        return hit

    def planning_space(self, freespace, world: WorldState, center, radius: float, goal):
        """``freespace`` minus the sensed unknown obstacles, when the goal stays reachable.

        The topology check ignores unknown obstacles; the waypoint planner
        should not, or the robot can stall against a flat face.
        """
        if not world.sensed_unknown:
            return freespace
        key = (freespace.wkb, frozenset(world.sensed_unknown), round(radius, 9))
        if key not in self._spaces:
            if len(self._spaces) > 64:
                self._spaces.clear()
            shapes = [geo.dilate(self.scn.unknown_obstacles[i], radius) for i in sorted(world.sensed_unknown)]
            self._spaces[key] = geo.components(freespace.difference(geo.union_all(shapes)))
        comps = self._spaces[key]
        from .topology import locate

        k = locate(comps, center)
        if k is None or not geo.contains(comps[k], goal):
            return freespace
        return comps[k]

    def known_fixed(self, world: WorldState) -> list:
        scn = self.scn
        out = [scn.familiar_obstacles[i] for i in sorted(world.localized)]
        for i in sorted(world.sensed_unknown):
            ob = scn.unknown_obstacles[i]
            out.append(shapely.Point(ob.center).buffer(ob.radius, quad_segs=16) if isinstance(ob, geo.Disk) else ob)
        return out


class ActionExecution:
    """Tick-by-tick execution of one grounded action.

    Each :meth:`step` senses nothing itself; it takes the current reading,
    checks the topology towards the goal, and returns the velocity command
    or the outcome that ends the action.
    """

    def __init__(self, action, scn: Scenario, grounding: Grounding, pool: Sequence[str] = ()):
        self.action = action
        self.scn = scn
        self.g = grounding
        self.pool = tuple(pool)
        self.phase = "start"
        self.command = None
        p = scn.params
        self.monitor = StuckMonitor(p.stuck_window, p.eps_stuck)

    def _start(self, world: WorldState) -> Optional[ActionOutcome]:
        from .interface import ActionType, InterfaceError, NoFreeBoundary, action_to_command, grasp_point, NavCommand

        a, scn = self.action, self.scn
        if a.kind is ActionType.GRASP and world.carried is not None:
            return ActionOutcome.infeasible(f"already carrying {world.carried}")
        if a.kind in (ActionType.RELEASE, ActionType.DISASSEMBLE) and world.carried != a.obj:
            return ActionOutcome.infeasible(f"not carrying {a.obj}")
        body = body_of(scn, world)
        topo = self.g.topology
        try:
            if a.kind is ActionType.GRASP:
                F = topo.robot_component(world, body.center, body.radius)
                try:
                    goal = grasp_point(a.obj, world, scn, F)
                except NoFreeBoundary:
                    anywhere = geo.union_all(topo.free_components(world, body.radius))
                    goal = grasp_point(a.obj, world, scn, anywhere)
                self.command = NavCommand(goal, 0)
            elif a.kind is ActionType.DISASSEMBLE:
                F = topo.robot_component(world, body.center, body.radius)
                if F is None:
                    self.command = NavCommand(body.center, 1, a.obj)
                else:
                    self.command = action_to_command(a, world, scn, F)
            else:
                self.command = action_to_command(a, world, scn)
        except NoFreeBoundary as exc:
            return ActionOutcome.infeasible(str(exc))
        except InterfaceError as exc:
            return ActionOutcome.infeasible(str(exc))
        self.phase = "navigate"
        self.monitor.reset()
        return None

    def step(self, world: WorldState, reading: SensorReading, t: float) -> tuple:
        from .interface import ActionType, separation_reached
        from .topology import TopologyError

        a, scn, p = self.action, self.scn, self.scn.params
        if self.phase == "start":
            out = self._start(world)
            if out is not None:
                return (0.0, 0.0), out
        if self.phase == "align":
            u, err = align_command(world, world.objects[a.obj], p)
            if abs(err) < p.align_tol:
                engage(world, a.obj)
                return (0.0, 0.0), ActionOutcome.achieved()
            return u, None

        body = body_of(scn, world)
        goal = self.command.goal
        F = None
        if a.kind is ActionType.DISASSEMBLE:
            if separation_reached(world, scn, body.center, self.g.known_fixed(world), self.pool + (a.obj,)):
                disengage(world)
                return (0.0, 0.0), ActionOutcome.achieved()
            try:
                res = self.g.topology.check(world, body.center, body.radius, goal)
                F = res.freespace
            except TopologyError:
                res = F = None
            if res is not None and not res.goal_in_freespace:
                # newly localized obstacles cut the old target off
                from .interface import disassemble_target

                goal = disassemble_target(world, scn, F, a.obj)
                self.command = replace(self.command, goal=goal)
        else:
            try:
                res = self.g.topology.check(world, body.center, body.radius, goal)
            except TopologyError as exc:
                return (0.0, 0.0), ActionOutcome.infeasible(str(exc))
            if not res.is_feasible:
                return (0.0, 0.0), ActionOutcome.infeasible("goal blocked by fixed obstacles")
            if res.blocking:
                return (0.0, 0.0), ActionOutcome.fix(res.blocking)
            F = res.freespace

        if math.hypot(goal[0] - body.center[0], goal[1] - body.center[1]) < p.delta_goal:
            if a.kind is ActionType.GRASP:
                self.phase = "align"
                return self.step(world, reading, t)
            if a.kind in (ActionType.RELEASE, ActionType.DISASSEMBLE):
                disengage(world)
            return (0.0, 0.0), ActionOutcome.achieved()

        target = goal
        if F is not None and not F.is_empty:
            space = self.g.planning_space(F, world, body.center, body.radius, goal)
            target = self.g.planner(space, goal).carrot(body.center, p.lookahead)
        prims = controller_primitives(scn, world, reading)
        cell = local_cell(body.center, body.radius, prims, scn.robot.sensor_range, p.margin)
        if world.carried is None:
            u = unicycle_command(body.center, world.theta, target, cell, p)
        else:
            u = pair_command(body, world.theta, target, cell, p)
        if self.monitor.update(t, body.center):
            return (0.0, 0.0), ActionOutcome.infeasible("stuck")
        return u, None


def execute_action(action, scn: Scenario, world: WorldState, t_max: float = 120.0, pool: Sequence[str] = (), grounding=None) -> tuple:
    """Run one action to completion on ``world`` (mutated); returns (outcome, poses)."""
    g = grounding or Grounding(scn)
    ex = ActionExecution(action, scn, g, pool)
    dt = scn.params.dt
    t = 0.0
    poses = [(world.x, world.y, world.theta)]
    while t < t_max:
        reading = sense(scn, world)
        world.localized |= reading.localized_familiar
        world.sensed_unknown |= reading.sensed_unknown
        u, out = ex.step(world, reading, t)
        if out is not None:
            return out, poses
        apply_motion(world, u, dt)
        t = round(t + dt, 9)
        poses.append((world.x, world.y, world.theta))
    return ActionOutcome.infeasible("time limit"), poses
