"""Grounding of symbolic actions and the LTL/Fix mode switch.

Symbols become actions, actions become navigation goals plus a gripper
bit.  When the topology check reports blocking objects the interface
suspends the symbolic action, clears the blockers one by one (grasp, then
disassemble) and finally resumes, re-grasping a carried object if needed.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field, replace
from typing import Mapping, Optional, Sequence

import numpy as np
from shapely.geometry import Point

from . import geometry as geo
from .ltl.syntax import ActionKind, Predicate
from .topology import SNAP_TOL, TopologyResult, locate, topology_check
from .world import Scenario, WorldState


class InterfaceError(ValueError):
    pass


class UnknownEntity(InterfaceError):
    pass


class NoFreeBoundary(InterfaceError):
    """Every grasp location around the object is in collision."""


class ActionType(enum.Enum):
    MOVE = "Move"
    GRASP = "Grasp"
    RELEASE = "Release"
    DISASSEMBLE = "Disassemble"


@dataclass(frozen=True)
class Action:
    kind: ActionType
    obj: Optional[str] = None
    region: Optional[str] = None

    def __str__(self) -> str:
        args = [a for a in (self.obj, self.region) if a is not None]
        return f"{self.kind.value}({','.join(args)})"


@dataclass(frozen=True)
class NavCommand:
    goal: tuple
    gripper: int
    carried_object: Optional[str] = None

    def __post_init__(self):
        if self.gripper == 1 and self.carried_object is None:
            raise InterfaceError("an engaged gripper needs a carried object")


def predicate_to_action(p: Predicate) -> Action:
    kind = {ActionKind.MOVE: ActionType.MOVE, ActionKind.GRASP: ActionType.GRASP, ActionKind.RELEASE: ActionType.RELEASE}
    return Action(kind[p.kind], p.obj, p.region)


def symbol_to_action(sym: frozenset) -> Optional[Action]:
    """The action realising a feasible symbol; ``None`` for the empty symbol."""
    if not sym:
        return None
    if len(sym) > 1:
        raise InterfaceError("only feasible (singleton) symbols map to actions")
    return predicate_to_action(next(iter(sym)))


def action_to_predicate(a: Action) -> Optional[Predicate]:
    if a.kind is ActionType.MOVE:
        return Predicate.move(a.region)
    if a.kind is ActionType.GRASP:
        return Predicate.grasp(a.obj)
    if a.kind is ActionType.RELEASE:
        return Predicate.release(a.obj, a.region)
    return None


def _region(scn: Scenario, name: str):
    try:
        return scn.regions[name]
    except KeyError:
        raise UnknownEntity(f"unknown region {name!r}") from None


def _object(scn: Scenario, name: str):
    if name not in scn.movables:
        raise UnknownEntity(f"unknown object {name!r}")
    return scn.movables[name]


def grasp_candidates(center, radius: float, n: int) -> np.ndarray:
    ang = np.arange(n) * (2 * math.pi / n)
    return np.column_stack([center[0] + radius * np.cos(ang), center[1] + radius * np.sin(ang)])


def grasp_point(obj: str, world: WorldState, scn: Scenario, freespace) -> tuple:
    """Nearest collision-free standoff point around ``obj`` inside ``freespace``."""
    disk = _object(scn, obj)
    c = world.objects[obj]
    pts = grasp_candidates(c, disk.radius + scn.robot.radius + scn.params.grasp_gap, scn.params.grasp_candidates)
    ok = [p for p in pts if geo.contains(freespace, p)]
    if not ok:
        raise NoFreeBoundary(f"no free grasp location around {obj}")
    here = np.array(world.position)
    best = min(range(len(ok)), key=lambda i: (round(float(np.hypot(*(ok[i] - here))), 12), i))
    return (float(ok[best][0]), float(ok[best][1]))


def _pair_radius(world: WorldState, scn: Scenario) -> float:
    if world.carried is None or world.grasp_body is None:
        return scn.robot.radius
    dist = math.hypot(*world.grasp_body)
    return (dist + scn.movables[world.carried].radius + scn.robot.radius) / 2


def disassemble_target(world: WorldState, scn: Scenario, freespace, skip: str) -> tuple:
    """Midpoint of the freespace boundary edge farthest from other objects and from all regions.

    Edges whose inward neighbourhood never gets clear of the obstacles
    (pinches between two dilated obstacles, say) are skipped while any
    other edge remains: pushing there could not satisfy the separation test.
    """
    segs = geo.boundary_segments(freespace)
    if len(segs) == 0:
        raise InterfaceError("freespace has no boundary")
    mids = segs.mean(axis=1)
    along = segs[:, 1] - segs[:, 0]
    length = np.hypot(*along.T)
    normals = np.column_stack([-along[:, 1], along[:, 0]]) / np.where(length > 0, length, 1.0)[:, None]
    rho = max([scn.movables[k].radius for k in scn.movables if k != skip] + [scn.movables[skip].radius])
    depth = max(2 * (scn.robot.radius + rho) - _pair_radius(world, scn), 1e-3)
    probes = np.empty_like(mids)
    clear = np.zeros(len(mids), dtype=bool)
    edge = freespace.boundary
    for i, (m, n) in enumerate(zip(mids, normals)):
        side = 1.0 if geo.contains(freespace, m + 1e-4 * n) else -1.0
        q = m + side * depth * n
        probes[i] = q
        clear[i] = geo.contains(freespace, q) and edge.distance(Point(q)) >= depth - 1e-6
    pts = probes if clear.any() else mids
    score = np.full(len(mids), np.inf)
    for k in sorted(world.objects):
        if k == skip:
            continue
        c = np.asarray(world.objects[k])
        score = np.minimum(score, np.hypot(*(pts - c).T) - scn.movables[k].radius)
    for name in sorted(scn.regions):
        reg = scn.regions[name]
        d = np.array([reg.distance(Point(m)) for m in pts])
        score = np.minimum(score, d)
    if clear.any():
        score = np.where(clear, score, -np.inf)
    best = int(np.argmax(score))
    return (float(mids[best][0]), float(mids[best][1]))


def action_to_command(a: Action, world: WorldState, scn: Scenario, freespace=None) -> NavCommand:
    """Navigation goal and gripper bit for an action."""
    if a.kind is ActionType.MOVE:
        return NavCommand(geo.centroid(_region(scn, a.region)), 0)
    if a.kind is ActionType.RELEASE:
        _object(scn, a.obj)
        return NavCommand(geo.centroid(_region(scn, a.region)), 1, a.obj)
    if freespace is None:
        raise InterfaceError(f"{a} needs the current freespace")
    if a.kind is ActionType.GRASP:
        return NavCommand(grasp_point(a.obj, world, scn, freespace), 0)
    _object(scn, a.obj)
    return NavCommand(disassemble_target(world, scn, freespace, a.obj), 1, a.obj)


def separation_reached(world: WorldState, scn: Scenario, pair_center, fixed_obstacles: Sequence, radii_pool: Sequence[str]) -> bool:
    """Stop test for disassembly: pair out of every region and well away from everything else.

    ``fixed_obstacles`` lists the fixed obstacle geometries known to the
    robot; ``radii_pool`` the objects whose radii bound the required gap.
    """
    p = Point(pair_center)
    for reg in scn.regions.values():
        if reg.covers(p):
            return False
    rho = max([scn.movables[k].radius for k in radii_pool] or [0.0])
    need = 2 * (scn.robot.radius + rho)
    for k, c in world.objects.items():
        if k == world.carried:
            continue
        if math.hypot(c[0] - pair_center[0], c[1] - pair_center[1]) - scn.movables[k].radius < need:
            return False
    return all(ob.distance(p) >= need for ob in fixed_obstacles)


# ------------------------------------------------------------------ mode switching


@dataclass(frozen=True)
class Suspended:
    action: Optional[Action]
    carried: Optional[str]


@dataclass(frozen=True)
class ModeState:
    mode: str = "ltl"
    stack: tuple = ()  # top of the stack is the last element
    suspended: Optional[Suspended] = None
    active: Optional[str] = None
    phase: Optional[str] = None  # grasp | disassemble | regrasp

    def __post_init__(self):
        if self.mode not in ("ltl", "fix"):
            raise ValueError(f"unknown mode {self.mode!r}")
        if self.mode == "ltl" and (self.stack or self.suspended or self.active):
            raise ValueError("LTL mode carries no fix bookkeeping")


@dataclass(frozen=True)
class ModeStep:
    state: ModeState
    action: Optional[Action]
    lines: tuple = ()
    failed: Optional[Action] = None  # suspended action to report infeasible
    drop: bool = False  # release whatever is carried before continuing


def _next_blocker(m: ModeState, lines: list) -> ModeStep:
    top = m.stack[-1]
    st = replace(m, active=top, phase="grasp")
    return ModeStep(st, Action(ActionType.GRASP, top), tuple(lines))


def _finish(m: ModeState, lines: list) -> ModeStep:
    if m.stack:
        return _next_blocker(m, lines)
    sus = m.suspended
    if sus is not None and sus.carried is not None and m.phase != "regrasp":
        lines.append(f"REGRASP obj={sus.carried}")
        st = replace(m, active=sus.carried, phase="regrasp")
        return ModeStep(st, Action(ActionType.GRASP, sus.carried), tuple(lines))
    lines.append("MODE ltl")
    return ModeStep(ModeState(), sus.action if sus else None, tuple(lines))


def mode_step(
    m: ModeState,
    *,
    pending: Optional[Action] = None,
    carrying: Optional[str] = None,
    blocking: Sequence[str] = (),
    outcome: Optional[str] = None,
) -> ModeStep:
    """Advance the mode machine.

    ``blocking`` is the stack reported by the topology check (bottom first);
    ``outcome`` is ``"achieved"`` or ``"infeasible"`` for the action just run
    in Fix mode.
    """
    lines: list = []
    if m.mode == "ltl":
        if not blocking:
            return ModeStep(m, pending)
        lines.append("MODE fix")
        lines += [f"FIX push obj={k}" for k in blocking]
        st = ModeState("fix", tuple(blocking), Suspended(pending, carrying))
        if carrying is not None:
            st = replace(st, active=carrying, phase="disassemble")
            return ModeStep(st, Action(ActionType.DISASSEMBLE, carrying), tuple(lines))
        return _next_blocker(st, lines)

    if outcome == "infeasible":
        lines.append("MODE ltl")
        failed = m.suspended.action if m.suspended else None
        return ModeStep(ModeState(), None, tuple(lines), failed=failed, drop=carrying is not None)

    if blocking:
        new = [k for k in blocking if k not in m.stack and k != m.active and k != carrying]
        lines += [f"FIX push obj={k}" for k in new]
        st = replace(m, stack=m.stack + tuple(new))
        if m.phase == "disassemble" or not new:
            act = Action(ActionType.DISASSEMBLE, m.active) if m.phase == "disassemble" else Action(ActionType.GRASP, m.active)
            return ModeStep(st, act, tuple(lines))
        return _next_blocker(st, lines)

    if outcome == "achieved":
        if m.phase == "grasp":
            st = replace(m, phase="disassemble")
            return ModeStep(st, Action(ActionType.DISASSEMBLE, m.active), tuple(lines))
        if m.phase == "disassemble":
            lines.append(f"FIX done obj={m.active}")
            st = replace(m, stack=tuple(k for k in m.stack if k != m.active), active=None, phase="done")
            return _finish(st, lines)
        if m.phase == "regrasp":
            return _finish(m, lines)
    # nothing happened: keep the current Fix action
    act = None
    if m.phase in ("grasp", "regrasp"):
        act = Action(ActionType.GRASP, m.active)
    elif m.phase == "disassemble":
        act = Action(ActionType.DISASSEMBLE, m.active)
    return ModeStep(m, act, tuple(lines))


# ------------------------------------------------------------------ topology inputs


class WorldTopology:
    """Builds (and caches) the topology-check inputs for the current world."""

    def __init__(self, scn: Scenario):
        self.scn = scn
        self._base: dict = {}
        self._familiar: dict = {}
        self._results: dict = {}
        hull = scn.workspace.convex_hull
        self._outside = geo.polygons_of(hull.difference(scn.workspace))

    def base(self, radius: float) -> tuple:
        key = round(radius, 9)
        if key not in self._base:
            hull = geo.convex_hull(geo.erode(self.scn.workspace.convex_hull, radius))
            extra = [geo.dilate(p, radius) for p in self._outside]
            self._base[key] = (hull, extra)
        return self._base[key]

    def familiar(self, i: int, radius: float):
        key = (i, round(radius, 9))
        if key not in self._familiar:
            self._familiar[key] = geo.dilate(self.scn.familiar_obstacles[i], radius)
        return self._familiar[key]

    def inputs(self, world: WorldState, radius: float, localized: Optional[Sequence[int]] = None) -> tuple:
        """(enclosing freespace, dilated movables, dilated localized obstacles) for a body of ``radius``."""
        enclosing, extra = self.base(radius)
        loc = sorted(world.localized if localized is None else localized)
        obstacles = extra + [self.familiar(i, radius) for i in loc]
        movables = {
            k: geo.dilate(geo.Disk(world.objects[k], self.scn.movables[k].radius), radius)
            for k in sorted(world.objects)
            if k != world.carried
        }
        return enclosing, movables, obstacles

    def check(self, world: WorldState, center, radius: float, goal) -> TopologyResult:
        key = (
            frozenset(world.localized),
            tuple((k, round(c[0], 9), round(c[1], 9)) for k, c in sorted(world.objects.items()) if k != world.carried),
            world.carried,
            round(radius, 6),
            (round(goal[0], 9), round(goal[1], 9)),
        )
        hit = self._results.get(key)
        if hit is not None and geo.distance(hit.freespace, center) <= SNAP_TOL / 2:
            return hit
        res = topology_check(center, goal, *self.inputs(world, radius))
        if len(self._results) > 256:
            self._results.clear()
        self._results[key] = res
        return res

    def free_components(self, world: WorldState, radius: float) -> list:
        enclosing, movables, obstacles = self.inputs(world, radius)
        blocked = geo.union_all(list(movables.values()) + obstacles)
        return geo.components(enclosing.difference(blocked))

    def robot_component(self, world: WorldState, center, radius: float):
        comps = self.free_components(world, radius)
        k = locate(comps, center)
        return comps[k] if k is not None else None
