"""Scenario description, parameters and the mutable world state."""

from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass, field, fields, replace
from pathlib import Path
from typing import Mapping, Optional

import jsonschema
from shapely.geometry import Point, Polygon

from . import geometry as geo

log = logging.getLogger(__name__)


class ScenarioError(ValueError):
    """Schema or invariant violation in a scenario description."""

    def __init__(self, problems):
        self.problems = list(problems) if not isinstance(problems, str) else [problems]
        super().__init__("; ".join(self.problems))


@dataclass(frozen=True)
class Params:
    v_max: float = 1.0
    omega_max: float = 2.0
    k_v: float = 1.0
    k_theta: float = 2.0
    delta_goal: float = 0.05
    eps_stuck: float = 0.01
    stuck_window: float = 5.0
    dt: float = 0.01
    t_max: float = 600.0
    grasp_gap: float = 0.02
    align_tol: float = 0.05
    margin: float = 2e-3
    lookahead: float = 0.5
    grasp_candidates: int = 32

    @classmethod
    def from_dict(cls, d: Mapping) -> "Params":
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ScenarioError([f"/params: unknown parameter(s) {sorted(unknown)}"])
        return cls(**{k: float(v) if k != "grasp_candidates" else int(v) for k, v in d.items()})


@dataclass(frozen=True)
class RobotSpec:
    start: tuple  # (x, y, theta)
    radius: float
    sensor_range: float


@dataclass(frozen=True)
class Scenario:
    workspace: Polygon
    regions: Mapping[str, Polygon]
    movables: Mapping[str, geo.Disk]
    familiar_obstacles: tuple
    unknown_obstacles: tuple  # Disk or convex Polygon
    robot: RobotSpec
    params: Params = field(default_factory=Params)
    name: str = ""

    @property
    def familiar_ids(self) -> list:
        return [f"f{i}" for i in range(len(self.familiar_obstacles))]

    def with_params(self, **kw) -> "Scenario":
        return replace(self, params=replace(self.params, **kw))


_POINT = {"type": "array", "items": {"type": "number"}, "minItems": 2, "maxItems": 2}
_RING = {"type": "array", "items": _POINT, "minItems": 3}
_POLY = {"oneOf": [_RING, {"type": "array", "items": _RING, "minItems": 1}]}
_DISK = {
    "type": "object",
    "properties": {"center": _POINT, "radius": {"type": "number", "exclusiveMinimum": 0}},
    "required": ["center", "radius"],
    "additionalProperties": False,
}

SCENARIO_SCHEMA = {
    "type": "object",
    "properties": {
        "name": {"type": "string"},
        "workspace": _POLY,
        "regions": {"type": "object", "additionalProperties": _POLY},
        "movables": {"type": "object", "additionalProperties": _DISK},
        "familiar_obstacles": {"type": "array", "items": _POLY},
        "unknown_obstacles": {
            "type": "array",
            "items": {
                "oneOf": [
                    {"type": "object", "properties": {"disk": _DISK}, "required": ["disk"], "additionalProperties": False},
                    {"type": "object", "properties": {"polygon": _POLY}, "required": ["polygon"], "additionalProperties": False},
                ]
            },
        },
        "robot": {
            "type": "object",
            "properties": {
                "start": {"type": "array", "items": {"type": "number"}, "minItems": 3, "maxItems": 3},
                "radius": {"type": "number", "exclusiveMinimum": 0},
                "sensor_range": {"type": "number", "exclusiveMinimum": 0},
            },
            "required": ["start", "radius", "sensor_range"],
            "additionalProperties": False,
        },
        "params": {"type": "object", "additionalProperties": {"type": "number"}},
    },
    "required": ["workspace", "robot"],
    "additionalProperties": False,
}


def _pointer(path) -> str:
    return "/" + "/".join(str(p) for p in path)


def scenario_from_dict(doc: Mapping) -> Scenario:
    errors = sorted(jsonschema.Draft202012Validator(SCENARIO_SCHEMA).iter_errors(doc), key=lambda e: list(e.absolute_path))
    if errors:
        raise ScenarioError([f"{_pointer(e.absolute_path)}: {e.message}" for e in errors])
    problems = []

    def poly(data, where):
        try:
            return geo.polygon_from_json(data)
        except geo.DegenerateGeometry as exc:
            problems.append(f"{where}: {exc}")
            return None

    workspace = poly(doc["workspace"], "/workspace")
    regions = {k: poly(v, f"/regions/{k}") for k, v in sorted(doc.get("regions", {}).items())}
    movables = {
        k: geo.Disk(tuple(v["center"]), float(v["radius"])) for k, v in sorted(doc.get("movables", {}).items())
    }
    familiar = tuple(poly(v, f"/familiar_obstacles/{i}") for i, v in enumerate(doc.get("familiar_obstacles", [])))
    unknown = []
    for i, u in enumerate(doc.get("unknown_obstacles", [])):
        if "disk" in u:
            unknown.append(geo.Disk(tuple(u["disk"]["center"]), float(u["disk"]["radius"])))
        else:
            p = poly(u["polygon"], f"/unknown_obstacles/{i}/polygon")
            if p is not None and abs(p.convex_hull.area - p.area) > geo.AREA_TOL:
                problems.append(f"/unknown_obstacles/{i}: unknown obstacles must be convex")
            unknown.append(p)
    r = doc["robot"]
    robot = RobotSpec(tuple(float(v) for v in r["start"]), float(r["radius"]), float(r["sensor_range"]))
    try:
        params = Params.from_dict(doc.get("params", {}))
    except (ScenarioError, TypeError) as exc:
        problems.append(str(exc))
        params = Params()
    if problems:
        raise ScenarioError(problems)
    scn = Scenario(workspace, regions, movables, familiar, tuple(unknown), robot, params, doc.get("name", ""))
    check_invariants(scn)
    return scn


def check_invariants(scn: Scenario) -> None:
    problems = []
    W = scn.workspace
    for k, reg in scn.regions.items():
        if not W.buffer(geo.EPS).covers(reg):
            problems.append(f"/regions/{k}: region is not inside the workspace")
    x, y, _ = scn.robot.start
    p = Point(x, y)
    r = scn.robot.radius
    if not W.covers(p) or W.exterior.distance(p) < r or any(h.distance(p) < r for h in W.interiors):
        problems.append("/robot/start: robot does not fit inside the workspace")
    for i, ob in enumerate(scn.familiar_obstacles):
        if ob.distance(p) < r:
            problems.append(f"/robot/start: robot overlaps familiar obstacle {i}")
    for i, ob in enumerate(scn.unknown_obstacles):
        if _shape(ob).distance(p) < r:
            problems.append(f"/robot/start: robot overlaps unknown obstacle {i}")
    for k, d in scn.movables.items():
        if math.hypot(d.center[0] - x, d.center[1] - y) < d.radius + r:
            problems.append(f"/robot/start: robot overlaps movable {k}")
        if not W.covers(Point(d.center)):
            problems.append(f"/movables/{k}: object center outside the workspace")
    if problems:
        raise ScenarioError(problems)
    # separation of unknown obstacles is the author's responsibility; warn only
    others = [*scn.familiar_obstacles, W.exterior, *(Point(d.center).buffer(d.radius) for d in scn.movables.values())]
    for i, ob in enumerate(scn.unknown_obstacles):
        shp = _shape(ob)
        near = [o for o in others if shp.distance(o) < 2 * r]
        near += [_shape(o) for j, o in enumerate(scn.unknown_obstacles) if j != i and shp.distance(_shape(o)) < 2 * r]
        if near:
            log.warning("unknown obstacle %d is within 2r of another obstacle", i)


def _shape(ob):
    if isinstance(ob, geo.Disk):
        return Point(ob.center).buffer(ob.radius, quad_segs=32)
    return ob


def load_scenario(path) -> Scenario:
    path = Path(path)
    try:
        doc = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ScenarioError([f"/: invalid JSON ({exc})"]) from exc
    scn = scenario_from_dict(doc)
    if not scn.name:
        scn = replace(scn, name=path.stem)
    return scn


@dataclass
class WorldState:
    """Mutable world owned by the simulation loop."""

    x: float
    y: float
    theta: float
    objects: dict  # id -> (cx, cy)
    gripper: int = 0
    carried: Optional[str] = None
    grasp_body: Optional[tuple] = None  # object center in the robot frame while carried
    localized: set = field(default_factory=set)  # indices of familiar obstacles
    sensed_unknown: set = field(default_factory=set)

    @classmethod
    def initial(cls, scn: Scenario) -> "WorldState":
        x, y, th = scn.robot.start
        return cls(x, y, th, {k: d.center for k, d in scn.movables.items()})

    @property
    def position(self) -> tuple:
        return (self.x, self.y)

    def object_disk(self, scn: Scenario, k: str) -> geo.Disk:
        return geo.Disk(self.objects[k], scn.movables[k].radius)

    def carried_center(self) -> Optional[tuple]:
        if self.carried is None:
            return None
        bx, by = self.grasp_body
        c, s = math.cos(self.theta), math.sin(self.theta)
        return (self.x + c * bx - s * by, self.y + s * bx + c * by)
