"""SVG snapshots of a logged mission."""

from __future__ import annotations

import math
from pathlib import Path
from typing import Optional, Sequence

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
from matplotlib.patches import Circle, PathPatch  # noqa: E402
from matplotlib.path import Path as MplPath  # noqa: E402

from . import geometry as geo  # noqa: E402
from .world import Scenario  # noqa: E402

matplotlib.rcParams["svg.hashsalt"] = "ltlmanip"
matplotlib.rcParams["svg.fonttype"] = "none"

FAMILIAR = "#202020"
UNKNOWN = "#b8b8b8"
REGION = "#9ecae1"
MOVABLE = "#e6a23c"
ROBOT = "#3b6fb6"
GRIPPER = "#d62728"
TRAIL = "#555555"


class RenderError(ValueError):
    pass


def _poly_path(poly) -> MplPath:
    verts, codes = [], []
    for p in geo.polygons_of(poly, drop_tiny=False):
        for ring in [p.exterior, *p.interiors]:
            pts = list(ring.coords)
            verts += pts
            codes += [MplPath.MOVETO] + [MplPath.LINETO] * (len(pts) - 2) + [MplPath.CLOSEPOLY]
    return MplPath(verts, codes)


def _add_poly(ax, poly, **kw) -> None:
    ax.add_patch(PathPatch(_poly_path(poly), **kw))


def draw_frame(
    scn: Scenario,
    rows: Sequence[dict],
    k: int,
    objects: dict,
    localized: Optional[set] = None,
    title: str = "",
):
    """Figure of tick ``k``: layout, objects at ``objects``, trail up to ``k``."""
    fig, ax = plt.subplots(figsize=(6, 6))
    _add_poly(ax, scn.workspace, facecolor="white", edgecolor="black", lw=1.5)
    for name in sorted(scn.regions):
        reg = scn.regions[name]
        _add_poly(ax, reg, facecolor=REGION, edgecolor="none", alpha=0.6)
        c = reg.centroid
        ax.text(c.x, c.y, name, ha="center", va="center", fontsize=9)
    for i, ob in enumerate(scn.familiar_obstacles):
        dark = localized is None or i in localized
        _add_poly(ax, ob, facecolor=FAMILIAR if dark else "#707070", edgecolor="none")
    for ob in scn.unknown_obstacles:
        if isinstance(ob, geo.Disk):
            ax.add_patch(Circle(ob.center, ob.radius, facecolor=UNKNOWN, edgecolor="none"))
        else:
            _add_poly(ax, ob, facecolor=UNKNOWN, edgecolor="none")
    for name in sorted(objects):
        c = objects[name]
        ax.add_patch(Circle(c, scn.movables[name].radius, facecolor=MOVABLE, edgecolor="black", lw=0.5))
        ax.text(c[0], c[1], name, ha="center", va="center", fontsize=7)
    if rows:
        xs = [r["x"] for r in rows[: k + 1]]
        ys = [r["y"] for r in rows[: k + 1]]
        ax.plot(xs, ys, color=TRAIL, lw=0.8)
        r = rows[k]
        x, y, th = r["x"], r["y"], r["theta"]
        rad = scn.robot.radius
        ax.add_patch(Circle((x, y), rad, facecolor=ROBOT, edgecolor="black", lw=0.5))
        ax.add_patch(Circle((x, y), scn.robot.sensor_range, facecolor="none", edgecolor="orange", lw=0.5, ls="--"))
        ax.plot([x, x + rad * math.cos(th)], [y, y + rad * math.sin(th)], color=GRIPPER, lw=2)
    minx, miny, maxx, maxy = scn.workspace.bounds
    ax.set_xlim(minx - 0.2, maxx + 0.2)
    ax.set_ylim(miny - 0.2, maxy + 0.2)
    ax.set_aspect("equal")
    ax.set_xticks([])
    ax.set_yticks([])
    if title:
        ax.set_title(title, fontsize=9)
    return fig


def _objects_at(scn: Scenario, rows: Sequence[dict], events: Sequence[dict], k: int) -> dict:
    """Object positions at tick ``k``, replaying grasp/release events and the carried column."""
    objs = {name: tuple(d.center) for name, d in scn.movables.items()}
    t = rows[k]["t"] if rows else 0.0
    for e in events:
        if e["t"] > t + 1e-9:
            break
        if e["kind"] in ("GRASP", "RELEASE") and "position" in e:
            objs[e["line"].split("obj=")[1]] = tuple(e["position"])
        if e["kind"] == "MODE" and "objects" in e:
            objs.update({n: tuple(c) for n, c in e["objects"].items()})
    carried = rows[k]["carried"] if rows else ""
    if carried:
        # the grasp offset is fixed in the robot frame while carried
        g = max((e for e in events if e["kind"] == "GRASP" and e["t"] <= t + 1e-9), key=lambda e: e["t"], default=None)
        if g is not None:
            r0 = min(rows, key=lambda r: abs(r["t"] - g["t"]))
            dx, dy = g["position"][0] - r0["x"], g["position"][1] - r0["y"]
            c, s = math.cos(r0["theta"]), math.sin(r0["theta"])
            bx, by = c * dx + s * dy, -s * dx + c * dy
            r = rows[k]
            c, s = math.cos(r["theta"]), math.sin(r["theta"])
            objs[carried] = (r["x"] + c * bx - s * by, r["y"] + s * bx + c * by)
    return objs


def _localized_at(events: Sequence[dict], t: float) -> set:
    out: set = set()
    for e in events:
        if e["t"] > t + 1e-9:
            break
        if e["kind"] == "SENSE":
            out |= set(int(v) for v in e["line"].split("=")[1].strip("[]").split(",") if v.strip())
    return out


def frame_ticks(rows: Sequence[dict], events: Sequence[dict]) -> list:
    """Tick indices for the snapshots: start, every mode change, end."""
    if not rows:
        return [0]
    times = [r["t"] for r in rows]
    ks = [0]
    for e in events:
        if e["kind"] == "MODE":
            k = min(range(len(times)), key=lambda i: (abs(times[i] - e["t"]), i))
            ks.append(k)
    ks.append(len(rows) - 1)
    out = []
    for k in ks:
        if not out or out[-1] != k:
            out.append(k)
    return out


def render_frame(scn: Scenario, rows: Sequence[dict], events: Sequence[dict], t: float, path) -> Path:
    """One SVG at log time ``t``."""
    if rows and not rows[0]["t"] - 1e-9 <= t <= rows[-1]["t"] + 1e-9:
        raise RenderError(f"t={t} is outside the log range [{rows[0]['t']}, {rows[-1]['t']}]")
    k = min(range(len(rows)), key=lambda i: abs(rows[i]["t"] - t)) if rows else 0
    return _save(scn, rows, events, k, Path(path))


def _save(scn, rows, events, k, path: Path) -> Path:
    t = rows[k]["t"] if rows else 0.0
    mode = rows[k]["mode"] if rows else "ltl"
    fig = draw_frame(scn, rows, k, _objects_at(scn, rows, events, k), _localized_at(events, t), f"t = {t:.2f} s, {mode} mode")
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)
    return path


def render_all(scn: Scenario, rows: Sequence[dict], events: Sequence[dict], out_dir) -> list:
    """``frame_000.svg``, ``frame_001.svg``, ... one per snapshot tick."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    return [_save(scn, rows, events, k, out / f"frame_{i:03d}.svg") for i, k in enumerate(frame_ticks(rows, events))]
