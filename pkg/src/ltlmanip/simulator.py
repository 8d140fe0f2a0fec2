"""Closed-loop mission simulation.

One :class:`Simulation` owns a world, a task graph and the controller
states of every layer.  Each tick senses, lets the active action compute
a velocity command, reacts to its outcome (advance the automaton, enter or
leave Fix mode, report infeasibility) and integrates the kinematics.
"""

from __future__ import annotations

import csv
import io
import json
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Union

import numpy as np

from . import symbolic
from .automaton import TaskGraph, task_graph_from_formula
from .interface import Action, ActionType, ModeState, mode_step, symbol_to_action
from .ltl import Always, Formula, Nba, Predicate, parse_ltl
from .ltl.syntax import And, Eventually, Or, Until
from .reactive import (
    ActionExecution,
    ActionOutcome,
    ClearanceAudit,
    Grounding,
    apply_motion,
    disengage,
    integrate_unicycle,
    sense,
)
from .world import Scenario, WorldState

log = logging.getLogger(__name__)

LOG_COLUMNS = ("t", "x", "y", "theta", "v", "omega", "mode", "gripper", "carried", "min_clearance", "nba_state")


@dataclass(frozen=True)
class Satisfied:
    accept_count: int

    def __str__(self) -> str:
        return f"Satisfied(accepts={self.accept_count})"


@dataclass(frozen=True)
class Failed:
    reason: str

    def __str__(self) -> str:
        return f"Failed({self.reason})"


Verdict = Union[Satisfied, Failed]


@dataclass
class TrajectoryLog:
    ticks: list = field(default_factory=list)  # tuples in LOG_COLUMNS order
    events: list = field(default_factory=list)  # dicts with t, kind, line and extras
    verdict: Optional[Verdict] = None

    def event(self, t: float, kind: str, line: str, **extra) -> None:
        self.events.append({"t": t, "kind": kind, "line": line, **extra})

    def lines(self, kind: Optional[str] = None) -> list:
        return [e["line"] for e in self.events if kind is None or e["kind"] == kind]

    @property
    def min_clearance(self) -> float:
        return min((row[9] for row in self.ticks), default=math.inf)

    def column(self, name: str) -> np.ndarray:
        i = LOG_COLUMNS.index(name)
        return np.array([row[i] for row in self.ticks])

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(LOG_COLUMNS)
        for row in self.ticks:
            w.writerow([f"{v:.6f}" if isinstance(v, float) else v for v in row])
        return buf.getvalue()

    def to_jsonl(self) -> str:
        rows = [dict(e, t=round(e["t"], 6)) for e in self.events]
        return "".join(json.dumps(r, sort_keys=True) + "\n" for r in rows)


def read_events(path) -> list:
    with open(path) as fh:
        return [json.loads(line) for line in fh if line.strip()]


def read_log(path) -> list:
    """Rows of a ``log.csv`` as dicts with numeric fields converted."""
    out = []
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            for k in ("t", "x", "y", "theta", "v", "omega", "min_clearance"):
                row[k] = float(row[k])
            row["gripper"] = int(row["gripper"])
            out.append(row)
    return out


def step(world: WorldState, u, dt: float) -> WorldState:
    """Integrate one tick in place (fourth-order Runge-Kutta); returns ``world``."""
    if not 0 < dt <= 0.1:
        raise ValueError(f"dt must lie in (0, 0.1], got {dt}")
    apply_motion(world, u, dt)
    return world


def is_recurrence(f: Formula) -> bool:
    """True when the formula contains an Always operator."""
    if isinstance(f, Always):
        return True
    if isinstance(f, (And, Or, Until)):
        return is_recurrence(f.left) or is_recurrence(f.right)
    if isinstance(f, Eventually):
        return is_recurrence(f.operand)
    return False


def initial_symbol(scn: Scenario, world: WorldState) -> frozenset:
    """Move predicate of the region the robot starts in (if any)."""
    from shapely.geometry import Point

    p = Point(world.position)
    for name in sorted(scn.regions):
        if scn.regions[name].covers(p):
            return frozenset({Predicate.move(name)})
    return frozenset()


def action_goal(scn: Scenario, world: WorldState, a: Optional[Action]):
    if a is None:
        return world.position
    if a.kind in (ActionType.MOVE, ActionType.RELEASE):
        c = scn.regions[a.region].centroid if a.region in scn.regions else None
        return (c.x, c.y) if c is not None else world.position
    return world.objects.get(a.obj, world.position)


class Simulation:
    def __init__(
        self,
        scn: Scenario,
        formula: Optional[str] = None,
        *,
        nba: Optional[Nba] = None,
        accept_target: Optional[int] = None,
        dt: Optional[float] = None,
        t_max: Optional[float] = None,
        seed: int = 0,
    ):
        if formula is None and nba is None:
            raise ValueError("need a formula or an automaton")
        self.scn = scn
        self.dt = float(dt if dt is not None else scn.params.dt)
        self.t_max = float(t_max if t_max is not None else scn.params.t_max)
        self.seed = seed  # the pipeline itself draws no random numbers
        self.world = WorldState.initial(scn)
        self.formula = parse_ltl(formula) if formula is not None else None
        self.accept_target = int(accept_target or 1)
        self.graph: TaskGraph = task_graph_from_formula(self.formula, initial_symbol(scn, self.world), nba=nba)
        self.grounding = Grounding(scn)
        self.audit = ClearanceAudit(scn)
        self.log = TrajectoryLog()
        self.mode = ModeState()
        self.cs = None
        self.execution: Optional[ActionExecution] = None
        self.action: Optional[Action] = None
        self.achieved: list = []  # symbols realised, in order
        self.tick = 0

    # -------------------------------------------------------------- helpers

    @property
    def t(self) -> float:
        return round(self.tick * self.dt, 9)

    def _cost(self, sym: frozenset) -> float:
        a = symbol_to_action(sym)
        if a is None:
            return 0.0
        gx, gy = action_goal(self.scn, self.world, a)
        return math.hypot(gx - self.world.x, gy - self.world.y)

    def _emit_symbolic(self, cs) -> None:
        for line in cs.events if isinstance(cs, symbolic.ControllerState) else ():
            self.log.event(self.t, "SYMBOLIC", line)

    def _fail(self, reason: str) -> Failed:
        v = Failed(reason)
        self.log.event(self.t, "VERDICT", f"VERDICT {v}")
        self.log.verdict = v
        return v

    def _launch(self, a: Action) -> None:
        pool = tuple(self.mode.stack) + ((self.mode.active,) if self.mode.active else ())
        self.action = a
        self.execution = ActionExecution(a, self.scn, self.grounding, pool)
        self.log.event(self.t, "ACTION", f"ACTION {a}", mode=self.mode.mode)

    def _apply_symbolic(self, out) -> Optional[Verdict]:
        if isinstance(out, symbolic.MissionFailure):
            self.log.event(self.t, "SYMBOLIC", f"SYMBOLIC failure {out}")
            if out.accept_count < self.accept_target:
                return self._fail(str(out))
            v = Satisfied(out.accept_count)
            self.log.event(self.t, "VERDICT", f"VERDICT {v}")
            self.log.verdict = v
            return v
        self.cs = out
        self._emit_symbolic(out)
        if out.accept_count >= self.accept_target:
            v = Satisfied(out.accept_count)
            self.log.event(self.t, "VERDICT", f"VERDICT {v}")
            self.log.verdict = v
            return v
        return None

    def _next_ltl_action(self) -> Optional[Verdict]:
        """Launch the action for the pending symbol; empty symbols advance at once."""
        guard = 0
        limit = 4 * len(self.graph.vertices) + 4
        while True:
            sym = self.cs.pending_symbol
            a = symbol_to_action(sym)
            if a is not None:
                self._launch(a)
                return None
            guard += 1
            if guard > limit:
                return self._fail("no physical action is ever requested")
            self.achieved.append(sym)
            v = self._apply_symbolic(symbolic.advance(self.graph, self.cs, sym, self._cost))
            if v is not None:
                return v

    def _mode_lines(self, st) -> None:
        for line in st.lines:
            kind = line.split()[0]
            extra = {}
            if kind == "MODE":
                extra = {"objects": {k: list(c) for k, c in sorted(self.world.objects.items())}}
            self.log.event(self.t, kind, line, **extra)

    def _record_contact(self, a: Action, before: Optional[str]) -> None:
        w = self.world
        if before is None and w.carried is not None:
            self.log.event(self.t, "GRASP", f"GRASP obj={w.carried}", position=list(w.objects[w.carried]))
        elif before is not None and w.carried is None:
            self.log.event(self.t, "RELEASE", f"RELEASE obj={before}", position=list(w.objects[before]))

    def _handle(self, out: ActionOutcome) -> Optional[Verdict]:
        a = self.action
        self.execution = None
        self.action = None
        self.log.event(self.t, "OUTCOME", f"OUTCOME {a} {out.kind}" + (f" ({out.reason})" if out.reason else ""))
        w = self.world
        if self.mode.mode == "ltl":
            if out.kind == "achieved":
                sym = self.cs.pending_symbol
                self.achieved.append(sym)
                v = self._apply_symbolic(symbolic.advance(self.graph, self.cs, sym, self._cost))
                return v if v is not None else self._next_ltl_action()
            if out.kind == "infeasible":
                v = self._apply_symbolic(symbolic.report_infeasible(self.graph, self.cs, self._cost))
                return v if v is not None else self._next_ltl_action()
            st = mode_step(self.mode, pending=a, carrying=w.carried, blocking=out.blocking)
        elif out.kind == "fix":
            st = mode_step(self.mode, carrying=w.carried, blocking=out.blocking)
        else:
            st = mode_step(self.mode, carrying=w.carried, outcome=out.kind)
        self._mode_lines(st)
        self.mode = st.state
        if st.drop and w.carried is not None:
            before = w.carried
            disengage(w)
            self._record_contact(a, before)
        if st.failed is not None or (out.kind == "infeasible" and self.mode.mode == "ltl"):
            v = self._apply_symbolic(symbolic.report_infeasible(self.graph, self.cs, self._cost))
            return v if v is not None else self._next_ltl_action()
        if self.mode.mode == "ltl":
            # resume the suspended symbolic action
            return self._next_ltl_action()
        if st.action is None:
            return self._fail("fix mode has nothing to do")
        self._launch(st.action)
        return None

    def _row(self, u) -> tuple:
        w = self.world
        return (
            self.t, float(w.x), float(w.y), float(w.theta), float(u[0]), float(u[1]),
            self.mode.mode, int(w.gripper), w.carried or "", float(self.audit(w)), self.cs.current,
        )

    # -------------------------------------------------------------- main loop

    def run(self) -> TrajectoryLog:
        w = self.world
        out = symbolic.start(self.graph, cost=self._cost)
        v = self._apply_symbolic(out)
        if v is None:
            v = self._next_ltl_action()
        steps = int(round(self.t_max / self.dt))
        while v is None:
            reading = sense(self.scn, w)
            new = reading.localized_familiar - w.localized
            if new:
                w.localized |= new
                self.log.event(self.t, "SENSE", f"SENSE familiar={sorted(new)}")
            w.sensed_unknown |= reading.sensed_unknown
            u = (0.0, 0.0)
            before = w.carried
            a = self.action
            u, outcome = self.execution.step(w, reading, self.t)
            self._record_contact(a, before)
            if outcome is not None:
                v = self._handle(outcome)
                u = (0.0, 0.0)
            self.log.ticks.append(self._row(u))
            if v is not None:
                break
            if self.tick >= steps:
                v = self._fail("time limit")
                break
            apply_motion(w, u, self.dt)
            self.tick += 1
        return self.log


def run(scn: Scenario, formula: Optional[str] = None, **kw) -> TrajectoryLog:
    return Simulation(scn, formula, **kw).run()


def write_outputs(sim: Simulation, out_dir) -> dict:
    """Write log.csv, events.jsonl and graph.dot; returns their paths."""
    from .automaton import task_graph_to_dot

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = {"log": out / "log.csv", "events": out / "events.jsonl", "graph": out / "graph.dot"}
    paths["log"].write_text(sim.log.to_csv())
    paths["events"].write_text(sim.log.to_jsonl())
    paths["graph"].write_text(task_graph_to_dot(sim.graph))
    return paths


__all__ = [
    "Failed", "LOG_COLUMNS", "Satisfied", "Simulation", "TrajectoryLog", "Verdict", "integrate_unicycle",
    "initial_symbol", "is_recurrence", "read_events", "read_log", "run", "step", "write_outputs",
]
