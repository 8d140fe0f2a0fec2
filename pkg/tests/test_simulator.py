import json
import math

import numpy as np
import pytest
from shapely.geometry import Point

from conftest import REARRANGE_FORMULA, CORRIDOR_FORMULA, PATROL_FORMULA
from oracles import lasso_holds

from ltlmanip.ltl import Predicate, parse_ltl
from ltlmanip.simulator import (
    LOG_COLUMNS,
    Failed,
    Satisfied,
    Simulation,
    TrajectoryLog,
    is_recurrence,
    read_events,
    read_log,
    step,
    write_outputs,
)
from ltlmanip.world import ScenarioError, WorldState, load_scenario, scenario_from_dict

MINIMAL = {
    "workspace": [[0, 0], [4, 0], [4, 4], [0, 4]],
    "robot": {"start": [1, 1, 0], "radius": 0.25, "sensor_range": 2.0},
}


# ---------------------------------------------------------------- scenario loading


def test_corridor_scenario_contents(corridor_scenario):
    s = corridor_scenario
    assert list(s.movables) == ["o1"] and len(s.familiar_obstacles) == 2
    assert list(s.regions) == ["l1"] and s.unknown_obstacles == ()
    assert s.name == "corridor"


def test_minimal_scenario_uses_defaults():
    s = scenario_from_dict(MINIMAL)
    assert s.movables == {} and s.regions == {}
    assert s.params.dt == 0.01 and s.params.delta_goal == 0.05


@pytest.mark.parametrize(
    "patch, needle",
    [
        ({"familiar_obstacles": [[[0.5, 0.5], [1.5, 0.5], [1.5, 1.5], [0.5, 1.5]]]}, "/robot/start"),
        ({"movables": {"o1": {"center": [1.2, 1.0], "radius": 0.4}}}, "/robot/start"),
        ({"robot": {"start": [0.1, 1, 0], "radius": 0.25, "sensor_range": 2.0}}, "/robot/start"),
        ({"regions": {"l1": [[3, 3], [5, 3], [5, 5], [3, 5]]}}, "/regions/l1"),
        ({"workspace": [[0, 0], [1, 0], [2, 0]]}, "/workspace"),
        ({"robot": {"start": [1, 1], "radius": 0.25, "sensor_range": 2.0}}, "/robot"),
        ({"bogus": 1}, "/"),
    ],
)
def test_invalid_scenarios_are_reported(patch, needle):
    with pytest.raises(ScenarioError) as err:
        scenario_from_dict({**MINIMAL, **patch})
    assert any(p.startswith(needle) for p in err.value.problems)


def test_invalid_json(tmp_path):
    p = tmp_path / "bad.json"
    p.write_text("{")
    with pytest.raises(ScenarioError):
        load_scenario(p)


# ---------------------------------------------------------------- kinematics


def test_zero_input_step():
    w = WorldState(1.0, 2.0, 0.3, {})
    step(w, (0.0, 0.0), 0.01)
    assert (w.x, w.y, w.theta) == (1.0, 2.0, 0.3)


def test_unit_forward_step():
    w = WorldState(0.0, 0.0, 0.0, {})
    step(w, (1.0, 0.0), 0.01)
    assert (w.x, w.y, w.theta) == (0.01, 0.0, 0.0)


@pytest.mark.parametrize("dt", [0.0, -0.01, 0.2])
def test_invalid_dt(dt):
    with pytest.raises(ValueError):
        step(WorldState(0.0, 0.0, 0.0, {}), (1.0, 0.0), dt)


def test_recurrence_detection():
    assert is_recurrence(parse_ltl(PATROL_FORMULA))
    assert not is_recurrence(parse_ltl(CORRIDOR_FORMULA))


def test_simulation_needs_a_specification(corridor_scenario):
    with pytest.raises(ValueError):
        Simulation(corridor_scenario)


# ---------------------------------------------------------------- log invariants on full missions


def _achieved_moves(sim):
    return [s for s in sim.achieved if s]


def _tick_times(log):
    return log.column("t")


@pytest.mark.parametrize("name", ["corridor_run", "rearrange_run", "patrol_run"])
def test_timestamps_increase(name, request):
    log = request.getfixturevalue(name).log
    t = _tick_times(log)
    assert t[0] == 0.0
    assert np.allclose(np.diff(t), 0.01)
    et = [e["t"] for e in log.events]
    assert et == sorted(et)


@pytest.mark.parametrize("name", ["corridor_run", "rearrange_run", "patrol_run"])
def test_discovery_is_monotone_and_within_range(name, request):
    run = request.getfixturevalue(name)
    seen = []
    rows = {round(r[0], 9): r for r in run.log.ticks}
    for e in run.log.events:
        if e["kind"] != "SENSE":
            continue
        ids = json.loads(e["line"].split("=", 1)[1])
        assert not set(ids) & set(seen)
        seen += ids
        r = rows[round(e["t"], 9)]
        for i in ids:
            assert run.scenario.familiar_obstacles[i].distance(Point(r[1], r[2])) <= run.scenario.robot.sensor_range
    assert len(seen) == len(set(seen))


@pytest.mark.parametrize("name, formula", [("corridor_run", CORRIDOR_FORMULA), ("rearrange_run", REARRANGE_FORMULA)])
def test_satisfied_verdict_is_sound(name, formula, request):
    run = request.getfixturevalue(name)
    assert isinstance(run.log.verdict, Satisfied)
    # the realised prefix followed by idling satisfies the formula
    assert lasso_holds(parse_ltl(formula), run.sim.achieved, [frozenset()])
    assert not lasso_holds(parse_ltl(formula), run.sim.achieved[:-1], [frozenset()]) or not run.sim.achieved[-1]


def test_rearrange_realises_actions_in_order(rearrange_run):
    expected = [
        Predicate.grasp("o1"), Predicate.release("o1", "l2"), Predicate.grasp("o2"),
        Predicate.release("o2", "l3"), Predicate.grasp("o3"), Predicate.release("o3", "l1"),
    ]
    assert [next(iter(s)) for s in _achieved_moves(rearrange_run.sim)] == expected


def test_carried_objects_move_rigidly(rearrange_run):
    rows = {round(r[0], 9): r for r in rearrange_run.log.ticks}
    grasped = {}
    checked = 0
    for e in rearrange_run.log.events:
        if e["kind"] not in ("GRASP", "RELEASE"):
            continue
        k = e["line"].split("=")[1]
        r = rows[round(e["t"], 9)]
        d = math.dist((r[1], r[2]), e["position"])
        if e["kind"] == "GRASP":
            grasped[k] = d
        else:
            assert d == pytest.approx(grasped.pop(k), abs=1e-9)
            checked += 1
    assert checked >= 3


def test_gripper_column_matches_carried(rearrange_run):
    g = rearrange_run.log.column("gripper")
    c = rearrange_run.log.column("carried")
    assert np.array_equal(g == 1, c != "")


def test_patrol_alternates(patrol_run):
    log = patrol_run.log
    assert log.verdict == Satisfied(5)
    regions = [next(iter(s)).region for s in _achieved_moves(patrol_run.sim)]
    assert all(a != b for a, b in zip(regions, regions[1:]))
    assert regions.count("l1") >= 5 and regions.count("l2") >= 5
    assert log.min_clearance >= -1e-3
    assert len(log.lines("SYMBOLIC")) and sum("accept #" in x for x in log.lines("SYMBOLIC")) == 5


def test_corridor_log_shape(corridor_run):
    log = corridor_run.log
    assert all(len(r) == len(LOG_COLUMNS) for r in log.ticks)
    modes = log.column("mode")
    assert set(modes) == {"ltl", "fix"}
    assert log.lines("VERDICT") == ["VERDICT Satisfied(accepts=1)"]


def test_unreachable_goal_fails():
    doc = {
        **MINIMAL,
        "workspace": [[0, 0], [10, 0], [10, 10], [0, 10]],
        "regions": {"l1": [[7.5, 7.5], [8.5, 7.5], [8.5, 8.5], [7.5, 8.5]]},
        "familiar_obstacles": [[[6.5, 6.5], [9.6, 6.5], [9.6, 9.6], [6.5, 9.6]], [[7, 7], [9.1, 7], [9.1, 9.1], [7, 9.1]]],
    }
    # a closed pen: outer ring minus inner square, given as a polygon with a hole
    doc["familiar_obstacles"] = [[doc["familiar_obstacles"][0], doc["familiar_obstacles"][1][::-1]]]
    log = Simulation(scenario_from_dict(doc), CORRIDOR_FORMULA, t_max=120).run()
    assert isinstance(log.verdict, Failed)
    assert log.lines("VERDICT")[-1].startswith("VERDICT Failed")


def test_time_limit(corridor_scenario):
    log = Simulation(corridor_scenario, CORRIDOR_FORMULA, t_max=1.0).run()
    assert log.verdict == Failed("time limit")
    assert log.ticks[-1][0] == pytest.approx(1.0)


# ---------------------------------------------------------------- outputs


def test_outputs_round_trip(corridor_run, tmp_path):
    paths = write_outputs(corridor_run.sim, tmp_path)
    rows = read_log(paths["log"])
    assert len(rows) == len(corridor_run.log.ticks)
    assert list(rows[0]) == list(LOG_COLUMNS)
    assert rows[-1]["x"] == pytest.approx(corridor_run.log.ticks[-1][1], abs=1e-6)
    events = read_events(paths["events"])
    assert [e["line"] for e in events] == corridor_run.log.lines()
    assert paths["graph"].read_text().startswith("digraph")


def test_empty_log():
    log = TrajectoryLog()
    assert log.min_clearance == math.inf
    assert log.to_csv().strip() == ",".join(LOG_COLUMNS)
