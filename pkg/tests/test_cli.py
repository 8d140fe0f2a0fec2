import json

import pytest

from conftest import CORRIDOR_FORMULA, PATROL_FORMULA, SCENARIOS

from ltlmanip.cli import EXIT_FAILED, EXIT_INPUT, EXIT_OK, main
from ltlmanip.ltl import export_hoa, parse_ltl, translate_to_nba

CORRIDOR = str(SCENARIOS / "corridor.json")


@pytest.fixture(scope="module")
def corridor_out(tmp_path_factory):
    out = tmp_path_factory.mktemp("cli")
    code = main(["run", "--scenario", CORRIDOR, "--ltl", CORRIDOR_FORMULA, "--out", str(out)])
    return code, out


def test_run_writes_outputs(corridor_out, capsys):
    code, out = corridor_out
    assert code == EXIT_OK
    names = sorted(p.name for p in out.iterdir())
    assert names == ["events.jsonl", "frame_000.svg", "frame_001.svg", "frame_002.svg", "frame_003.svg", "graph.dot", "log.csv"]
    assert (out / "log.csv").read_text().splitlines()[0].startswith("t,x,y,theta")


def test_render_subcommand(corridor_out, tmp_path, capsys):
    _, out = corridor_out
    assert main(["render", "--log", str(out / "log.csv"), "--scenario", CORRIDOR, "--out", str(tmp_path)]) == EXIT_OK
    assert len(capsys.readouterr().out.split()) == 4
    assert (tmp_path / "frame_003.svg").read_bytes() == (out / "frame_003.svg").read_bytes()


def test_check_prints_distances(capsys, tmp_path):
    dot = tmp_path / "g.dot"
    assert main(["check", "--ltl", PATROL_FORMULA, "--dot", str(dot)]) == EXIT_OK
    text = capsys.readouterr().out
    assert "aux    dF=2" in text and "q1     dF=0 *" in text
    assert dot.read_text().startswith("digraph")


def test_graph_from_hoa_matches_formula(tmp_path, capsys):
    hoa = tmp_path / "a.hoa"
    hoa.write_text(export_hoa(translate_to_nba(parse_ltl(PATROL_FORMULA))))
    assert main(["graph", "--ltl", PATROL_FORMULA]) == EXIT_OK
    direct = capsys.readouterr().out
    assert main(["graph", "--ltl", PATROL_FORMULA, "--hoa", str(hoa)]) == EXIT_OK
    imported = capsys.readouterr().out
    # state labels differ, the transition structure must not
    edges = lambda text: sorted(line for line in text.splitlines() if "->" in line)
    assert edges(imported) == edges(direct) and edges(direct)


def test_oracle_subcommand(capsys):
    assert main(["oracle", "--scenario", CORRIDOR, "--resolution", "0.02"]) == EXIT_OK
    assert "feasible, blocked" in capsys.readouterr().out


def test_failed_mission_exit_code(tmp_path, capsys):
    doc = json.loads((SCENARIOS / "corridor.json").read_text())
    # close both gaps with fixed walls
    doc["familiar_obstacles"] = [[[0, 4.6], [10, 4.6], [10, 5.4], [0, 5.4]]]
    doc["movables"] = {}
    p = tmp_path / "closed.json"
    p.write_text(json.dumps(doc))
    code = main(["run", "--scenario", str(p), "--ltl", CORRIDOR_FORMULA, "--out", str(tmp_path / "o"), "--no-frames"])
    assert code == EXIT_FAILED
    assert capsys.readouterr().out.startswith("Failed(")


@pytest.mark.parametrize(
    "argv",
    [
        ["check", "--ltl", "F pi(fly,l1)"],
        ["check", "--ltl", "! pi(move,l1)"],
        ["graph", "--ltl", "F pi(move,l1)", "--hoa", "/nonexistent.hoa"],
        ["oracle", "--scenario", "/nonexistent.json"],
    ],
)
def test_bad_input_exit_code(argv, capsys):
    assert main(argv) == EXIT_INPUT
    assert capsys.readouterr().err


def test_invalid_scenario_lists_problems(tmp_path, capsys):
    p = tmp_path / "bad.json"
    p.write_text(json.dumps({"workspace": [[0, 0], [4, 0], [4, 4], [0, 4]], "robot": {"start": [0.1, 1, 0], "radius": 0.25, "sensor_range": 2}}))
    assert main(["oracle", "--scenario", str(p)]) == EXIT_INPUT
    assert "scenario error: /robot/start" in capsys.readouterr().err
