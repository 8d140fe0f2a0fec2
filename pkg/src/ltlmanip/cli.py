"""Command line entry point ``sim``."""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from .automaton import EmptyTaskGraph, TaskGraphError, task_graph_from_formula, task_graph_to_dot
from .ltl import HoaError, LtlError, import_hoa, parse_ltl, to_dot, translate_to_nba
from .world import ScenarioError, load_scenario

EXIT_OK = 0
EXIT_FAILED = 2
EXIT_INPUT = 3


def _fmt(d) -> str:
    return "inf" if d == float("inf") else str(int(d))


def _load_nba(args):
    if getattr(args, "hoa", None):
        return import_hoa(Path(args.hoa).read_text())
    return None


def cmd_run(args) -> int:
    from .plotting import render_all
    from .simulator import Satisfied, Simulation, read_log, write_outputs

    scn = load_scenario(args.scenario)
    sim = Simulation(scn, args.ltl, nba=_load_nba(args), accept_target=args.accept, dt=args.dt, seed=args.seed)
    sim.run()
    paths = write_outputs(sim, args.out)
    if not args.no_frames:
        render_all(scn, read_log(paths["log"]), sim.log.events, args.out)
    print(sim.log.verdict)
    return EXIT_OK if isinstance(sim.log.verdict, Satisfied) else EXIT_FAILED


def cmd_check(args) -> int:
    g = task_graph_from_formula(parse_ltl(args.ltl), nba=_load_nba(args))
    print("vertices:")
    for q in g.vertices:
        mark = " *" if q in g.accepting_vertices else ""
        print(f"  {q:<6} dF={_fmt(g.d_f(q))}{mark}")
    print("edges:")
    for (a, b), e in sorted(g.edges.items()):
        syms = ", ".join(sorted({str(w.formula) for w in e.witnesses}))
        acc = " accepting" if e.accepting else ""
        print(f"  {a} -> {b}{acc}: {syms}")
    if args.dot:
        Path(args.dot).write_text(task_graph_to_dot(g))
    return EXIT_OK


def cmd_graph(args) -> int:
    nba = _load_nba(args) or translate_to_nba(parse_ltl(args.ltl))
    text = to_dot(nba)
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_render(args) -> int:
    from .plotting import render_all
    from .simulator import read_events, read_log

    scn = load_scenario(args.scenario)
    log_path = Path(args.log)
    rows = read_log(log_path)
    ev_path = log_path.with_name("events.jsonl")
    events = read_events(ev_path) if ev_path.exists() else []
    for p in render_all(scn, rows, events, args.out):
        print(p)
    return EXIT_OK


def cmd_oracle(args) -> int:
    from .interface import WorldTopology
    from .oracle import scenario_oracle
    from .world import WorldState

    scn = load_scenario(args.scenario)
    world = WorldState.initial(scn)
    world.localized = set(range(len(scn.familiar_obstacles)))
    answers = scenario_oracle(scn, world, h=args.resolution)
    topo = WorldTopology(scn)
    disagree = 0
    print(f"{'goal':<8} {'oracle':<22} {'topology':<22} agree")
    for name, ans in answers.items():
        c = scn.regions[name].centroid
        res = topo.check(world, world.position, scn.robot.radius, (c.x, c.y))
        mine = (res.is_feasible, bool(res.blocking))
        theirs = (ans.is_feasible, ans.has_blocking)
        ok = mine == theirs
        disagree += not ok
        print(f"{name:<8} {_pair(theirs):<22} {_pair(mine):<22} {'yes' if ok else 'NO'}")
    return EXIT_OK if not disagree else EXIT_FAILED


def _pair(v) -> str:
    feasible, blocking = v
    return "infeasible" if not feasible else ("feasible, blocked" if blocking else "feasible")


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="sim", description="Hybrid LTL mobile manipulation simulator")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="simulate a mission")
    r.add_argument("--scenario", required=True)
    r.add_argument("--ltl", required=True)
    r.add_argument("--hoa", help="use this automaton instead of translating the formula")
    r.add_argument("--out", required=True)
    r.add_argument("--dt", type=float, default=None)
    r.add_argument("--accept", type=int, default=1, help="accepting-edge traversals required")
    r.add_argument("--seed", type=int, default=0)
    r.add_argument("--no-frames", action="store_true", help="skip the SVG snapshots")
    r.set_defaults(func=cmd_run)

    c = sub.add_parser("check", help="print the task graph of a formula")
    c.add_argument("--ltl", required=True)
    c.add_argument("--hoa")
    c.add_argument("--dot")
    c.set_defaults(func=cmd_check)

    g = sub.add_parser("graph", help="write the automaton as DOT")
    g.add_argument("--ltl", required=True)
    g.add_argument("--hoa")
    g.add_argument("--out")
    g.set_defaults(func=cmd_graph)

    d = sub.add_parser("render", help="SVG snapshots of a logged run")
    d.add_argument("--log", required=True)
    d.add_argument("--scenario", required=True)
    d.add_argument("--out", required=True)
    d.set_defaults(func=cmd_render)

    o = sub.add_parser("oracle", help="flood-fill cross-check of the topology check")
    o.add_argument("--scenario", required=True)
    o.add_argument("--resolution", type=float, default=0.01)
    o.set_defaults(func=cmd_oracle)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except ScenarioError as exc:
        for line in exc.problems:
            print(f"scenario error: {line}", file=sys.stderr)
        return EXIT_INPUT
    except (LtlError, HoaError) as exc:
        print(f"formula error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except EmptyTaskGraph as exc:
        print(f"task graph is empty: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except TaskGraphError as exc:
        print(f"task graph error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (OSError, ValueError) as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
