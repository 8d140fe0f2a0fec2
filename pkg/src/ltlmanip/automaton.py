"""Pruned task graph over NBA states and the distance-to-acceptance metric.

Symbols are sets of predicates.  A symbol is feasible when the robot could
make it true in a single instant, which rules out any symbol with more than
one predicate.  The task graph keeps NBA states that the robot can *stay in*
and connects two such states when one feasible symbol, held for a few steps,
drives the automaton from one to the other without stopping in between.
"""

from __future__ import annotations

import json
import math
from collections import deque
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Optional

from .ltl.nba import EMPTY_SYMBOL, Guard, Nba, format_symbol, state_key, symbol_key
from .ltl.syntax import Predicate

AUX = "aux"
INF = math.inf


class TaskGraphError(ValueError):
    pass


class EmptyTaskGraph(TaskGraphError):
    pass


class UnknownVertex(TaskGraphError, KeyError):
    pass


def symbol_is_feasible(sym: Iterable[Predicate]) -> bool:
    """True iff the symbol asserts at most one predicate.

    Two predicates either name different regions (the robot would be in two
    places) or the same region with different actions, or the same action on
    two objects; all of these need two simultaneous actions.
    """
    return len(frozenset(sym)) <= 1


def candidate_symbols(ap: Iterable[Predicate]) -> list:
    """Every feasible symbol over ``ap``: the empty symbol then each singleton."""
    return [EMPTY_SYMBOL] + [frozenset([p]) for p in sorted(set(ap))]


def guard_is_feasible(guard: Guard) -> bool:
    """Some feasible symbol satisfies ``guard`` (decided per cube, no enumeration)."""
    for c in guard.cubes:
        if not c.pos:
            return True
        if len(c.pos) == 1 and symbol_is_feasible(c.pos) and not (c.pos & c.neg):
            return True
    return False


def feasible_symbols(guard: Guard, ap: Iterable[Predicate]) -> list:
    return [s for s in candidate_symbols(ap) if guard.satisfied_by(s)]


def prune_nba(n: Nba) -> Nba:
    """Remove transitions that no feasible symbol can enable."""
    return Nba(
        states=n.states,
        initial=n.initial,
        finals=n.finals,
        transitions={q: tuple((g, t) for g, t in n.edges(q) if guard_is_feasible(g)) for q in n.states},
        ap=n.ap,
        labels=dict(n.labels),
    )


def add_aux_state(n: Nba, pi0: Iterable[Predicate] = EMPTY_SYMBOL) -> Nba:
    """Prepend the auxiliary initial state.

    ``aux`` loops on true and moves to every original initial state on the
    initially satisfied symbol ``pi0`` (the empty symbol gives the guard true).
    """
    pi0 = frozenset(pi0)
    if not symbol_is_feasible(pi0):
        raise ValueError(f"initial symbol {format_symbol(pi0)} is infeasible")
    if AUX in n.states:
        raise ValueError("automaton already has an auxiliary state")
    edges = [(Guard.true(), AUX)] + [(Guard.conj(pi0), q) for q in sorted(n.initial, key=state_key)]
    transitions = {AUX: tuple(edges)}
    transitions.update({q: n.edges(q) for q in n.states})
    labels = dict(n.labels)
    labels[AUX] = "aux"
    return Nba(
        states=(AUX,) + tuple(n.states),
        initial=frozenset([AUX]),
        finals=n.finals,
        transitions=transitions,
        ap=tuple(sorted(set(n.ap) | pi0)),
        labels=labels,
    )


@dataclass(frozen=True)
class Witness:
    """One symbol realising an edge, with the run it induces."""

    symbol: frozenset
    run: tuple  # q, q1, ..., qK, qK
    accepting: bool
    formula: Guard  # conjunction of the guards along the run

    def __str__(self) -> str:
        return f"{format_symbol(self.symbol)} via {'-'.join(self.run)}"


@dataclass(frozen=True)
class Edge:
    source: str
    target: str
    witnesses: tuple

    @property
    def accepting(self) -> bool:
        return any(w.accepting for w in self.witnesses)

    @property
    def symbols(self) -> list:
        return [w.symbol for w in self.witnesses]


@dataclass(frozen=True)
class TaskGraph:
    vertices: tuple
    edges: Mapping[tuple, Edge]
    finals: frozenset
    ap: tuple
    dist_to_accepting: Mapping[str, float] = field(default_factory=dict)

    @property
    def accepting_vertices(self) -> frozenset:
        return frozenset(e.source for e in self.edges.values() if e.accepting)

    def successors(self, q: str) -> list:
        self._check(q)
        return sorted({t for (s, t) in self.edges if s == q}, key=state_key)

    def edge(self, q: str, t: str) -> Edge:
        try:
            return self.edges[(q, t)]
        except KeyError:
            raise TaskGraphError(f"no edge {q} -> {t}") from None

    def d_f(self, q: str) -> float:
        self._check(q)
        return self.dist_to_accepting[q]

    def _check(self, q: str) -> None:
        if q not in self.vertices:
            raise UnknownVertex(q)


def _self_loops(n: Nba, q: str, sym: frozenset) -> bool:
    return q in n.successors(q, sym)


def _reach_set(n: Nba) -> set:
    start = sorted(n.initial, key=state_key)
    seen = set(start)
    stack = list(start)
    while stack:
        q = stack.pop()
        for _, t in n.edges(q):
            if t not in seen:
                seen.add(t)
                stack.append(t)
    return seen


def _runs_from(n: Nba, q: str, sym: frozenset, max_k: int) -> dict:
    """Endpoints of single-symbol runs from ``q``.

    Returns ``{(target, accepting): run}`` keeping the shortest run for each
    key.  Intermediate states may not self-loop under ``sym``; the endpoint must.
    """
    found: dict = {}
    layer = {(q, False): (q,)}
    for k in range(1, max_k + 1):
        nxt: dict = {}
        for (s, acc), run in layer.items():
            if k > 1 and _self_loops(n, s, sym):
                continue
            for t in n.successors(s, sym):
                key = (t, acc or t in n.finals)
                if key not in nxt:
                    nxt[key] = run + (t,)
        for key, run in nxt.items():
            if _self_loops(n, key[0], sym) and key not in found:
                found[key] = run + (key[0],)
        layer = {key: run for key, run in nxt.items() if not _self_loops(n, key[0], sym)}
        if not layer:
            break
    return found


def _run_formula(n: Nba, run: tuple) -> Guard:
    g = Guard.true()
    for a, b in zip(run, run[1:]):
        g = g & n.guard_between(a, b)
    return g


def build_task_graph(n: Nba) -> TaskGraph:
    """Build the multi-hop task graph of a pruned NBA carrying ``aux``."""
    if AUX not in n.states or n.initial != frozenset([AUX]):
        raise TaskGraphError("the automaton needs the auxiliary initial state")
    for q in n.states:
        for g, _ in n.edges(q):
            if not guard_is_feasible(g):
                raise TaskGraphError("the automaton must be pruned first")
    ap = n.all_predicates()
    symbols = candidate_symbols(ap)
    reach = _reach_set(n)
    vertices = sorted(
        (q for q in reach if q == AUX or any(_self_loops(n, q, s) for s in symbols)),
        key=state_key,
    )
    vset = set(vertices)
    max_k = len(n.states)
    collected: dict = {}
    for q in vertices:
        for sym in symbols:
            found = _runs_from(n, q, sym, max_k)
            per_target: dict = {}
            for (t, acc), run in found.items():
                if t not in vset:
                    continue
                prev = per_target.get(t)
                if prev is None or (acc and not prev[0]):
                    per_target[t] = (acc, run)
            for t, (acc, run) in per_target.items():
                w = Witness(sym, run, acc, _run_formula(n, run))
                collected.setdefault((q, t), []).append(w)
    edges = {
        key: Edge(key[0], key[1], tuple(sorted(ws, key=lambda w: symbol_key(w.symbol))))
        for key, ws in sorted(collected.items(), key=lambda kv: (state_key(kv[0][0]), state_key(kv[0][1])))
    }
    if vset == {AUX}:
        raise EmptyTaskGraph("no automaton state can be reached and held by feasible symbols")
    g = TaskGraph(tuple(vertices), edges, n.finals, tuple(ap))
    dist = {q: _bfs_to_set(g, q, g.accepting_vertices) for q in vertices}
    return TaskGraph(tuple(vertices), edges, n.finals, tuple(ap), dist)


def _bfs(g: TaskGraph, q: str) -> dict:
    dist = {q: 0}
    queue = deque([q])
    adj: dict = {}
    for s, t in g.edges:
        adj.setdefault(s, []).append(t)
    while queue:
        v = queue.popleft()
        for w in adj.get(v, ()):
            if w not in dist:
                dist[w] = dist[v] + 1
                queue.append(w)
    return dist


def _bfs_to_set(g: TaskGraph, q: str, targets: frozenset) -> float:
    dist = _bfs(g, q)
    vals = [dist[t] for t in targets if t in dist]
    return min(vals) if vals else INF


def distance(g: TaskGraph, q: str, q2: str) -> float:
    """Hop count of the shortest path from ``q`` to ``q2`` (``inf`` if none)."""
    g._check(q)
    g._check(q2)
    return _bfs(g, q).get(q2, INF)


def distance_to_accepting(g: TaskGraph, q: str) -> float:
    """Distance from ``q`` to the nearest state with an outgoing accepting edge."""
    g._check(q)
    return _bfs_to_set(g, q, g.accepting_vertices)


def task_graph_from_formula(formula, pi0: Iterable[Predicate] = EMPTY_SYMBOL, nba: Optional[Nba] = None) -> TaskGraph:
    """Convenience pipeline: translate (unless ``nba`` given), prune, add aux, build."""
    from .ltl import translate_to_nba

    if nba is None:
        nba = translate_to_nba(formula)
    ap = set(nba.all_predicates())
    pi0 = frozenset(p for p in pi0 if p in ap)
    return build_task_graph(add_aux_state(prune_nba(nba), pi0))


def _fmt_dist(d: float):
    return None if d == INF else int(d)


def task_graph_to_dot(g: TaskGraph, name: str = "G") -> str:
    lines = [f"digraph {name} {{", "  rankdir=LR;"]
    vf = g.accepting_vertices
    for q in g.vertices:
        d = g.dist_to_accepting[q]
        shape = "doublecircle" if q in vf else "circle"
        lines.append(f'  "{q}" [shape={shape}, label="{q}\\ndF={"inf" if d == INF else int(d)}"];')
    for (s, t), e in g.edges.items():
        label = " / ".join(format_symbol(w.symbol) for w in e.witnesses)
        style = ', style=dashed, color=red' if e.accepting else ""
        lines.append(f'  "{s}" -> "{t}" [label="{label}"{style}];')
    lines.append("}")
    return "\n".join(lines) + "\n"


def task_graph_to_json(g: TaskGraph) -> str:
    doc = {
        "vertices": list(g.vertices),
        "accepting_vertices": sorted(g.accepting_vertices, key=state_key),
        "dist_to_accepting": {q: _fmt_dist(g.dist_to_accepting[q]) for q in g.vertices},
        "edges": [
            {
                "source": s,
                "target": t,
                "accepting": e.accepting,
                "witnesses": [
                    {"symbol": format_symbol(w.symbol), "run": list(w.run), "accepting": w.accepting, "formula": str(w.formula)}
                    for w in e.witnesses
                ],
            }
            for (s, t), e in g.edges.items()
        ],
    }
    return json.dumps(doc, indent=2, sort_keys=True)
