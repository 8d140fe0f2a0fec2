"""Online selection of automaton targets and symbols over a task graph.

The controller walks the task graph one hop at a time, always towards the
set of states with an outgoing accepting edge.  When the physical layer
reports that the requested symbol cannot be realised, the pair
``(target, symbol)`` is marked exhausted and an alternative is tried.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Callable, Optional, Union

from .automaton import INF, TaskGraph, TaskGraphError
from .ltl.nba import format_symbol, state_key, symbol_key

SymbolCost = Callable[[frozenset], float]


class NoCandidate(TaskGraphError):
    """No successor or symbol is left to try from the current state."""


class SymbolMismatch(ValueError):
    pass


@dataclass(frozen=True)
class MissionFailure:
    state: str
    reason: str
    accept_count: int = 0

    def __str__(self) -> str:
        return f"mission infeasible at {self.state}: {self.reason}"


@dataclass(frozen=True)
class ControllerState:
    current: str
    target: Optional[str] = None
    pending_symbol: Optional[frozenset] = None
    exhausted: frozenset = frozenset()  # (target, symbol) pairs for ``current``
    accept_count: int = 0
    events: tuple = field(default=(), compare=False)


def _in_accepting_set(g: TaskGraph, q: str) -> bool:
    return q in g.accepting_vertices


def _candidate_symbols(g: TaskGraph, q: str, t: str, exhausted, require_accepting: bool) -> list:
    edge = g.edges.get((q, t))
    if edge is None:
        return []
    return [
        w.symbol
        for w in edge.witnesses
        if (t, w.symbol) not in exhausted and (w.accepting or not require_accepting)
    ]


def select_next_state(g: TaskGraph, cs: ControllerState) -> str:
    """Pick the next target: one hop closer to acceptance, or an accepting edge."""
    q = cs.current
    d = g.d_f(q)
    if d == INF:
        raise NoCandidate(f"no accepting edge is reachable from {q}")
    accepting_here = _in_accepting_set(g, q)
    succ = g.successors(q)
    if accepting_here:
        # an accepting hop into a dead end would end the mission after one acceptance
        succ = sorted(succ, key=lambda t: g.d_f(t) == INF)
    for t in succ:
        if accepting_here:
            ok = bool(_candidate_symbols(g, q, t, cs.exhausted, True))
        else:
            ok = g.d_f(t) == d - 1 and bool(_candidate_symbols(g, q, t, cs.exhausted, False))
        if ok:
            return t
    raise NoCandidate(f"every successor of {q} has been exhausted")


def select_symbol(
    g: TaskGraph,
    q: str,
    q_next: str,
    exhausted=frozenset(),
    *,
    require_accepting: Optional[bool] = None,
    cost: Optional[SymbolCost] = None,
) -> frozenset:
    """A feasible witness symbol for ``q -> q_next`` that has not been exhausted.

    ``cost`` ranks the candidates (e.g. distance from the robot to the
    symbol's grounded goal); ties fall back to the canonical symbol order.
    """
    if require_accepting is None:
        require_accepting = _in_accepting_set(g, q)
    cands = _candidate_symbols(g, q, q_next, exhausted, require_accepting)
    if not cands:
        raise NoCandidate(f"no symbol left for {q} -> {q_next}")
    if cost is None:
        return min(cands, key=symbol_key)
    return min(cands, key=lambda s: (cost(s), symbol_key(s)))


def _plan(g: TaskGraph, cs: ControllerState, cost: Optional[SymbolCost]) -> Union[ControllerState, MissionFailure]:
    try:
        t = select_next_state(g, cs)
        sym = select_symbol(g, cs.current, t, cs.exhausted, cost=cost)
    except NoCandidate as exc:
        return MissionFailure(cs.current, str(exc), cs.accept_count)
    line = f"SYMBOLIC state={cs.current} target={t} symbol={format_symbol(sym)} dF={_fmt(g.d_f(cs.current))}"
    return replace(cs, target=t, pending_symbol=sym, events=(line,))


def _fmt(d: float) -> str:
    return "inf" if d == INF else str(int(d))


def start(g: TaskGraph, initial: str = "aux", cost: Optional[SymbolCost] = None) -> Union[ControllerState, MissionFailure]:
    return _plan(g, ControllerState(initial), cost)


def advance(
    g: TaskGraph, cs: ControllerState, achieved: frozenset, cost: Optional[SymbolCost] = None
) -> Union[ControllerState, MissionFailure]:
    """Commit the pending hop once its symbol has been realised."""
    if cs.target is None or cs.pending_symbol is None:
        raise SymbolMismatch("no pending symbol to advance on")
    if frozenset(achieved) != cs.pending_symbol:
        raise SymbolMismatch(
            f"achieved {format_symbol(achieved)} but {format_symbol(cs.pending_symbol)} was pending"
        )
    edge = g.edge(cs.current, cs.target)
    accepted = any(w.symbol == cs.pending_symbol and w.accepting for w in edge.witnesses)
    count = cs.accept_count + int(accepted)
    lines = (f"SYMBOLIC accept #{count}",) if accepted else ()
    nxt = ControllerState(cs.target, accept_count=count)
    out = _plan(g, nxt, cost)
    if isinstance(out, ControllerState):
        out = replace(out, events=lines + out.events)
    else:
        out = replace(out, accept_count=count)
    return out


def report_infeasible(
    g: TaskGraph, cs: ControllerState, cost: Optional[SymbolCost] = None
) -> Union[ControllerState, MissionFailure]:
    """Mark the pending (target, symbol) exhausted and look for an alternative."""
    if cs.target is None or cs.pending_symbol is None:
        return MissionFailure(cs.current, "nothing pending", cs.accept_count)
    line = (
        f"SYMBOLIC infeasible state={cs.current} target={cs.target} "
        f"symbol={format_symbol(cs.pending_symbol)}"
    )
    exhausted = cs.exhausted | {(cs.target, cs.pending_symbol)}
    base = replace(cs, exhausted=exhausted)
    # same target first, then any other admissible target
    try:
        sym = select_symbol(g, cs.current, cs.target, exhausted, cost=cost)
        nxt = f"SYMBOLIC state={cs.current} target={cs.target} symbol={format_symbol(sym)} dF={_fmt(g.d_f(cs.current))}"
        return replace(base, pending_symbol=sym, events=(line, nxt))
    except NoCandidate:
        pass
    out = _plan(g, replace(base, target=None, pending_symbol=None), cost)
    if isinstance(out, ControllerState):
        out = replace(out, events=(line,) + out.events)
    return out


def candidate_targets(g: TaskGraph, q: str) -> list:
    """All targets the controller may pick from ``q`` ignoring exhaustion (for audits)."""
    out = []
    for t in sorted(g.successors(q), key=state_key):
        if _in_accepting_set(g, q):
            if _candidate_symbols(g, q, t, frozenset(), True):
                out.append(t)
        elif g.d_f(q) != INF and g.d_f(t) == g.d_f(q) - 1:
            out.append(t)
    return out
