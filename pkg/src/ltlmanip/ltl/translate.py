"""Formula to Büchi automaton translation.

A tableau expansion produces a transition-based generalized Büchi automaton
whose states are sets of pending obligations; one acceptance set per
eventuality (``U``/``F`` subformula) collects the transitions that do not
postpone it.  The automaton is reduced (dominated transitions removed,
bisimilar states merged) and degeneralized with a level counter.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from typing import Callable, Hashable, Iterable

from .nba import Guard, Nba, symbol_key
from .syntax import Always, And, Atom, Eventually, Formula, Or, TrueF, Until, atoms, format_formula


@dataclass(frozen=True)
class _Term:
    now: frozenset  # predicates that must hold in this step
    nxt: frozenset  # obligations for the next state
    post: frozenset  # eventualities postponed by this choice

    def __mul__(self, other: "_Term") -> "_Term":
        return _Term(self.now | other.now, self.nxt | other.nxt, self.post | other.post)


_UNIT = _Term(frozenset(), frozenset(), frozenset())


def _expand(f: Formula, memo: dict) -> tuple:
    if f in memo:
        return memo[f]
    match f:
        case TrueF():
            out = [_UNIT]
        case Atom(p):
            out = [_Term(frozenset([p]), frozenset(), frozenset())]
        case And(a, b):
            out = [x * y for x in _expand(a, memo) for y in _expand(b, memo)]
        case Or(a, b):
            out = list(_expand(a, memo)) + list(_expand(b, memo))
        case Until(a, b):
            wait = _Term(frozenset(), frozenset([f]), frozenset([f]))
            out = list(_expand(b, memo)) + [x * wait for x in _expand(a, memo)]
        case Eventually(a):
            out = list(_expand(a, memo)) + [_Term(frozenset(), frozenset([f]), frozenset([f]))]
        case Always(a):
            keep = _Term(frozenset(), frozenset([f]), frozenset())
            out = [x * keep for x in _expand(a, memo)]
        case _:
            raise TypeError(f"unsupported node {f!r}")
    memo[f] = tuple(dict.fromkeys(out))
    return memo[f]


def _eventualities(f: Formula) -> list:
    out: list = []

    def visit(g):
        match g:
            case Until(a, b):
                if g not in out:
                    out.append(g)
                visit(a)
                visit(b)
            case Eventually(a):
                if g not in out:
                    out.append(g)
                visit(a)
            case Always(a):
                visit(a)
            case And(a, b) | Or(a, b):
                visit(a)
                visit(b)

    visit(f)
    return out


def _state_name(s: frozenset) -> str:
    return "{" + ", ".join(sorted(format_formula(g) for g in s)) + "}"


# A generic automaton used between stages: state -> list of (now, target, acc).
_Aut = dict


def _remove_dominated(edges: Iterable[tuple]) -> list:
    """Drop (now, tgt, acc) edges implied by a weaker-guarded edge to the same target."""
    edges = list(dict.fromkeys(edges))
    keep = []
    for e in edges:
        now, tgt, acc = e
        dominated = any(
            o is not e and o != e and o[1] == tgt and o[0] <= now and o[2] >= acc
            for o in edges
        )
        if not dominated:
            keep.append(e)
    return keep


def _minimize(aut: _Aut, initial: Hashable, color: Callable[[Hashable], Hashable]) -> tuple:
    """Merge bisimilar states (same colour, same edge signature up to class)."""
    states = list(aut)
    cls = {q: color(q) for q in states}
    while True:
        sig = {}
        for q in states:
            edges = _remove_dominated((now, cls[t], acc) for now, t, acc in aut[q])
            sig[q] = (cls[q], frozenset(edges))
        ids: dict = {}
        new = {q: ids.setdefault(sig[q], len(ids)) for q in states}
        if len(set(new.values())) == len(set(cls.values())):
            cls = new
            break
        cls = new
    rep = {}
    for q in states:
        rep.setdefault(cls[q], q)
    out = {}
    for c, q in rep.items():
        out[c] = _remove_dominated((now, cls[t], acc) for now, t, acc in aut[q])
    return out, cls[initial], {c: color(q) for c, q in rep.items()}, rep


def _reachable(aut: _Aut, initial) -> list:
    seen = [initial]
    index = {initial}
    i = 0
    while i < len(seen):
        q = seen[i]
        i += 1
        for _, t, _ in aut[q]:
            if t not in index:
                index.add(t)
                seen.append(t)
    return seen


def _trim(aut: _Aut, initial, finals: set) -> _Aut:
    """Keep only states that can reach an accepting cycle."""
    rev: dict = {q: set() for q in aut}
    for q, edges in aut.items():
        for _, t, _ in edges:
            rev[t].add(q)
    # accepting states lying on a cycle
    good = set()
    for f in finals:
        stack = [t for _, t, _ in aut[f]]
        seen = set()
        while stack:
            v = stack.pop()
            if v == f:
                good.add(f)
                break
            if v not in seen:
                seen.add(v)
                stack.extend(t for _, t, _ in aut[v])
    live = set(good)
    stack = list(good)
    while stack:
        v = stack.pop()
        for u in rev[v]:
            if u not in live:
                live.add(u)
                stack.append(u)
    live.add(initial)
    return {q: [e for e in aut[q] if e[1] in live] for q in aut if q in live}


def translate_to_nba(f: Formula) -> Nba:
    """Translate a validated mission formula into an equivalent NBA.

    States are named ``q0, q1, ...`` in breadth-first order from the unique
    initial state ``q0``; guards are conjunctions of predicates (or true).
    """
    evs = _eventualities(f)
    n = len(evs)
    memo: dict = {}

    # tableau -> transition-based generalized automaton
    init = frozenset([f])
    tgba: _Aut = {}
    queue = deque([init])
    while queue:
        s = queue.popleft()
        if s in tgba:
            continue
        terms = [_UNIT]
        for g in sorted(s, key=format_formula):
            terms = [x * y for x in terms for y in _expand(g, memo)]
        edges = []
        for t in dict.fromkeys(terms):
            acc = frozenset(i for i, u in enumerate(evs) if u not in t.post)
            edges.append((t.now, t.nxt, acc))
            if t.nxt not in tgba:
                queue.append(t.nxt)
        tgba[s] = _remove_dominated(edges)

    tg, tg_init, _, tg_rep = _minimize(tgba, init, lambda q: 0)

    # degeneralize with a level counter; level n marks accepting states
    if n == 0:
        ba = {(c, 0): [(now, (t, 0), frozenset()) for now, t, _ in edges] for c, edges in tg.items()}
        finals = set(ba)
    else:
        ba = {}
        queue = deque([(tg_init, 0)])
        while queue:
            node = queue.popleft()
            if node in ba:
                continue
            c, j = node
            base = 0 if j == n else j
            edges = []
            for now, t, acc in tg[c]:
                k = base
                while k < n and k in acc:
                    k += 1
                edges.append((now, (t, k), frozenset()))
                queue.append((t, k))
            ba[node] = _remove_dominated(edges)
        finals = {q for q in ba if q[1] == n}

    ba_init = (tg_init, 0)
    ba = {q: ba[q] for q in _reachable(ba, ba_init)}
    finals &= set(ba)
    mini, m_init, colors, m_rep = _minimize(ba, ba_init, lambda q: q in finals)
    m_finals = {c for c, fin in colors.items() if fin}
    mini = _trim(mini, m_init, m_finals)
    m_finals &= set(mini)

    def label(c):
        tg_state, level = m_rep[c]
        return f"{_state_name(tg_rep[tg_state])}/{level}"

    # breadth-first naming with deterministic edge order
    order = [m_init]
    seen = {m_init}
    i = 0
    while i < len(order):
        c = order[i]
        i += 1
        for now, t, _ in sorted(mini[c], key=lambda e: symbol_key(e[0])):
            if t not in seen:
                seen.add(t)
                order.append(t)
    name = {c: f"q{k}" for k, c in enumerate(order)}
    transitions = {}
    for c in order:
        edges = sorted(mini[c], key=lambda e: (symbol_key(e[0]), int(name[e[1]][1:])))
        transitions[name[c]] = tuple((Guard.conj(now), name[t]) for now, t, _ in edges)
    return Nba(
        states=tuple(name[c] for c in order),
        initial=frozenset([name[m_init]]),
        finals=frozenset(name[c] for c in order if c in m_finals),
        transitions=transitions,
        ap=tuple(atoms(f)),
        labels={name[c]: label(c) for c in order},
    )
