"""Büchi automata with Boolean-formula guards over manipulation predicates."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Mapping, Optional, Sequence

from .syntax import Predicate

Symbol = frozenset  # frozenset[Predicate]; the empty set is the empty symbol

EMPTY_SYMBOL: frozenset = frozenset()


def format_symbol(sym: Iterable[Predicate]) -> str:
    preds = sorted(sym)
    if not preds:
        return "empty"
    return "&".join(str(p) for p in preds)


@dataclass(frozen=True)
class Cube:
    """Conjunction of literals; ``neg`` is only non-empty for imported automata."""

    pos: frozenset = frozenset()
    neg: frozenset = frozenset()

    def satisfied_by(self, sym: frozenset) -> bool:
        return self.pos <= sym and not (self.neg & sym)

    def consistent(self) -> bool:
        return not (self.pos & self.neg)

    def __and__(self, other: "Cube") -> "Cube":
        return Cube(self.pos | other.pos, self.neg | other.neg)

    @property
    def sort_key(self) -> tuple:
        return (len(self.pos) + len(self.neg), sorted(p.sort_key for p in self.pos), sorted(p.sort_key for p in self.neg))

    def __str__(self) -> str:
        lits = [str(p) for p in sorted(self.pos)] + ["!" + str(p) for p in sorted(self.neg)]
        return " & ".join(lits) if lits else "true"


@dataclass(frozen=True)
class Guard:
    """Disjunction of cubes.  No cubes means false; one empty cube means true."""

    cubes: frozenset = frozenset()

    @classmethod
    def true(cls) -> "Guard":
        return cls(frozenset([Cube()]))

    @classmethod
    def false(cls) -> "Guard":
        return cls(frozenset())

    @classmethod
    def conj(cls, preds: Iterable[Predicate]) -> "Guard":
        return cls(frozenset([Cube(frozenset(preds))]))

    def satisfied_by(self, sym: frozenset) -> bool:
        return any(c.satisfied_by(sym) for c in self.cubes)

    @property
    def is_true(self) -> bool:
        return Cube() in self.cubes

    @property
    def has_negation(self) -> bool:
        return any(c.neg for c in self.cubes)

    def predicates(self) -> frozenset:
        out: set = set()
        for c in self.cubes:
            out |= c.pos | c.neg
        return frozenset(out)

    def __and__(self, other: "Guard") -> "Guard":
        return Guard(frozenset(a & b for a in self.cubes for b in other.cubes if (a & b).consistent()))

    def __or__(self, other: "Guard") -> "Guard":
        return Guard(self.cubes | other.cubes)

    def __str__(self) -> str:
        if not self.cubes:
            return "false"
        parts = sorted(self.cubes, key=lambda c: c.sort_key)
        if len(parts) == 1:
            return str(parts[0])
        return " | ".join(f"({c})" if len(c.pos) + len(c.neg) > 1 else str(c) for c in parts)


@dataclass(frozen=True)
class Nba:
    """Non-deterministic Büchi automaton.

    ``transitions[q]`` lists ``(guard, target)`` pairs; parallel edges between
    the same pair of states are allowed.
    """

    states: tuple
    initial: frozenset
    finals: frozenset
    transitions: Mapping[str, tuple]
    ap: tuple = ()
    labels: Mapping[str, str] = field(default_factory=dict)

    def __post_init__(self):
        known = set(self.states)
        if len(known) != len(self.states):
            raise ValueError("duplicate state ids")
        for q in self.initial | self.finals:
            if q not in known:
                raise ValueError(f"undeclared state {q!r}")
        for q, edges in self.transitions.items():
            if q not in known:
                raise ValueError(f"transition from undeclared state {q!r}")
            for g, t in edges:
                if t not in known:
                    raise ValueError(f"transition to undeclared state {t!r}")
                if not isinstance(g, Guard):
                    raise TypeError("guards must be Guard instances")

    def edges(self, q: str) -> tuple:
        return tuple(self.transitions.get(q, ()))

    def guard_between(self, q: str, t: str) -> Guard:
        """Disjunction of all guards on ``q -> t`` (false when absent)."""
        g = Guard.false()
        for guard, target in self.edges(q):
            if target == t:
                g = g | guard
        return g

    def successors(self, q: str, sym: frozenset) -> list:
        out = []
        for g, t in self.edges(q):
            if t not in out and g.satisfied_by(sym):
                out.append(t)
        return out

    def num_transitions(self) -> int:
        return sum(len(v) for v in self.transitions.values())

    def all_predicates(self) -> tuple:
        preds = set(self.ap)
        for edges in self.transitions.values():
            for g, _ in edges:
                preds |= g.predicates()
        return tuple(sorted(preds))


def accepts_lasso(nba: Nba, stem: Sequence[frozenset], loop: Sequence[frozenset]) -> bool:
    """Does ``nba`` accept the ultimately periodic word ``stem loop^omega``?"""
    if not loop:
        raise ValueError("loop must be non-empty")
    word = list(stem) + list(loop)
    n, back = len(word), len(stem)

    def succ(node):
        q, i = node
        j = i + 1 if i + 1 < n else back
        return [(t, j) for t in nba.successors(q, word[i])]

    start = [(q, 0) for q in sorted(nba.initial)]
    seen = set(start)
    stack = list(start)
    while stack:
        v = stack.pop()
        for w in succ(v):
            if w not in seen:
                seen.add(w)
                stack.append(w)
    for v in seen:
        if v[0] not in nba.finals:
            continue
        # accepting node on a cycle?
        inner = set()
        stack = succ(v)
        while stack:
            w = stack.pop()
            if w == v:
                return True
            if w not in inner:
                inner.add(w)
                stack.extend(succ(w))
    return False


def to_dot(nba: Nba, name: str = "nba") -> str:
    lines = [f"digraph {name} {{", "  rankdir=LR;", '  node [shape=circle];']
    for q in nba.states:
        shape = "doublecircle" if q in nba.finals else "circle"
        label = nba.labels.get(q, q)
        lines.append(f'  "{q}" [shape={shape}, label="{label}"];')
    for i, q in enumerate(sorted(nba.initial)):
        lines.append(f'  "__init{i}" [shape=point];')
        lines.append(f'  "__init{i}" -> "{q}";')
    for q in nba.states:
        for g, t in nba.edges(q):
            lines.append(f'  "{q}" -> "{t}" [label="{g}"];')
    lines.append("}")
    return "\n".join(lines) + "\n"


def rename_states(nba: Nba, mapping: Mapping[str, str]) -> Nba:
    return Nba(
        states=tuple(mapping[q] for q in nba.states),
        initial=frozenset(mapping[q] for q in nba.initial),
        finals=frozenset(mapping[q] for q in nba.finals),
        transitions={mapping[q]: tuple((g, mapping[t]) for g, t in edges) for q, edges in nba.transitions.items()},
        ap=nba.ap,
        labels={mapping[q]: v for q, v in nba.labels.items()},
    )


def state_key(q: str) -> tuple:
    """Natural sort key so that ``q10`` follows ``q9``; ``aux`` sorts first."""
    if q == "aux":
        return (0, "", 0)
    head = q.rstrip("0123456789")
    tail = q[len(head):]
    return (1, head, int(tail) if tail else -1)


def symbol_key(sym: frozenset) -> tuple:
    return (len(sym), sorted(p.sort_key for p in sym))


def find_state(nba: Nba, label: str) -> Optional[str]:
    for q, lab in nba.labels.items():
        if lab == label:
            return q
    return None
