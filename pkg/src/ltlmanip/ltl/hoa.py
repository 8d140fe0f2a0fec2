"""Import and export of automata in the HOA v1 interchange format.

Only state-based Büchi acceptance (``Inf(0)``) and the trivial ``t``
condition are accepted.  Edge labels must be explicit.
"""

from __future__ import annotations

import re
import shlex

from .nba import Cube, Guard, Nba
from .syntax import LtlError, Predicate


class HoaError(ValueError):
    pass


class UnsupportedAcceptance(HoaError):
    pass


_LABEL_TOKEN = re.compile(r"\s*(t|f|\d+|[!&|()])")


def _parse_label(text: str, ap: list) -> Guard:
    toks = []
    i = 0
    text = text.strip()
    while i < len(text):
        m = _LABEL_TOKEN.match(text, i)
        if not m:
            raise HoaError(f"bad label expression {text!r}")
        toks.append(m.group(1))
        i = m.end()
        while i < len(text) and text[i].isspace():
            i += 1
    pos = 0

    def peek():
        return toks[pos] if pos < len(toks) else None

    def take():
        nonlocal pos
        pos += 1
        return toks[pos - 1]

    # NNF-producing recursive descent: returns DNF for (neg ? not e : e)
    def disj(neg):
        parts = [conj(neg)]
        while peek() == "|":
            take()
            parts.append(conj(neg))
        return _combine(parts, "and" if neg else "or")

    def conj(neg):
        parts = [unary(neg)]
        while peek() == "&":
            take()
            parts.append(unary(neg))
        return _combine(parts, "or" if neg else "and")

    def unary(neg):
        tok = peek()
        if tok == "!":
            take()
            return unary(not neg)
        if tok == "(":
            take()
            g = disj(neg)
            if take() != ")":
                raise HoaError(f"unbalanced parentheses in {text!r}")
            return g
        if tok is None:
            raise HoaError(f"truncated label {text!r}")
        take()
        if tok == "t":
            return Guard.false() if neg else Guard.true()
        if tok == "f":
            return Guard.true() if neg else Guard.false()
        k = int(tok)
        if k >= len(ap):
            raise HoaError(f"atomic proposition {k} out of range")
        p = ap[k]
        return Guard(frozenset([Cube(neg=frozenset([p]))])) if neg else Guard.conj([p])

    g = disj(False)
    if pos != len(toks):
        raise HoaError(f"trailing tokens in label {text!r}")
    return g


def _combine(parts, how):
    out = parts[0]
    for p in parts[1:]:
        out = (out & p) if how == "and" else (out | p)
    return out


def _split_state_line(rest: str):
    label = None
    rest = rest.strip()
    if rest.startswith("["):
        end = rest.index("]")
        label = rest[1:end]
        rest = rest[end + 1:].strip()
    m = re.match(r"(\d+)\s*(\"[^\"]*\")?\s*(\{[^}]*\})?\s*$", rest)
    if not m:
        raise HoaError(f"bad State line: {rest!r}")
    acc = m.group(3)
    return label, int(m.group(1)), acc


def import_hoa(text: str) -> Nba:
    """Parse a HOA automaton into an :class:`Nba`."""
    lines = [ln.strip() for ln in text.splitlines()]
    lines = [ln for ln in lines if ln and not ln.startswith("/*")]
    if not lines or not lines[0].startswith("HOA:"):
        raise HoaError("missing 'HOA:' header")
    try:
        body_at = lines.index("--BODY--")
    except ValueError:
        raise HoaError("missing --BODY--") from None
    n_states = None
    starts: list[int] = []
    ap_names: list[str] = []
    acceptance = None
    for ln in lines[1:body_at]:
        key, _, value = ln.partition(":")
        value = value.strip()
        if key == "States":
            n_states = int(value)
        elif key == "Start":
            if "&" in value:
                raise HoaError("alternating start states are not supported")
            starts.append(int(value))
        elif key == "AP":
            parts = shlex.split(value)
            count = int(parts[0])
            ap_names = parts[1:]
            if len(ap_names) != count:
                raise HoaError("AP count does not match the listed names")
        elif key == "Acceptance":
            acceptance = " ".join(value.split())
    if n_states is None:
        raise HoaError("missing States header")
    if n_states == 0:
        raise HoaError("automaton has no states")
    if acceptance not in ("1 Inf(0)", "0 t"):
        raise UnsupportedAcceptance(f"only state-based Buchi acceptance is supported, got {acceptance!r}")
    try:
        ap = [Predicate.parse(name) for name in ap_names]
    except LtlError as exc:
        raise HoaError(f"atomic proposition is not a manipulation predicate: {exc}") from exc

    names = [f"q{i}" for i in range(n_states)]
    finals = set()
    transitions: dict = {q: [] for q in names}
    current = None
    for ln in lines[body_at + 1:]:
        if ln == "--END--":
            break
        if ln.startswith("State:"):
            label, idx, acc = _split_state_line(ln[len("State:"):])
            if label is not None:
                raise HoaError("state labels are not supported")
            if idx >= n_states:
                raise HoaError(f"state {idx} out of range")
            current = names[idx]
            if acc is not None and acc.strip("{} "):
                finals.add(current)
            continue
        if current is None:
            raise HoaError("edge before any State line")
        if not ln.startswith("["):
            raise HoaError("implicit edge labels are not supported")
        end = ln.index("]")
        guard = _parse_label(ln[1:end], ap)
        rest = ln[end + 1:].strip()
        m = re.match(r"(\d+)\s*(\{[^}]*\})?\s*$", rest)
        if not m:
            raise HoaError(f"bad edge {ln!r}")
        if m.group(2):
            raise UnsupportedAcceptance("transition-based acceptance is not supported")
        dest = int(m.group(1))
        if dest >= n_states:
            raise HoaError(f"edge target {dest} out of range")
        if guard.cubes:
            transitions[current].append((guard, names[dest]))
    else:
        raise HoaError("missing --END--")
    if acceptance == "0 t":
        finals = set(names)
    if not starts:
        raise HoaError("missing Start header")
    return Nba(
        states=tuple(names),
        initial=frozenset(names[s] for s in starts),
        finals=frozenset(finals),
        transitions={q: tuple(v) for q, v in transitions.items()},
        ap=tuple(sorted(ap)),
    )


def _format_label(g: Guard, index: dict) -> str:
    if g.is_true:
        return "t"
    if not g.cubes:
        return "f"
    cubes = []
    for c in sorted(g.cubes, key=lambda c: c.sort_key):
        lits = [str(index[p]) for p in sorted(c.pos)] + ["!" + str(index[p]) for p in sorted(c.neg)]
        cubes.append("&".join(lits))
    return " | ".join(cubes)


def export_hoa(nba: Nba, name: str = "") -> str:
    ap = list(nba.all_predicates())
    index = {p: i for i, p in enumerate(ap)}
    num = {q: i for i, q in enumerate(nba.states)}
    out = ["HOA: v1"]
    if name:
        out.append(f'name: "{name}"')
    out.append(f"States: {len(nba.states)}")
    for q in sorted(nba.initial, key=lambda q: num[q]):
        out.append(f"Start: {num[q]}")
    out.append("AP: " + " ".join([str(len(ap))] + [f'"{p}"' for p in ap]))
    out.append("acc-name: Buchi")
    out.append("Acceptance: 1 Inf(0)")
    out.append("properties: explicit-labels state-acc")
    out.append("--BODY--")
    for q in nba.states:
        out.append(f"State: {num[q]}" + (" {0}" if q in nba.finals else ""))
        for g, t in nba.edges(q):
            out.append(f"[{_format_label(g, index)}] {num[t]}")
    out.append("--END--")
    return "\n".join(out) + "\n"
