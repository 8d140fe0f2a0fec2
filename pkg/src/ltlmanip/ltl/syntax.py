"""Formulas over manipulation predicates: AST, parser and printer.

The accepted fragment has ``F`` (eventually), ``G`` (always), ``U`` (until),
``&`` and ``|`` over atoms ``pi(kind, ...)``.  Next and negation are rejected
with a semantic error.  Binding strength, loosest first: ``|``, ``&``, ``U``
(right associative), then the unary operators.
"""

from __future__ import annotations

import enum
import re
from dataclasses import dataclass
from typing import Iterator, Optional, Union


class ActionKind(enum.Enum):
    MOVE = "move"
    GRASP = "grasp"
    RELEASE = "release"

    @property
    def index(self) -> int:
        return {"move": 1, "grasp": 2, "release": 3}[self.value]


_KIND_ALIASES = {
    "move": ActionKind.MOVE,
    "a1": ActionKind.MOVE,
    "grasp": ActionKind.GRASP,
    "a2": ActionKind.GRASP,
    "release": ActionKind.RELEASE,
    "a3": ActionKind.RELEASE,
}


class LtlError(ValueError):
    """Base class for formula errors; ``pos`` is a character offset or None."""

    def __init__(self, message: str, pos: Optional[int] = None):
        self.pos = pos
        where = f" at position {pos}" if pos is not None else ""
        super().__init__(f"{message}{where}")


class LtlSyntaxError(LtlError):
    pass


class LtlSemanticError(LtlError):
    pass


@dataclass(frozen=True, order=False)
class Predicate:
    """Atomic predicate ``pi^{a_k(object, region)}``."""

    kind: ActionKind
    obj: Optional[str] = None
    region: Optional[str] = None

    def __post_init__(self):
        problem = predicate_problem(self.kind, self.obj, self.region)
        if problem:
            raise LtlSemanticError(problem)

    @classmethod
    def move(cls, region: str) -> "Predicate":
        return cls(ActionKind.MOVE, None, region)

    @classmethod
    def grasp(cls, obj: str) -> "Predicate":
        return cls(ActionKind.GRASP, obj, None)

    @classmethod
    def release(cls, obj: str, region: str) -> "Predicate":
        return cls(ActionKind.RELEASE, obj, region)

    @classmethod
    def parse(cls, text: str) -> "Predicate":
        f = parse_ltl(text)
        if not isinstance(f, Atom):
            raise LtlSyntaxError(f"not a single predicate: {text!r}")
        return f.pred

    @property
    def sort_key(self) -> tuple:
        return (self.kind.index, self.obj or "", self.region or "")

    def __lt__(self, other: "Predicate") -> bool:
        return self.sort_key < other.sort_key

    def __str__(self) -> str:
        args = [a for a in (self.obj, self.region) if a is not None]
        return "pi(" + ",".join([self.kind.value] + args) + ")"


def predicate_problem(kind: ActionKind, obj: Optional[str], region: Optional[str]) -> Optional[str]:
    if kind is ActionKind.MOVE and (obj is not None or region is None):
        return "move predicates take exactly one region"
    if kind is ActionKind.GRASP and (obj is None or region is not None):
        return "grasp predicates take exactly one object"
    if kind is ActionKind.RELEASE and (obj is None or region is None):
        return "release predicates take an object and a region"
    return None


class Formula:
    """Base for AST nodes.  Nodes are immutable and hashable."""

    def __str__(self) -> str:
        return format_formula(self)


@dataclass(frozen=True)
class TrueF(Formula):
    """Constant true.  Never produced by the parser; used by translation."""


@dataclass(frozen=True)
class Atom(Formula):
    pred: Predicate


@dataclass(frozen=True)
class And(Formula):
    left: Formula
    right: Formula


@dataclass(frozen=True)
class Or(Formula):
    left: Formula
    right: Formula


@dataclass(frozen=True)
class Eventually(Formula):
    operand: Formula


@dataclass(frozen=True)
class Always(Formula):
    operand: Formula


@dataclass(frozen=True)
class Until(Formula):
    left: Formula
    right: Formula


LtlFormula = Union[TrueF, Atom, And, Or, Eventually, Always, Until]


def format_formula(f: Formula) -> str:
    match f:
        case TrueF():
            return "true"
        case Atom(p):
            return str(p)
        case Eventually(a):
            return f"F {format_formula(a)}"
        case Always(a):
            return f"G {format_formula(a)}"
        case And(a, b):
            return f"({format_formula(a)} & {format_formula(b)})"
        case Or(a, b):
            return f"({format_formula(a)} | {format_formula(b)})"
        case Until(a, b):
            return f"({format_formula(a)} U {format_formula(b)})"
    raise TypeError(f"not a formula node: {f!r}")


def atoms(f: Formula) -> list[Predicate]:
    """Distinct predicates of ``f`` in canonical order."""
    return sorted(set(_walk_atoms(f)))


def _walk_atoms(f: Formula) -> Iterator[Predicate]:
    match f:
        case Atom(p):
            yield p
        case Eventually(a) | Always(a):
            yield from _walk_atoms(a)
        case And(a, b) | Or(a, b) | Until(a, b):
            yield from _walk_atoms(a)
            yield from _walk_atoms(b)


def atom_count(f: Formula) -> int:
    """Number of atom leaves (with repetition)."""
    return sum(1 for _ in _walk_atoms(f))


# ---------------------------------------------------------------- parsing

_TOKEN_RE = re.compile(r"\s*(?:(?P<ident>[A-Za-z_][A-Za-z0-9_]*)|(?P<op>&&|\|\||[()&|,!~]))")


@dataclass(frozen=True)
class _Tok:
    kind: str  # "ident", "op", "eof"
    text: str
    pos: int


def _tokenize(text: str) -> list[_Tok]:
    toks = []
    i = 0
    while i < len(text):
        if text[i].isspace():
            i += 1
            continue
        m = _TOKEN_RE.match(text, i)
        if not m or m.end() == i:
            raise LtlSyntaxError(f"unexpected character {text[i]!r}", i)
        kind = "ident" if m.group("ident") else "op"
        tok = m.group(kind)
        toks.append(_Tok(kind, {"&&": "&", "||": "|", "~": "!"}.get(tok, tok), m.start(kind)))
        i = m.end()
    toks.append(_Tok("eof", "", len(text)))
    return toks


class _Parser:
    def __init__(self, text: str):
        self.toks = _tokenize(text)
        self.i = 0

    @property
    def cur(self) -> _Tok:
        return self.toks[self.i]

    def take(self) -> _Tok:
        t = self.toks[self.i]
        self.i += 1
        return t

    def expect(self, text: str) -> _Tok:
        t = self.take()
        if t.text != text:
            got = t.text or "end of input"
            raise LtlSyntaxError(f"expected {text!r}, got {got!r}", t.pos)
        return t

    def formula(self) -> Formula:
        left = self.conj()
        while self.cur.text == "|":
            self.take()
            left = Or(left, self.conj())
        return left

    def conj(self) -> Formula:
        left = self.until()
        while self.cur.text == "&":
            self.take()
            left = And(left, self.until())
        return left

    def until(self) -> Formula:
        left = self.unary()
        if self.cur.kind == "ident" and self.cur.text == "U":
            self.take()
            return Until(left, self.until())
        return left

    def unary(self) -> Formula:
        t = self.cur
        if t.kind == "ident" and t.text in ("F", "G"):
            self.take()
            inner = self.unary()
            return Eventually(inner) if t.text == "F" else Always(inner)
        if t.text == "!":
            raise LtlSemanticError("negation is not allowed in mission formulas", t.pos)
        if t.kind == "ident" and t.text == "X":
            raise LtlSemanticError("the next operator is not allowed in mission formulas", t.pos)
        return self.primary()

    def primary(self) -> Formula:
        t = self.cur
        if t.text == "(":
            self.take()
            f = self.formula()
            self.expect(")")
            return f
        if t.kind == "ident" and t.text == "pi":
            return self.atom()
        if t.kind == "ident" and t.text == "true":
            self.take()
            return TrueF()
        got = t.text or "end of input"
        raise LtlSyntaxError(f"expected a predicate, an operator or '(', got {got!r}", t.pos)

    def atom(self) -> Atom:
        start = self.take().pos
        self.expect("(")
        kt = self.take()
        if kt.kind != "ident":
            raise LtlSyntaxError("expected an action kind", kt.pos)
        kind = _KIND_ALIASES.get(kt.text.lower())
        if kind is None:
            raise LtlSemanticError(f"unknown action kind {kt.text!r}", kt.pos)
        args = []
        while self.cur.text == ",":
            self.take()
            at = self.take()
            if at.kind != "ident":
                raise LtlSyntaxError("expected an identifier", at.pos)
            args.append(at.text)
        self.expect(")")
        if len(args) > 2:
            raise LtlSemanticError("a predicate takes at most two arguments", start)
        if kind is ActionKind.MOVE:
            obj, region = None, (args[0] if len(args) == 1 else None)
            if len(args) != 1:
                raise LtlSemanticError(predicate_problem(kind, None, None), start)
        elif kind is ActionKind.GRASP:
            if len(args) != 1:
                raise LtlSemanticError(predicate_problem(kind, None, "x"), start)
            obj, region = args[0], None
        else:
            if len(args) != 2:
                raise LtlSemanticError(predicate_problem(kind, None, None), start)
            obj, region = args
        return Atom(Predicate(kind, obj, region))


def parse_ltl(text: str) -> Formula:
    """Parse a mission formula.

    >>> str(parse_ltl("F pi(move, l1)"))
    'F pi(move,l1)'
    """
    p = _Parser(text)
    f = p.formula()
    if p.cur.kind != "eof":
        raise LtlSyntaxError(f"unexpected {p.cur.text!r}", p.cur.pos)
    return f
