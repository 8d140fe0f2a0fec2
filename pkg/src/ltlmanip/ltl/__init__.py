"""Mission formulas and their Büchi automata."""

from .hoa import HoaError, UnsupportedAcceptance, export_hoa, import_hoa
from .nba import EMPTY_SYMBOL, Cube, Guard, Nba, accepts_lasso, format_symbol, state_key, symbol_key, to_dot
from .syntax import (
    ActionKind,
    Always,
    And,
    Atom,
    Eventually,
    Formula,
    LtlError,
    LtlSemanticError,
    LtlSyntaxError,
    Or,
    Predicate,
    TrueF,
    Until,
    atom_count,
    atoms,
    format_formula,
    parse_ltl,
)
from .translate import translate_to_nba

__all__ = [
    "ActionKind", "Always", "And", "Atom", "Cube", "EMPTY_SYMBOL", "Eventually", "Formula", "Guard",
    "HoaError", "LtlError", "LtlSemanticError", "LtlSyntaxError", "Nba", "Or", "Predicate", "TrueF",
    "UnsupportedAcceptance", "Until", "accepts_lasso", "atom_count", "atoms", "export_hoa",
    "format_formula", "format_symbol", "import_hoa", "parse_ltl", "state_key", "symbol_key", "to_dot",
    "translate_to_nba",
]
