import itertools

import pytest

from oracles import lasso_words

from ltlmanip.ltl import (
    HoaError,
    Predicate,
    UnsupportedAcceptance,
    accepts_lasso,
    export_hoa,
    import_hoa,
    parse_ltl,
    translate_to_nba,
)

EVENTUALLY_L1 = """HOA: v1
States: 2
Start: 1
AP: 1 "pi(move,l1)"
acc-name: Buchi
Acceptance: 1 Inf(0)
--BODY--
State: 0 {0}
[t] 0
State: 1
[t] 1
[0] 0
--END--
"""

# hand-written state-based automaton for G F l1 & G F l2 (waits in 0 for l1, in 1 for l2)
RECURRENCE = """HOA: v1
name: "patrol"
States: 3
Start: 0
AP: 2 "pi(move,l1)" "pi(move,l2)"
Acceptance: 1 Inf(0)
--BODY--
State: 0
[t] 0
[0] 1
State: 1
[t] 1
[1] 2
State: 2 {0}
[t] 0
[0] 1
--END--
"""


def _alphabet(nba):
    preds = nba.all_predicates()
    return [frozenset()] + [frozenset([p]) for p in preds]


def _same_language(a, b, bound=4):
    alphabet = sorted(set(_alphabet(a)) | set(_alphabet(b)), key=lambda s: sorted(s))
    return all(accepts_lasso(a, s, l) == accepts_lasso(b, s, l) for s, l in lasso_words(alphabet, bound))


def _isomorphic(a, b):
    if len(a.states) != len(b.states) or len(a.finals) != len(b.finals):
        return False
    for perm in itertools.permutations(b.states):
        m = dict(zip(a.states, perm))
        if {m[q] for q in a.initial} != set(b.initial) or {m[q] for q in a.finals} != set(b.finals):
            continue
        if all(
            sorted((g.cubes, m[t]) for g, t in a.edges(q)) == sorted((g.cubes, t) for g, t in b.edges(m[q]))
            for q in a.states
        ):
            return True
    return False


def test_eventually_matches_internal_translation():
    ext = import_hoa(EVENTUALLY_L1)
    assert ext.ap == (Predicate.move("l1"),)
    assert _isomorphic(ext, translate_to_nba(parse_ltl("F pi(move,l1)")))


def test_recurrence_equivalent_to_internal_translation():
    ext = import_hoa(RECURRENCE)
    internal = translate_to_nba(parse_ltl("G F pi(move,l1) & G F pi(move,l2)"))
    assert _same_language(ext, internal)


@pytest.mark.parametrize(
    "formula",
    [
        "F pi(move,l1)",
        "G F pi(move,l1) & G F pi(move,l2)",
        "F (pi(grasp,o1) & F pi(release,o1,l2))",
        "pi(move,l1) U (pi(grasp,o1) | G pi(move,l2))",
    ],
)
def test_export_import_round_trip(formula):
    nba = translate_to_nba(parse_ltl(formula))
    back = import_hoa(export_hoa(nba))
    assert _isomorphic(back, nba) or _same_language(back, nba)
    assert export_hoa(back) == export_hoa(import_hoa(export_hoa(back)))


def test_zero_states_rejected():
    with pytest.raises(HoaError):
        import_hoa("HOA: v1\nStates: 0\nStart: 0\nAP: 0\nAcceptance: 1 Inf(0)\n--BODY--\n--END--\n")


@pytest.mark.parametrize("acc", ["2 Inf(0) & Inf(1)", "1 Fin(0)", "4 Inf(0) | Fin(1) & Inf(2) | Fin(3)"])
def test_non_buchi_acceptance_rejected(acc):
    text = EVENTUALLY_L1.replace("Acceptance: 1 Inf(0)", f"Acceptance: {acc}")
    with pytest.raises(UnsupportedAcceptance):
        import_hoa(text)


def test_transition_based_marks_rejected():
    text = EVENTUALLY_L1.replace("[0] 0", "[0] 0 {0}")
    with pytest.raises(UnsupportedAcceptance):
        import_hoa(text)


@pytest.mark.parametrize(
    "mutate",
    [
        lambda t: t.replace("HOA: v1\n", ""),
        lambda t: t.replace("--BODY--\n", ""),
        lambda t: t.replace("--END--\n", ""),
        lambda t: t.replace("[0] 0", "[0] 7"),
        lambda t: t.replace('"pi(move,l1)"', '"p"'),
        lambda t: t.replace("AP: 1", "AP: 2"),
        lambda t: t.replace("Start: 1\n", ""),
    ],
)
def test_malformed_input(mutate):
    with pytest.raises(HoaError):
        import_hoa(mutate(EVENTUALLY_L1))


def test_negated_labels_are_read():
    text = EVENTUALLY_L1.replace("[t] 1", "[!0] 1")
    nba = import_hoa(text)
    g = nba.guard_between("q1", "q1")
    assert g.has_negation
    assert g.satisfied_by(frozenset()) and not g.satisfied_by(frozenset([Predicate.move("l1")]))
