"""
Core model: limit values, satisfaction, lub and entailment over pseudo-interpretations.
"""

from limitlog.errors import ContractViolation
from limitlog.model import (ALL_INTS, AllInts, Atom, Comparison, Fact, Finite, Literal, PredicateKind,
                            PseudoInterpretation, Rule, better, entails, preceq, satisfies, satisfies_lub,
                            step_of, unit_size)
from limitlog.terms import (BinOp, Int, LinearForm, Obj, Var, evaluate, format_term, linear_form, simplify,
                            to_polynomial)
from limitlog.testing import main

MIN, MAX = PredicateKind.MIN, PredicateKind.MAX


def pseudo(*facts, **kinds) -> PseudoInterpretation:
    types = {name: PredicateKind(kind) for name, kind in kinds.items()}
    return PseudoInterpretation.from_facts(facts, types)


def atom(predicate, *objects, value=None) -> Atom:
    numeric = value if value is None or isinstance(value, AllInts) else Int(value)
    return Atom(predicate, tuple(Obj(o) for o in objects), numeric)


# =============================================================================
# LIMIT VALUES
# =============================================================================

def test_preceq_follows_the_limit_direction():
    assert preceq(MAX, 3, 5) and not preceq(MAX, 6, 5)
    assert preceq(MIN, 6, 5) and not preceq(MIN, 3, 5)
    assert step_of(MAX) == 1 and step_of(MIN) == -1


def test_better_takes_the_optimal_value_and_all_ints_absorbs():
    assert better(MAX, Finite(3), Finite(7)) == Finite(7)
    assert better(MIN, Finite(3), Finite(7)) == Finite(3)
    assert better(MIN, Finite(3), ALL_INTS) == ALL_INTS
    assert better(MAX, ALL_INTS, Finite(9)) == ALL_INTS


# =============================================================================
# SATISFACTION
# =============================================================================

def test_satisfies_min_closure():
    J = pseudo(Fact("d", ("a", "c"), 3), d="min")
    assert satisfies(J, atom("d", "a", "c", value=5))
    assert satisfies(J, atom("d", "a", "c", value=3))
    assert not satisfies(J, atom("d", "a", "c", value=2))


def test_satisfies_all_ints_entry():
    J = pseudo(Fact("p", ("a",), ALL_INTS), p="max")
    assert satisfies(J, atom("p", "a", value=-10 ** 9))
    assert satisfies(J, atom("p", "a", value=10 ** 12))


def test_negation_is_closed_world():
    J = pseudo()
    assert satisfies(J, Literal(atom("edge", "a", "b", value=1), positive=False))
    assert not satisfies(J, atom("edge", "a", "b", value=1))


def test_ordinary_and_object_facts_are_membership():
    J = pseudo(Fact("edge", ("a", "b"), 1), Fact("node", ("a",)))
    assert satisfies(J, atom("edge", "a", "b", value=1))
    assert not satisfies(J, atom("edge", "a", "b", value=2))
    assert satisfies(J, atom("node", "a"))
    assert not satisfies(J, atom("node", "b"))


def test_ground_comparisons_are_evaluated():
    J = pseudo()
    assert satisfies(J, Comparison("<", Int(2), BinOp("+", Int(1), Int(2))))
    assert not satisfies(J, Comparison("<", Int(3), Int(3)))
    assert satisfies(J, Comparison("<=", Int(3), Int(3)))


def test_satisfies_rejects_non_ground_input():
    J = pseudo(Fact("d", ("a",), 1), d="min")
    try:
        satisfies(J, Atom("d", (Obj("a"),), Var("M")))
    except ContractViolation:
        pass
    else:
        raise AssertionError("a non-ground atom was accepted")


def test_comparisons_cannot_be_negated():
    try:
        Literal(Comparison("<", Int(1), Int(2)), positive=False)
    except ContractViolation:
        return
    raise AssertionError("negated comparison was accepted")


def test_satisfies_lub_is_exact_entry():
    J = pseudo(Fact("q", ("a",), 3), q="max")
    assert satisfies_lub(J, "q", ("a",), 3)
    assert not satisfies_lub(J, "q", ("a",), 2)
    J = pseudo(Fact("q", ("a",), ALL_INTS), q="max")
    assert not any(satisfies_lub(J, "q", ("a",), k) for k in range(-5, 6))


def test_satisfies_lub_matches_its_expansion():
    for kind in ("max", "min"):
        t = step_of(PredicateKind(kind))
        J = pseudo(Fact("q", ("a",), 4), q=kind)
        for k in range(-3, 12):
            expanded = (satisfies(J, atom("q", "a", value=k))
                        and not satisfies(J, atom("q", "a", value=k + t)))
            assert satisfies_lub(J, "q", ("a",), k) == expanded, (kind, k)


def test_entails_star_facts():
    assert entails(pseudo(Fact("q", ("a",), ALL_INTS), q="max"), Fact("q", ("a",), ALL_INTS))
    J = pseudo(Fact("q", ("a",), 7), q="max")
    assert not entails(J, Fact("q", ("a",), ALL_INTS))
    assert entails(J, Fact("q", ("a",), 5))
    assert not entails(J, Fact("q", ("a",), 8))


# =============================================================================
# PSEUDO-INTERPRETATIONS
# =============================================================================

def test_merge_keeps_one_entry_per_slot():
    J = pseudo(Fact("q", ("a",), 3), Fact("q", ("a",), 7), Fact("q", ("b",), 1), q="max")
    assert J.entry("q", ("a",)) == Finite(7)
    assert J.slots() == (("q", ("a",)), ("q", ("b",)))
    assert len(J) == 2


def test_to_facts_folds_limit_slots():
    J = pseudo(Fact("q", ("a",), ALL_INTS), Fact("d", ("a", "c"), 3), Fact("node", ("a",)), q="max", d="min")
    assert J.to_facts() == (Fact("d", ("a", "c"), 3), Fact("node", ("a",)), Fact("q", ("a",), ALL_INTS))
    assert PseudoInterpretation.from_facts(J.to_facts(), J.limit_types) == J


def test_leq_is_the_information_order():
    small = pseudo(Fact("q", ("a",), 3), q="max")
    large = pseudo(Fact("q", ("a",), 5), Fact("p", ("b",)), q="max")
    assert small.leq(large)
    assert not large.leq(small)
    assert large.leq(pseudo(Fact("q", ("a",), ALL_INTS), Fact("p", ("b",)), q="max"))


def test_unit_size_counts_integers_in_unary():
    m = Var("M")
    rule = Rule(Atom("q", (Obj("a"),), BinOp("+", m, Int(3))), (Literal(Atom("p", (Obj("a"),), m)),))
    smaller = Rule(Atom("q", (Obj("a"),), BinOp("+", m, Int(1))), (Literal(Atom("p", (Obj("a"),), m)),))
    assert unit_size(rule) == unit_size(smaller) + 2


# =============================================================================
# TERMS
# =============================================================================

def test_polynomial_normal_form():
    m, n = Var("M"), Var("N")
    assert to_polynomial(BinOp("*", BinOp("+", m, Int(1)), BinOp("-", m, Int(1)))) == {(m, m): 1, (): -1}
    assert format_term(simplify(BinOp("+", BinOp("-", BinOp("*", Int(2), n), n), Int(3)))) == "N + 3"
    assert to_polynomial(BinOp("-", m, m)) == {}
    assert to_polynomial(BinOp("*", BinOp("*", m, m), BinOp("+", m, n))) == {(m, m, m): 1, (m, m, n): 1}
    # variables of different rules never merge
    assert to_polynomial(BinOp("*", Var("M", 0), Var("M", 1))) == {(Var("M", 0), Var("M", 1)): 1}


def test_linear_forms():
    m, n = Var("M"), Var("N")
    form = linear_form(BinOp("-", BinOp("+", BinOp("*", Int(2), m), Int(5)), n))
    assert form == LinearForm(5, ((m, 2), (n, -1)))
    try:
        linear_form(BinOp("*", m, n))
    except ContractViolation:
        return
    raise AssertionError("a product of variables was accepted as linear")


def test_term_printing_and_evaluation():
    m, n = Var("M"), Var("N")
    assert format_term(BinOp("-", m, BinOp("-", n, Int(1)))) == "M - (N - 1)"
    assert format_term(BinOp("*", BinOp("+", m, n), Int(2))) == "(M + N) * 2"
    assert evaluate(BinOp("*", m, BinOp("+", n, Int(1))), {m: 3, n: 4}) == 15
    assert str(Obj("not")) == "'not'" and str(Obj("sp-edge")) == "sp-edge"


if __name__ == "__main__":
    main("core model", globals())
