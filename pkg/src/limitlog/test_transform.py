"""
Transformations: semi-grounding, reducts, guard folding and the TC-preserving rewrite.
"""

from limitlog.analysis import check_type_consistent_reference
from limitlog.corpus import corpus_path, load_corpus_program
from limitlog.errors import ContractViolation
from limitlog.frontend import parse_dataset, parse_program
from limitlog.fuzz import check_reduct_preserves, check_semi_ground_preserves, check_tc_rewrite, random_cases
from limitlog.model import Atom, Comparison, Literal
from limitlog.terms import Int, Obj
from limitlog.testing import main, property_cases
from limitlog.transform import fold_guards, is_semi_ground, reduct, semi_ground, tc_rewrite_reduct

NEGATIONS = """
max p/2.
max q/2.
max t/2.
p(a, 1) :- s(a), not r(a).
p(b, 2) :- s(b), not r(b).
p(a, M) :- t(a, M), not q(a, M).
p(b, M) :- t(a, M), not q(b, M).
p(c, M) :- t(a, M), not q(c, M).
q(a, 4). q(c, *). r(a). s(a). s(b). t(a, 7).
"""

GUARDS = """
max q/2.
r(X) :- s(X), lub q(X, N), N > 2.
u(X) :- s(X), lub q(X, N), N > 6.
s(a). s(b). q(a, 4).
"""


def object_atom(predicate, *objects) -> Atom:
    return Atom(predicate, tuple(Obj(o) for o in objects), None)


def raises(error, func, *args):
    try:
        func(*args)
    except error as exc:
        return exc
    raise AssertionError(f"{func.__name__} did not raise {error.__name__}")


# =============================================================================
# SEMI-GROUNDING
# =============================================================================

def test_semi_ground_shortest_path():
    program = load_corpus_program("shortest_path.lpl")
    facts = parse_dataset(corpus_path("shortest_path.lpd").read_text(), program)
    grounded = semi_ground(program, facts)
    assert all(is_semi_ground(rule, grounded.predicates) for rule in grounded.rules)
    # one source, three edges, two edges into the target
    assert grounded.origins.count(0) == 1
    assert grounded.origins.count(1) == 3
    assert grounded.origins.count(2) == 2
    assert grounded.rules[0].head == Atom("ds", (Obj("a"),), Int(0))
    assert grounded.facts == frozenset(facts)


def test_semi_ground_without_pruning_takes_every_constant():
    program = load_corpus_program("shortest_path.lpl")
    facts = parse_dataset(corpus_path("shortest_path.lpd").read_text(), program)
    grounded = semi_ground(program, facts, prune=False)
    assert grounded.origins.count(0) == 3
    assert len(grounded) > len(semi_ground(program, facts))


def test_semi_ground_program_keeps_its_facts():
    program = parse_program(GUARDS)
    grounded = semi_ground(program)
    assert set(grounded.to_program().facts) == set(program.facts)


# =============================================================================
# REDUCT
# =============================================================================

def test_reduct_cases():
    program = parse_program(NEGATIONS)
    positive = reduct(semi_ground(program))
    assert positive.origins == (1, 2, 3)
    assert all(lit.positive for rule in positive.rules for lit in rule.body)
    # r(b) is not a fact: the literal goes
    assert positive.rules[0].body == (Literal(object_atom("s", "b")),)
    # q(a) has lub 4: "not q(a, M)" becomes 4 < M
    body = positive.rules[1].body
    assert body[1].atom == Comparison("<", Int(4), body[0].atom.numeric)
    # q(b) has no value: the literal goes
    assert len(positive.rules[2].body) == 1


def test_reduct_for_min_slots_bounds_from_above():
    program = parse_program("min p/2.\nmin q/2.\nmin t/2.\n"
                            "p(a, M) :- t(a, M), not q(a, M).\nq(a, 2). t(a, 5).")
    rule = reduct(semi_ground(program)).rules[0]
    assert rule.body[1].atom == Comparison("<", rule.body[0].atom.numeric, Int(2))


def test_reduct_needs_a_semi_positive_program():
    program = load_corpus_program("shortest_path.lpl")
    facts = parse_dataset(corpus_path("shortest_path.lpd").read_text(), program)
    raises(ContractViolation, reduct, semi_ground(program, facts))


# =============================================================================
# GUARD FOLDING AND THE TC REWRITE
# =============================================================================

def test_fold_guards_substitutes_edb_lubs():
    folded = fold_guards(semi_ground(parse_program(GUARDS)))
    # u(a) needs 4 > 6 and is gone; s(b) has no q value and was pruned
    assert len(folded) == 1
    rule = folded.rules[0]
    assert rule.head == object_atom("r", "a")
    assert rule.body == (Literal(object_atom("s", "a")),)


def test_tc_rewrite_matches_the_plain_reduct_on_guards():
    grounded = semi_ground(parse_program(GUARDS))
    rewritten = tc_rewrite_reduct(grounded)
    assert rewritten.rules == reduct(fold_guards(grounded)).rules
    assert check_type_consistent_reference(rewritten.rules, rewritten.predicates)


def test_tc_rewrite_rejects_inconsistent_input():
    grounded = semi_ground(parse_program("max p/2.\nmin q/2.\nq(a, 1).\np(a, N) :- q(a, N)."))
    exc = raises(ContractViolation, tc_rewrite_reduct, grounded)
    assert "not type-consistent" in str(exc)


# =============================================================================
# RANDOM PROGRAMS
# =============================================================================

def test_semi_grounding_preserves_bounded_materialisation():
    for case in random_cases(seed=5, count=property_cases(8)):
        assert check_semi_ground_preserves(case, bound=24) == [], case.describe()


def test_reduct_preserves_each_stratum():
    for case in random_cases(seed=6, count=property_cases(8)):
        assert check_reduct_preserves(case, bound=24) == [], case.describe()


def test_tc_rewrite_stays_type_consistent():
    for case in random_cases(seed=7, count=property_cases(10)):
        assert check_tc_rewrite(case) == [], case.describe()


if __name__ == "__main__":
    main("transform", globals())
