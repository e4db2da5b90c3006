"""
Static analysis: stratification, guards, limit-linearity and type-consistency.
"""

from limitlog.analysis import (Stratification, StratificationFailure, check_limit_linear, check_safety,
                               check_type_consistent, check_type_consistent_reference, classify,
                               compute_stratification, dependency_graph, find_guards, guarded_variables,
                               is_positive, is_semi_positive)
from limitlog.corpus import corpus_path, load_corpus_program
from limitlog.frontend import parse_dataset, parse_program
from limitlog.fuzz import random_cases, tc_checkers_agree
from limitlog.oddminsat import Not, Or, Variable, oddminsat_dataset, oddminsat_program
from limitlog.terms import Var
from limitlog.testing import main, property_cases
from limitlog.transform import semi_ground


def shortest_path():
    program = load_corpus_program("shortest_path.lpl")
    facts = parse_dataset(corpus_path("shortest_path.lpd").read_text(), program)
    return program, facts


def closeness():
    program = load_corpus_program("closeness.lpl")
    facts = parse_dataset(corpus_path("closeness.lpd").read_text(), program)
    return program, facts


# =============================================================================
# POLARITY AND STRATIFICATION
# =============================================================================

def test_polarity():
    program, _ = shortest_path()
    assert check_safety(program)
    assert not is_positive(program)
    assert not is_semi_positive(program)
    semi = parse_program("max p/2.\np(X, N) :- q(X, N), not r(X).")
    assert is_semi_positive(semi) and not is_positive(semi)


def test_shortest_path_stratification():
    program, _ = shortest_path()
    strat = compute_stratification(program)
    assert isinstance(strat, Stratification)
    assert strat.level("ds") == 1
    assert strat.level("sp-edge") == 2
    assert strat.level("edge") == 1
    assert strat.depth == 2
    assert strat.is_valid_for(program)
    assert [level for level, _ in strat.strata(program)] == [1, 2]


def test_flat_levels_are_not_a_stratification():
    program, _ = shortest_path()
    assert not Stratification({"ds": 1, "sp-edge": 1}).is_valid_for(program)


def test_negative_dependency_edges():
    program, _ = shortest_path()
    graph = dependency_graph(program)
    assert graph["ds"]["sp-edge"]["negative"]
    assert not graph["edge"]["ds"]["negative"]
    assert not graph["sp-edge"]["sp-edge"]["negative"]


def test_cycle_through_negation_is_reported():
    found = compute_stratification(parse_program("q(a).\np(X) :- q(X), not p(X)."))
    assert isinstance(found, StratificationFailure)
    assert not found
    assert found.negative_edge == ("p", "p")
    assert str(found).startswith("cycle through negation: p -> p")


def test_closeness_strata():
    program, _ = closeness()
    strat = compute_stratification(program)
    assert strat.level("d") == strat.level("fness") == 1
    assert strat.level("centre'") == strat.level("centre") == 2


# =============================================================================
# GUARDS AND LIMIT-LINEARITY
# =============================================================================

def test_lub_patterns_are_guards():
    program, _ = shortest_path()
    rule = program.rules[2]
    guards = find_guards(rule, program.predicates)
    assert len(guards) == 2
    assert {g.lower.name for g in guards} == {"M1", "M2"}
    assert all(g.step == -1 and g.predicate == "ds" for g in guards)
    names = {v.name for v in guarded_variables(rule, program.predicates)}
    assert {"M1", "M2", "N"} <= names


def test_guard_comparisons_may_come_in_any_order():
    program = parse_program("max q/2.\nr(X) :- q(X, N), not q(X, K), N + 1 <= K, K <= N + 1.")
    guards = find_guards(program.rules[0], program.predicates)
    assert len(guards) == 1
    assert guards[0].lower == Var("N", 0) and guards[0].upper == Var("K", 0)


def test_bundled_programs_are_limit_linear():
    for name in ("shortest_path.lpl", "closeness.lpl", "oddminsat.lpl"):
        assert check_limit_linear(load_corpus_program(name)), name


def test_product_of_limit_variables_is_not_limit_linear():
    program = parse_program("max p/2.\nmax q/2.\np(X, N * M) :- q(X, N), q(X, M).")
    result = check_limit_linear(program)
    assert not result
    assert "product" in result.diagnostics[0]


def test_guarded_coefficient_is_limit_linear():
    program = parse_program("max p/2.\nmax q/2.\np(X, N * M) :- q(X, N), lub q(X, M).")
    assert check_limit_linear(program)


# =============================================================================
# TYPE-CONSISTENCY
# =============================================================================

def test_bundled_programs_type_consistency():
    assert check_type_consistent(*shortest_path())
    assert check_type_consistent(*closeness())
    formula = Or(Variable(0), Not(Variable(1)))
    result = check_type_consistent(oddminsat_program(), oddminsat_dataset(2, formula))
    assert not result
    assert any("condition 2" in d for d in result.diagnostics)


def test_head_coefficient_must_follow_the_body_type():
    ok = parse_program("max p/2.\nmax q/2.\nq(a, 1).\np(X, 2 * N) :- q(X, N).")
    assert check_type_consistent(ok)
    flipped = parse_program("max p/2.\nmax q/2.\nq(a, 1).\np(X, -1 * N) :- q(X, N).")
    assert not check_type_consistent(flipped)
    mixed = parse_program("max p/2.\nmin q/2.\nq(a, 1).\np(X, N) :- q(X, N).")
    assert not check_type_consistent(mixed)


def test_ordinary_coefficients_take_the_signs_of_the_constants():
    rule = "max p/2.\nmax q/2.\nq(a, 1).\np(X, N * K) :- q(X, N), w(K).\n"
    assert check_type_consistent(parse_program(rule + "w(2)."))
    result = check_type_consistent(parse_program(rule + "w(-1)."))
    assert not result
    assert "condition 4" in result.diagnostics[0]


def test_unguarded_negation_is_not_type_consistent():
    program = parse_program("max q/2.\nq(a, 1).\nr(X) :- q(X, N), not q(X, N + 5).")
    result = check_type_consistent(program)
    assert not result


def test_reference_checker_on_the_semi_grounding():
    program, facts = shortest_path()
    grounded = semi_ground(program, facts, prune=False)
    assert check_type_consistent_reference(grounded.rules, grounded.predicates)


def test_checkers_agree_on_random_programs():
    for case in random_cases(seed=11, count=property_cases(15), require_tc=False):
        assert tc_checkers_agree(case), case.describe()


# =============================================================================
# CLASSIFICATION
# =============================================================================

def test_classify_shortest_path():
    program, facts = shortest_path()
    report = classify(program, facts)
    assert report.render().startswith("safe=true\nstratified=true\nsemi_positive=false\npositive=false\n"
                                      "limit_linear=true\ntype_consistent=true\n")
    assert report.stratification.level("sp-edge") == 2


def test_classify_reports_the_failing_cycle():
    report = classify(parse_program("q(a).\np(X) :- q(X), not p(X)."))
    assert not report.flags["stratified"]
    assert not report.flags["type_consistent"]
    assert any(line.startswith("cycle through negation") for line in report.diagnostics)


if __name__ == "__main__":
    main("analysis", globals())
