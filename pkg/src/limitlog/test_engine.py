"""
Engine: optimal rule evaluation, the positive fixpoint with divergence
promotion, the stratified driver and agreement with the bounded oracle.
"""

import networkx as nx
import numpy as np

from limitlog.analysis import Stratification, dependency_graph
from limitlog.config import EngineConfig, EvaluationMode
from limitlog.corpus import corpus_path, load_corpus_program
from limitlog.engine import (NO_VALUE, NOT_APPLICABLE, UNKNOWN, Derive, DeriveLimit, MaterialisationStatus,
                             Verdict, lub_query, materialise_stratified, opt_rule, query, step)
from limitlog.errors import ContractViolation, ProgramError
from limitlog.frontend import parse_dataset, parse_program
from limitlog.fuzz import compare_rule_with_oracle, compare_with_oracle, random_cases, random_rule_case
from limitlog.model import ALL_INTS, Fact, Finite, PredicateKind, PseudoInterpretation
from limitlog.oddminsat import Variable, oddminsat_dataset, oddminsat_program
from limitlog.testing import main, property_cases
from limitlog.transform import semi_ground

COUNTER = "max c/1.\nc(0).\nc(N + 1) :- c(N), N < 3.\n"
DIVERGING = "max p/1.\np(0).\np(N + 1) :- p(N).\n"


def raises(error, func, *args, **kwargs):
    try:
        func(*args, **kwargs)
    except error as exc:
        return exc
    raise AssertionError(f"{func.__name__} did not raise {error.__name__}")


def load(name: str):
    program = load_corpus_program(f"{name}.lpl")
    return program, parse_dataset(corpus_path(f"{name}.lpd").read_text(), program)


def single_rule(text: str):
    program = parse_program(text)
    return program.proper_rules[0], program.predicates


# =============================================================================
# OPTIMAL RULE EVALUATION
# =============================================================================

def test_opt_rule_follows_the_body_bound():
    rule, predicates = single_rule("min d/3.\nd(a, c, M + 5) :- d(a, b, M).")
    types = {"d": PredicateKind.MIN}
    J = PseudoInterpretation.from_facts([Fact("d", ("a", "b"), 2)], types)
    assert opt_rule(rule, J, predicates) == DeriveLimit("d", ("a", "c"), Finite(7))
    assert opt_rule(rule, PseudoInterpretation(limit_types=types), predicates) == NOT_APPLICABLE
    unbounded = PseudoInterpretation.from_facts([Fact("d", ("a", "b"), ALL_INTS)], types)
    assert opt_rule(rule, unbounded, predicates) == DeriveLimit("d", ("a", "c"), ALL_INTS)


def test_opt_rule_optimises_under_comparisons():
    rule, predicates = single_rule("max p/1.\nmax q/1.\np(2 * M) :- q(M), M <= 5.")
    types = {"p": PredicateKind.MAX, "q": PredicateKind.MAX}
    for value, expected in ((3, 6), (7, 10), (ALL_INTS, 10)):
        J = PseudoInterpretation.from_facts([Fact("q", (), value)], types)
        assert opt_rule(rule, J, predicates) == DeriveLimit("p", (), Finite(expected)), value


def test_opt_rule_without_an_upper_bound_derives_all_ints():
    rule, predicates = single_rule("max p/1.\nmax q/1.\np(2 * M) :- q(M).")
    J = PseudoInterpretation.from_facts([Fact("q", (), ALL_INTS)], {"p": PredicateKind.MAX, "q": PredicateKind.MAX})
    assert opt_rule(rule, J, predicates) == DeriveLimit("p", (), ALL_INTS)


def test_opt_rule_guards_need_a_finite_lub():
    rule, predicates = single_rule("max q/1.\nr :- lub q(N), N > 2.")
    types = {"q": PredicateKind.MAX}

    def run(value):
        return opt_rule(rule, PseudoInterpretation.from_facts([Fact("q", (), value)], types), predicates)

    assert run(4) == Derive(Fact("r"))
    assert run(1) == NOT_APPLICABLE
    assert run(ALL_INTS) == NOT_APPLICABLE


def test_step_applies_every_rule_once():
    grounded = semi_ground(parse_program(COUNTER))
    J = PseudoInterpretation.from_facts(grounded.facts, grounded.limit_types())
    assert J.entry("c", ()) == Finite(0)
    J = step(grounded, J)
    assert J.entry("c", ()) == Finite(1)
    assert step(grounded, J).entry("c", ()) == Finite(2)


# =============================================================================
# FIXPOINT AND DIVERGENCE
# =============================================================================

def test_bounded_counter_reaches_its_fixpoint():
    # N < 3 bounds a max literal from above, so only general mode accepts it
    config = EngineConfig(mode=EvaluationMode.GENERAL_BOUNDED)
    result = materialise_stratified(parse_program(COUNTER), config=config)
    assert result.pseudo.entry("c", ()) == Finite(3)
    assert result.status is MaterialisationStatus.EXACT


def test_diverging_slot_is_promoted_exactly_in_tc_mode():
    result = materialise_stratified(parse_program(DIVERGING))
    assert result.pseudo.entry("p", ()) == ALL_INTS
    assert result.status is MaterialisationStatus.EXACT
    assert not result.tainted
    assert result.verdict(Fact("p", (), ALL_INTS)) is Verdict.ENTAILED
    assert result.lub("p", ()) == ALL_INTS
    [decision] = result.trace.decisions
    # one slot, one rule: promoted after more than two improvements
    assert decision.slot == ("p", ()) and decision.improvements == 3
    assert result.trace.strata[0].improvements == {("p", ()): 3}


def test_magnitude_cap_in_general_mode_is_heuristic():
    config = EngineConfig(mode=EvaluationMode.GENERAL_BOUNDED)
    result = materialise_stratified(parse_program(DIVERGING), config=config)
    assert result.status is MaterialisationStatus.PROMOTED_HEURISTIC
    assert result.tainted == frozenset({("p", ())})
    assert result.lub("p", ()) == UNKNOWN
    assert result.verdict(Fact("p", (), 5)) is Verdict.UNKNOWN
    assert "magnitude cap" in result.trace.decisions[0].reason


def test_unknown_answers_are_tracked_per_slot():
    # p(a) runs past the cap; p(b) and r(b) never read it
    text = "max p/2.\np(a, 0).\np(a, N + 1) :- p(a, N).\np(b, 5).\nr(X) :- p(X, N), N <= 3.\n"
    config = EngineConfig(mode=EvaluationMode.GENERAL_BOUNDED, magnitude_cap=50)
    result = materialise_stratified(parse_program(text), config=config)
    assert result.status is MaterialisationStatus.PROMOTED_HEURISTIC
    assert result.tainted == frozenset({("p", ("a",)), ("r", ("a",))})
    assert result.verdict(Fact("p", ("b",), 5)) is Verdict.ENTAILED
    assert result.verdict(Fact("p", ("b",), 6)) is Verdict.NOT_ENTAILED
    assert result.lub("p", ("b",)) == Finite(5)
    assert result.verdict(Fact("r", ("b",))) is Verdict.ENTAILED
    assert result.lub("p", ("a",)) == UNKNOWN
    assert result.verdict(Fact("p", ("a",), 1)) is Verdict.UNKNOWN
    assert result.verdict(Fact("r", ("a",))) is Verdict.UNKNOWN


def test_iteration_limit_leaves_an_incomplete_result():
    config = EngineConfig(mode=EvaluationMode.GENERAL_BOUNDED, max_iterations=10, magnitude_cap=10 ** 6)
    result = materialise_stratified(parse_program(DIVERGING), config=config)
    assert result.status is MaterialisationStatus.INCOMPLETE
    assert result.verdict(Fact("p", (), 3)) is Verdict.UNKNOWN
    assert any("incomplete" in line for line in result.trace.summary_lines())


def test_snapshots_grow_monotonically():
    config = EngineConfig(keep_snapshots=True)
    for case in random_cases(seed=21, count=property_cases(10)):
        result = materialise_stratified(case.program, case.facts, config)
        for stratum in result.trace.strata:
            for before, after in zip(stratum.snapshots, stratum.snapshots[1:]):
                assert before.leq(after), case.describe()


# =============================================================================
# STRATIFIED PROGRAMS
# =============================================================================

def test_shortest_path():
    program, facts = load("shortest_path")
    result = materialise_stratified(program, facts)
    assert result.status is MaterialisationStatus.EXACT
    assert [result.lub("ds", (v,)) for v in "abc"] == [Finite(0), Finite(1), Finite(3)]
    assert result.verdict(Fact("ds", ("c",), 10)) is Verdict.ENTAILED
    assert result.verdict(Fact("ds", ("c",), 2)) is Verdict.NOT_ENTAILED
    assert result.verdict(Fact("sp-edge", ("a", "b"))) is Verdict.ENTAILED
    assert result.verdict(Fact("sp-edge", ("b", "c"))) is Verdict.ENTAILED
    assert result.verdict(Fact("sp-edge", ("a", "c"))) is Verdict.NOT_ENTAILED
    assert result.lub("ds", ("z",)) == NO_VALUE


def test_query_helpers():
    program, facts = load("shortest_path")
    assert query(program, facts, Fact("ds", ("b",), 1)) is Verdict.ENTAILED
    assert lub_query(program, facts, "ds", ("c",)) == Finite(3)
    raises(ContractViolation, lub_query, program, facts, "sp-edge", ("a",))


def test_closeness_centre():
    program, facts = load("closeness")
    result = materialise_stratified(program, facts)
    assert result.verdict(Fact("centre", ("b",))) is Verdict.ENTAILED
    assert result.verdict(Fact("centre", ("a",))) is Verdict.NOT_ENTAILED
    assert [result.lub("fness", (v,)) for v in "abc"] == [Finite(3), Finite(2), Finite(3)]


def test_materialisation_is_closed_under_its_own_facts():
    for name in ("shortest_path", "closeness"):
        program, facts = load(name)
        first = materialise_stratified(program, facts).pseudo
        again = materialise_stratified(program, tuple(facts) + first.to_facts()).pseudo
        assert again == first, name


def _finest_stratification(program) -> Stratification:
    graph = dependency_graph(program)
    condensed = nx.condensation(graph)
    levels = {}
    for rank, component in enumerate(nx.topological_sort(condensed), start=1):
        for predicate in condensed.nodes[component]["members"]:
            levels[predicate] = rank
    return Stratification(levels)


def test_result_does_not_depend_on_the_stratification():
    for case in random_cases(seed=22, count=property_cases(10)):
        full = case.program.with_facts(case.facts)
        minimal = materialise_stratified(case.program, case.facts)
        finest = materialise_stratified(case.program, case.facts, stratification=_finest_stratification(full))
        assert minimal.pseudo == finest.pseudo, case.describe()


def test_driver_rejects_bad_input():
    raises(ProgramError, materialise_stratified, parse_program("q(a).\np(X) :- q(X), not p(X)."))
    program, facts = load("shortest_path")
    flat = Stratification({"ds": 1, "sp-edge": 1})
    raises(ContractViolation, materialise_stratified, program, facts, stratification=flat)
    formula = Variable(0)
    raises(ContractViolation, materialise_stratified, oddminsat_program(), oddminsat_dataset(1, formula))


# =============================================================================
# AGAINST THE ORACLE
# =============================================================================

def test_engine_agrees_with_the_oracle():
    checked = 0
    for case in random_cases(seed=23, count=property_cases(12)):
        report = compare_with_oracle(case, bound=32)
        assert report.ok, case.describe() + "\n" + "\n".join(report.problems)
        checked += report.checked
    assert checked > 0


def test_opt_rule_agrees_with_the_oracle():
    rng = np.random.default_rng(24)
    for _ in range(property_cases(40)):
        case = random_rule_case(rng)
        assert compare_rule_with_oracle(case) == [], case.text


if __name__ == "__main__":
    main("engine", globals())
