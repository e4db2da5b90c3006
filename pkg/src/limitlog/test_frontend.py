"""
Frontend: parsing, sugar expansion, sort inference, printing and errors.
"""

from limitlog.corpus import corpus_path, load_corpus_program
from limitlog.errors import ParseError, ProgramError
from limitlog.frontend import (check_ordered, load_program, parse_dataset, parse_fact, parse_program,
                               parse_slot, print_facts, print_program, print_pseudo)
from limitlog.model import (ALL_INTS, Atom, Comparison, Fact, PredicateInfo, PredicateKind, PseudoInterpretation,
                            Rule, build_program)
from limitlog.terms import BinOp, Int, Obj, Var
from limitlog.testing import main

DISTANCE = """
% distances from every node
min d/3.
d(X, X, 0) :- node(X).
d(X, Z, M + N) :- d(X, Y, M), edge(Y, Z, N).
"""


def raises(error, func, *args):
    try:
        func(*args)
    except error as exc:
        return exc
    raise AssertionError(f"{func.__name__}{args!r} did not raise {error.__name__}")


# =============================================================================
# PROGRAMS
# =============================================================================

def test_parse_distance_program():
    program = parse_program(DISTANCE)
    assert len(program.rules) == 2
    assert program.kind("d") is PredicateKind.MIN
    assert program.predicate("d").arity == 3
    assert not program.predicate("d").is_edb
    assert program.kind("edge") is PredicateKind.ORDINARY
    assert program.kind("node") is PredicateKind.OBJECT
    assert program.idb_predicates() == frozenset({"d"})


def test_undeclared_ordinary_fact():
    program = parse_program("p(a, 3).")
    assert program.facts == (Fact("p", ("a",), 3),)
    assert program.kind("p") is PredicateKind.ORDINARY


def test_compound_body_arguments_are_flattened():
    program = parse_program("min d/3.\nq(X) :- d(X, Z, M + N), e(Z, M), f(Z, N).")
    rule = program.rules[0]
    first = rule.body[0].atom
    assert isinstance(first.numeric, Var) and first.numeric.name.startswith("_N")
    fresh = first.numeric
    sum_ = BinOp("+", Var("M", 0), Var("N", 0))
    comparisons = [lit.atom for lit in rule.body if lit.is_comparison]
    assert comparisons == [Comparison("<=", fresh, sum_), Comparison("<=", sum_, fresh)]


def test_lub_expansion_for_max_and_min():
    for kind, step in (("max", 1), ("min", -1)):
        program = parse_program(f"{kind} q/2.\nr(X) :- lub q(X, N).")
        body = program.rules[0].body
        assert len(body) == 4
        assert body[0].positive and body[0].atom.numeric == Var("N", 0)
        assert not body[1].positive and body[1].atom.predicate == "q"
        beyond = body[1].atom.numeric
        shifted = BinOp("+", Var("N", 0), Int(step))
        assert [lit.atom for lit in body[2:]] == [Comparison("<=", beyond, shifted),
                                                 Comparison("<=", shifted, beyond)]


def test_comparison_sugar():
    program = parse_program("max q/2.\nr(X) :- q(X, N), N > 3, N >= 1.")
    comparisons = list(program.rules[0].comparisons())
    assert comparisons == [Comparison("<", Int(3), Var("N", 0)), Comparison("<=", Int(1), Var("N", 0))]


def test_rules_are_renamed_apart():
    program = parse_program(DISTANCE)
    scopes = {v.scope for rule in program.rules for v in rule.variables}
    assert scopes == {0, 1}


def test_print_parse_round_trip_on_bundled_programs():
    for name in ("shortest_path.lpl", "closeness.lpl", "oddminsat.lpl"):
        program = load_corpus_program(name)
        assert parse_program(print_program(program)) == program, name


# =============================================================================
# DATASETS AND QUERIES
# =============================================================================

def test_parse_dataset():
    assert parse_dataset("edge(a, b, 1). source(a).") == {Fact("edge", ("a", "b"), 1), Fact("source", ("a",))}
    assert parse_dataset("max q/2.\nq(a, *).") == {Fact("q", ("a",), ALL_INTS)}


def test_star_needs_a_limit_predicate():
    raises(ProgramError, parse_dataset, "q(a, *).")


def test_star_is_rejected_in_rule_bodies():
    raises(ParseError, parse_program, "max q/2.\nr(X) :- q(X, *).")


def test_rule_syntax_inside_a_dataset():
    exc = raises(ParseError, parse_dataset, "p(a).\nq(X) :- p(X).")
    assert exc.line == 2


def test_syntax_errors_carry_positions():
    exc = raises(ParseError, parse_program, "p(a).\nq(X) :- p(X)\n")
    assert exc.line is not None and exc.column is not None


def test_arity_mismatch():
    raises(ParseError, parse_program, "p(a).\np(a, b).")


def test_limit_predicate_without_its_value():
    exc = raises(ParseError, parse_program, "max q/1.\nr :- q.")
    assert "max predicate q/1 used without its value argument" in str(exc)
    exc = raises(ParseError, parse_program, "min d/0.\nd.")
    assert "min predicate d needs a value argument" in str(exc) and exc.line == 1
    declared = [PredicateInfo("q", 1, PredicateKind.MAX)]
    exc = raises(ProgramError, build_program, [Rule(Atom("q", (Obj("a"),)))], declared)
    assert "max predicate q/1 used without its value argument in q(a)" in str(exc)


def test_numeric_idb_needs_a_declaration():
    raises(ProgramError, parse_program, "q(X, N + 1) :- p(X, N).")


def test_unsafe_rule():
    raises(ProgramError, parse_program, "q(X) :- not p(X).")


def test_parse_fact_with_program_sorts():
    program = load_corpus_program("shortest_path.lpl")
    assert parse_fact("ds(c,3)", program) == Fact("ds", ("c",), 3)
    assert parse_fact("ds(c, *).", program) == Fact("ds", ("c",), ALL_INTS)
    assert parse_fact("sp-edge(a,b)", program) == Fact("sp-edge", ("a", "b"))


def test_parse_slot():
    program = load_corpus_program("shortest_path.lpl")
    assert parse_slot("ds(c)", program) == ("ds", ("c",))
    raises(ProgramError, parse_slot, "sp-edge(a,b)", program)
    raises(ParseError, parse_slot, "ds(a,b)", program)


def test_load_program_infers_sorts_across_datasets():
    program = load_program(corpus_path("shortest_path.lpl").read_text(), "edge(a,b,1). source(a). target(b).")
    assert program.kind("edge") is PredicateKind.ORDINARY
    assert Fact("edge", ("a", "b"), 1) in program.facts


def test_check_ordered():
    ok, _ = check_ordered(parse_dataset("first(a). next(a,b). last(b). node(a). node(b)."))
    assert ok
    ok, message = check_ordered(parse_dataset("first(a). last(a). next(a,a)."))
    assert not ok and "repetition" in message
    ok, message = check_ordered(parse_dataset("first(a). last(b). node(c)."))
    assert not ok


# =============================================================================
# PRINTING
# =============================================================================

def test_print_pseudo():
    types = {"q": PredicateKind.MAX, "d": PredicateKind.MIN}
    J = PseudoInterpretation.from_facts([Fact("q", ("a",), ALL_INTS), Fact("d", ("a", "c"), 3)], types)
    assert print_pseudo(J) == "d(a,c,3).  % lub\nq(a,*).\n"
    assert print_pseudo(PseudoInterpretation(limit_types=types)) == ""


def test_print_facts_is_canonical():
    facts = [Fact("q", ("b",), 2), Fact("p", ("a",)), Fact("q", ("a",), 5), Fact("q", ("a",), -1)]
    assert print_facts(facts) == "p(a).\nq(a,-1).\nq(a,5).\nq(b,2).\n"
    assert parse_dataset(print_facts(facts)) == set(facts)


def test_quoted_objects_round_trip():
    facts = parse_dataset("p('Hello world'). p(not_reserved).")
    assert parse_dataset(print_facts(facts)) == facts


if __name__ == "__main__":
    main("frontend", globals())
