"""
Static analysis of limit programs.

Safety, stratification over the predicate dependency graph, guarded
variables, limit-linearity and type-consistency. Two type-consistency
checkers exist: `check_type_consistent` reasons about the signs a coefficient
can take once ordinary variables are replaced by program constants, without
building the semi-grounding; `check_type_consistent_reference` applies the
conditions literally to an explicit semi-ground program.
"""

import itertools
import logging
from dataclasses import dataclass, field
from typing import Dict, FrozenSet, Iterable, List, Mapping, Optional, Set, Tuple, Union

import networkx as nx

from .model import (AllInts, Atom, Comparison, Fact, Literal, PredicateInfo, PredicateKind, Program,
                    Rule, step_of)
from .terms import BinOp, Monomial, Var, to_polynomial

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class CheckResult:
    ok: bool
    diagnostics: Tuple[str, ...] = ()

    def __bool__(self):
        return self.ok


def _rule_label(index: int, rule: Rule) -> str:
    return f"rule {index + 1}{rule.where()}"


# =============================================================================
# SAFETY AND POLARITY
# =============================================================================

def check_safety(program: Program) -> CheckResult:
    problems = []
    for index, rule in enumerate(program.rules):
        bound = set()
        for lit in rule.standard_literals():
            if lit.positive:
                bound |= lit.atom.object_variables
        needed = set(rule.head.object_variables)
        for lit in rule.standard_literals():
            needed |= lit.atom.object_variables
        for var in sorted(needed - bound):
            problems.append(f"{_rule_label(index, rule)}: object variable {var} "
                            f"does not occur in a positive literal")
    return CheckResult(not problems, tuple(problems))


def is_positive(program: Program) -> bool:
    return all(lit.positive for rule in program.rules for lit in rule.body)


def is_semi_positive(program: Program) -> bool:
    idb = program.idb_predicates()
    return all(lit.positive or lit.atom.predicate not in idb
               for rule in program.rules for lit in rule.body)


# =============================================================================
# STRATIFICATION
# =============================================================================

@dataclass(frozen=True)
class Stratification:
    """λ: predicate -> stratum index (1-based)."""
    levels: Mapping[str, int]

    def level(self, predicate: str) -> int:
        return self.levels.get(predicate, 1)

    @property
    def depth(self) -> int:
        return max(self.levels.values(), default=1)

    def strata(self, program: Program) -> List[Tuple[int, Tuple[Rule, ...]]]:
        """Non-empty Π[i] in increasing order of i."""
        buckets: Dict[int, List[Rule]] = {}
        for rule in program.rules:
            buckets.setdefault(self.level(rule.head.predicate), []).append(rule)
        return [(i, tuple(buckets[i])) for i in sorted(buckets)]

    def is_valid_for(self, program: Program) -> bool:
        for rule in program.rules:
            head = self.level(rule.head.predicate)
            for lit in rule.standard_literals():
                body = self.level(lit.atom.predicate)
                if body > head or (not lit.positive and body == head):
                    return False
        return all(v >= 1 for v in self.levels.values())


@dataclass(frozen=True)
class StratificationFailure:
    """A dependency cycle that passes through negation."""
    cycle: Tuple[str, ...]
    negative_edge: Tuple[str, str]

    def __bool__(self):
        return False

    def __str__(self):
        return (f"cycle through negation: {' -> '.join(self.cycle)} "
                f"(negative edge {self.negative_edge[0]} -> {self.negative_edge[1]})")


def dependency_graph(program: Program) -> nx.DiGraph:
    """Edges body predicate -> head predicate, `negative` if any occurrence is negated."""
    graph = nx.DiGraph()
    graph.add_nodes_from(program.predicates)
    for rule in program.rules:
        head = rule.head.predicate
        for lit in rule.standard_literals():
            body = lit.atom.predicate
            negative = not lit.positive
            if graph.has_edge(body, head):
                graph[body][head]["negative"] |= negative
            else:
                graph.add_edge(body, head, negative=negative)
    return graph


def compute_stratification(program: Program) -> Union[Stratification, StratificationFailure]:
    """Minimal stratification: λ(A) = 1 + longest negative-edge path into A."""
    graph = dependency_graph(program)
    components = list(nx.strongly_connected_components(graph))
    component_of = {node: i for i, comp in enumerate(components) for node in comp}
    for u, v, data in graph.edges(data=True):
        if data["negative"] and component_of[u] == component_of[v]:
            sub = graph.subgraph(components[component_of[u]])
            back = nx.shortest_path(sub, v, u) if u != v else [u]
            cycle = (u,) + tuple(back)
            return StratificationFailure(cycle, (u, v))
    condensed = nx.condensation(graph, scc=components)
    longest = {c: 0 for c in condensed.nodes}
    for comp in nx.topological_sort(condensed):
        for node in components[comp]:
            for _, succ, data in graph.out_edges(node, data=True):
                target = component_of[succ]
                if target != comp:
                    longest[target] = max(longest[target], longest[comp] + int(data["negative"]))
    levels = {node: longest[component_of[node]] + 1 for node in graph.nodes}
    return Stratification(levels)


# =============================================================================
# GUARDS
# =============================================================================

@dataclass(frozen=True)
class Guard:
    """A(s,n1), not A(s,n2), n2 ≐ n1 + t, located by body positions."""
    predicate: str
    objects: Tuple
    lower: Var       # n1, in the positive literal
    upper: Var       # n2, in the negative literal
    step: int
    literal_positions: Tuple[int, int]
    comparison_positions: Tuple[int, int]


def _difference(comparison: Comparison) -> Dict[Monomial, int]:
    return to_polynomial(BinOp("-", comparison.right, comparison.left))


def find_guards(rule: Rule, predicates: Mapping[str, PredicateInfo]) -> List[Guard]:
    """Every lub pattern of the body; comparisons may come in any order."""
    body = rule.body
    guards = []
    used = set()
    for i, pos in enumerate(body):
        if pos.is_comparison or not pos.positive or not isinstance(pos.atom.numeric, Var):
            continue
        info = predicates.get(pos.atom.predicate)
        if info is None or not info.kind.is_limit:
            continue
        step = step_of(info.kind)
        for j, neg in enumerate(body):
            if neg.is_comparison or neg.positive or j in used:
                continue
            atom = neg.atom
            if (atom.predicate, atom.objects) != (pos.atom.predicate, pos.atom.objects) \
                    or not isinstance(atom.numeric, Var) or atom.numeric == pos.atom.numeric:
                continue
            n1, n2 = pos.atom.numeric, atom.numeric
            wanted = {(n2,): 1, (n1,): -1}
            if step:
                wanted[()] = -step
            negated = {m: -c for m, c in wanted.items()}
            pair = _find_equality(body, wanted, negated, used)
            if pair is not None:
                used.update((j,) + pair)
                guards.append(Guard(pos.atom.predicate, pos.atom.objects, n1, n2, step,
                                    (i, j), pair))
                break
    return guards


def _find_equality(body, wanted, negated, used) -> Optional[Tuple[int, int]]:
    candidates = []
    for k, lit in enumerate(body):
        if lit.is_comparison and lit.atom.op == "<=" and k not in used:
            diff = _difference(lit.atom)
            if diff == wanted:
                candidates.append((k, 1))
            elif diff == negated:
                candidates.append((k, -1))
    ups = [k for k, s in candidates if s == 1]
    downs = [k for k, s in candidates if s == -1]
    if ups and downs:
        return tuple(sorted((ups[0], downs[0])))
    return None


def ordinary_variables(rule: Rule, predicates: Mapping[str, PredicateInfo],
                       positive_only: bool = True) -> FrozenSet[Var]:
    found = set()
    for lit in rule.standard_literals():
        if positive_only and not lit.positive:
            continue
        info = predicates.get(lit.atom.predicate)
        if info is not None and info.kind is PredicateKind.ORDINARY:
            found |= lit.atom.numeric_variables
    return frozenset(found)


def guarded_variables(rule: Rule, predicates: Mapping[str, PredicateInfo]) -> FrozenSet[Var]:
    """Numeric variables fixed by a positive ordinary literal or by a lub pattern."""
    guarded = set(ordinary_variables(rule, predicates))
    for guard in find_guards(rule, predicates):
        guarded |= {guard.lower, guard.upper}
    return frozenset(guarded)


# =============================================================================
# LIMIT-LINEARITY
# =============================================================================

def numeric_terms(rule: Rule):
    """(role, term) for every numeric term of a rule."""
    if rule.head.numeric is not None and not isinstance(rule.head.numeric, AllInts):
        yield "head", rule.head.numeric
    for lit in rule.body:
        if lit.is_comparison:
            yield "left", lit.atom.left
            yield "right", lit.atom.right
        elif lit.atom.numeric is not None:
            yield "body", lit.atom.numeric


def _decompose(poly: Mapping[Monomial, int], ordinary: FrozenSet[Var],
               ordinary_any: FrozenSet[Var], guarded: FrozenSet[Var]) -> Optional[str]:
    """None if poly = s0 + Σ si×mi as required, else the reason it is not."""
    taken: Set[Var] = set()
    for mono in sorted(poly, key=lambda m: (len(m), m)):
        if all(v in ordinary for v in mono):
            continue
        candidates = []
        for var in sorted(set(mono)):
            if mono.count(var) != 1 or var in ordinary_any:
                continue
            rest = list(mono)
            rest.remove(var)
            if all(v in guarded for v in rest):
                candidates.append(var)
        if not candidates:
            names = "*".join(v.name for v in mono)
            return f"product {names} is not a guarded coefficient times a limit variable"
        fresh = [v for v in candidates if v not in taken]
        if not fresh:
            return f"variable {candidates[0]} needs a coefficient with '+'"
        fresh.sort(key=lambda v: (v in guarded, v))
        taken.add(fresh[0])
    return None


def check_limit_linear(program: Program) -> CheckResult:
    problems = []
    for index, rule in enumerate(program.rules):
        if rule.is_fact:
            continue
        ordinary = ordinary_variables(rule, program.predicates)
        ordinary_any = ordinary_variables(rule, program.predicates, positive_only=False)
        guarded = guarded_variables(rule, program.predicates)
        for role, term in numeric_terms(rule):
            reason = _decompose(to_polynomial(term), ordinary, ordinary_any, guarded)
            if reason:
                problems.append(f"{_rule_label(index, rule)}: {role} term {term}: {reason}")
    return CheckResult(not problems, tuple(problems))


# =============================================================================
# TYPE-CONSISTENCY (SIGN ANALYSIS)
# =============================================================================

@dataclass(frozen=True)
class _Constants:
    positive: bool
    negative: bool
    zero: bool


def _product_signs(k: int, occurrences: Mapping[Var, int], constants: _Constants) -> FrozenSet[int]:
    """Signs k × Π v^e can take when each v ranges over the integer constants."""
    return frozenset(s for s in (1, -1) if _can_be(s * k, occurrences, constants)) | (
        frozenset({0}) if k == 0 or (occurrences and constants.zero) else frozenset())


def _can_be(k: int, occurrences: Mapping[Var, int], constants: _Constants) -> bool:
    """Can k × Π v^e be positive?"""
    if k == 0:
        return False
    if not occurrences:
        return k > 0
    total = sum(occurrences.values())
    some_odd = any(e % 2 for e in occurrences.values())
    if k > 0:
        if constants.positive:
            return True
        return constants.negative and total % 2 == 0
    if constants.negative and total % 2 == 1:
        return True
    return constants.negative and constants.positive and some_odd


def _coefficient_signs(products: List[Tuple[int, Monomial]], constants: _Constants,
                       values: FrozenSet[int]) -> FrozenSet[int]:
    if len(products) == 1:
        k, mono = products[0]
        occurrences: Dict[Var, int] = {}
        for var in mono:
            occurrences[var] = occurrences.get(var, 0) + 1
        return _product_signs(k, occurrences, constants)
    # several products share the same limit part: decide over the constants directly
    names = sorted({v for _, mono in products for v in mono})
    signs = set()
    for choice in itertools.product(sorted(values), repeat=len(names)):
        env = dict(zip(names, choice))
        total = 0
        for k, mono in products:
            term = k
            for var in mono:
                term *= env[var]
            total += term
        signs.add((total > 0) - (total < 0))
    return frozenset(signs)


def _split(poly: Mapping[Monomial, int], grounded: FrozenSet[Var]) -> Dict[Monomial, List[Tuple[int, Monomial]]]:
    """Group monomials by their part over non-grounded variables."""
    groups: Dict[Monomial, List[Tuple[int, Monomial]]] = {}
    for mono, coeff in poly.items():
        ground = tuple(v for v in mono if v in grounded)
        rest = tuple(v for v in mono if v not in grounded)
        groups.setdefault(rest, []).append((coeff, ground))
    return groups


def _positive_limit_literals(rule: Rule, var: Var, predicates) -> List[Atom]:
    return [lit.atom for lit in rule.standard_literals()
            if lit.positive and lit.atom.numeric == var
            and predicates[lit.atom.predicate].kind.is_limit]


def _standard_occurrences(rule: Rule, var: Var) -> int:
    return sum(1 for lit in rule.standard_literals() if var in lit.atom.numeric_variables)


def _rule_tc_violations(rule: Rule, predicates: Mapping[str, PredicateInfo],
                        objects: FrozenSet[str], integers: FrozenSet[int]) -> List[str]:
    ordinary = ordinary_variables(rule, predicates, positive_only=False)
    object_vars = set()
    for lit in (Literal(rule.head),) + rule.body:
        if not lit.is_comparison:
            object_vars |= lit.atom.object_variables
    if (object_vars and not objects) or (ordinary and not integers):
        return []
    constants = _Constants(any(i > 0 for i in integers), any(i < 0 for i in integers),
                           0 in integers)
    guards = find_guards(rule, predicates)
    guard_vars = {v for g in guards for v in (g.lower, g.upper)} - ordinary

    def signs(products):
        return _coefficient_signs(products, constants, integers)

    analysed = [(role, _split(to_polynomial(term), ordinary)) for role, term in numeric_terms(rule)]
    problems = []
    occurring: Set[Var] = set()
    for role, groups in analysed:
        for limit_part, products in groups.items():
            if not limit_part:
                continue
            possible = signs(products)
            if possible - {0}:
                occurring |= set(limit_part)
                if len(limit_part) > 1:
                    names = "*".join(v.name for v in limit_part)
                    problems.append(f"condition 1: {role} term has a non-linear product {names}")
    for var in sorted(occurring):
        count = _standard_occurrences(rule, var)
        if count != 1:
            problems.append(f"condition 2: variable {var} occurs in {count} standard body literals")
    for lit in rule.standard_literals():
        if lit.positive:
            continue
        for var in sorted(lit.atom.numeric_variables - ordinary):
            if var not in guard_vars:
                problems.append(f"condition 3: variable {var} of a negative literal is not guarded")
    head_info = predicates.get(rule.head.predicate)
    comparisons = [c for c in rule.comparisons()]
    checks = []
    if head_info is not None and head_info.kind.is_limit and rule.head.numeric is not None:
        groups = _split(to_polynomial(rule.head.numeric), ordinary)
        checks.append(("head", groups, head_info.kind, head_info.kind))
    for comparison in comparisons:
        for side, term in (("left", comparison.left), ("right", comparison.right)):
            groups = _split(to_polynomial(term), ordinary)
            # left: positive needs min; right: positive needs max
            if side == "left":
                checks.append((f"comparison {comparison} left", groups,
                               PredicateKind.MIN, PredicateKind.MAX))
            else:
                checks.append((f"comparison {comparison} right", groups,
                               PredicateKind.MAX, PredicateKind.MIN))
    for label, groups, when_positive, when_negative in checks:
        condition = 4 if label == "head" else 5
        for limit_part, products in groups.items():
            if len(limit_part) != 1 or limit_part[0] in guard_vars:
                continue
            var = limit_part[0]
            possible = signs(products) - {0}
            if not possible:
                continue
            literals = _positive_limit_literals(rule, var, predicates)
            if len(literals) != 1:
                problems.append(f"condition {condition}: {label}: variable {var} needs exactly one "
                                f"positive limit body literal, found {len(literals)}")
                continue
            kind = predicates[literals[0].predicate].kind
            if condition == 4:
                bad = (1 in possible and kind is not when_positive) or \
                      (-1 in possible and kind is when_negative)
            else:
                bad = (1 in possible and kind is not when_positive) or \
                      (-1 in possible and kind is not when_negative)
            if bad:
                problems.append(f"condition {condition}: {label}: coefficient sign of {var} "
                                f"does not match its {kind.value} literal {literals[0]}")
    return problems


def check_type_consistent(program: Program, facts: Iterable[Fact] = ()) -> CheckResult:
    """Type-consistency of the simplified semi-grounding, decided per rule by sign analysis."""
    full = program.with_facts(facts) if facts else program
    objects, integers = full.constants()
    problems = []
    for index, rule in enumerate(full.rules):
        if rule.is_fact:
            continue
        for message in _rule_tc_violations(rule, full.predicates, objects, integers):
            problems.append(f"{_rule_label(index, rule)}: {message}")
    return CheckResult(not problems, tuple(problems))


# =============================================================================
# TYPE-CONSISTENCY (REFERENCE, ON SEMI-GROUND RULES)
# =============================================================================

def check_type_consistent_reference(rules: Iterable[Rule],
                                    predicates: Mapping[str, PredicateInfo]) -> CheckResult:
    """The conditions applied literally to semi-ground, simplified rules."""
    problems = []
    for index, rule in enumerate(rules):
        for message in _reference_violations(rule, predicates):
            problems.append(f"{_rule_label(index, rule)}: {message}")
    return CheckResult(not problems, tuple(problems))


def _reference_violations(rule: Rule, predicates) -> List[str]:
    problems = []
    guards = find_guards(rule, predicates)
    guarded = {v for g in guards for v in (g.lower, g.upper)}
    polys = [(role, to_polynomial(term)) for role, term in numeric_terms(rule)]
    present: Set[Var] = set()
    # 1. every term is k0 + Σ ki×mi
    for role, poly in polys:
        for mono in poly:
            present |= set(mono)
            if len(mono) > 1:
                problems.append(f"condition 1: {role} term is not linear")
    # 2. each variable in exactly one standard body literal
    for var in sorted(present):
        count = sum(1 for lit in rule.standard_literals() if lit.atom.numeric == var)
        if count != 1:
            problems.append(f"condition 2: variable {var} occurs in {count} standard body literals")
    # 3. variables of negative literals are guarded
    for lit in rule.standard_literals():
        if not lit.positive and isinstance(lit.atom.numeric, Var) and lit.atom.numeric not in guarded:
            problems.append(f"condition 3: variable {lit.atom.numeric} is not guarded")

    def kind_of_literal(var: Var) -> Optional[PredicateKind]:
        kinds = [predicates[lit.atom.predicate].kind for lit in rule.standard_literals()
                 if lit.positive and lit.atom.numeric == var
                 and predicates[lit.atom.predicate].kind.is_limit]
        return kinds[0] if len(kinds) == 1 else None

    def coefficients(term):
        return {mono[0]: c for mono, c in to_polynomial(term).items()
                if len(mono) == 1 and mono[0] not in guarded}

    # 4. head coefficients against body literal types
    head_kind = predicates[rule.head.predicate].kind
    if head_kind.is_limit and rule.head.numeric is not None:
        for var, coeff in coefficients(rule.head.numeric).items():
            kind = kind_of_literal(var)
            if kind is None:
                problems.append(f"condition 4: no unique positive limit literal for {var}")
            elif (coeff > 0) != (kind is head_kind):
                problems.append(f"condition 4: {var} has coefficient {coeff} over a {kind.value} literal")
    # 5. comparison sides
    for comparison in rule.comparisons():
        for term, if_positive, if_negative in ((comparison.left, PredicateKind.MIN, PredicateKind.MAX),
                                               (comparison.right, PredicateKind.MAX, PredicateKind.MIN)):
            for var, coeff in coefficients(term).items():
                kind = kind_of_literal(var)
                wanted = if_positive if coeff > 0 else if_negative
                if kind is not wanted:
                    problems.append(f"condition 5: {var} in {comparison} needs a {wanted.value} literal")
    return problems


# =============================================================================
# CLASSIFICATION
# =============================================================================

FLAGS = ("safe", "stratified", "semi_positive", "positive", "limit_linear", "type_consistent")


@dataclass(frozen=True)
class ClassificationReport:
    flags: Mapping[str, bool]
    diagnostics: Tuple[str, ...] = ()
    guarded: Mapping[int, FrozenSet[Var]] = field(default_factory=dict)
    stratification: Optional[Stratification] = None

    def render(self) -> str:
        lines = [f"{name}={'true' if self.flags[name] else 'false'}" for name in FLAGS]
        lines.extend(self.diagnostics)
        return "\n".join(lines) + "\n"


def classify(program: Program, facts: Iterable[Fact] = ()) -> ClassificationReport:
    facts = tuple(facts)
    full = program.with_facts(facts) if facts else program
    diagnostics: List[str] = []
    safety = check_safety(full)
    diagnostics += safety.diagnostics
    strat = compute_stratification(full)
    stratified = isinstance(strat, Stratification)
    if not stratified:
        diagnostics.append(str(strat))
    limit_linear = False
    type_consistent = False
    if stratified and safety.ok:
        linear = check_limit_linear(full)
        diagnostics += linear.diagnostics
        limit_linear = linear.ok
        if limit_linear:
            tc = check_type_consistent(full)
            diagnostics += tc.diagnostics
            type_consistent = tc.ok
    flags = {
        "safe": safety.ok,
        "stratified": stratified,
        "semi_positive": is_semi_positive(full),
        "positive": is_positive(full),
        "limit_linear": limit_linear,
        "type_consistent": type_consistent,
    }
    guarded = {i: guarded_variables(r, full.predicates)
               for i, r in enumerate(full.rules) if not r.is_fact}
    return ClassificationReport(flags, tuple(diagnostics), guarded,
                                strat if stratified else None)
