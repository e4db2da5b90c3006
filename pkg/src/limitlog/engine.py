"""
Evaluation of stratified limit programs.

opt_rule computes what one semi-ground rule derives over a pseudo-interpretation:
its head fact, or the optimal head value subject to the linear constraints
the body induces. pseudo_materialise_positive iterates these derivations to a
fixpoint on a positive program and promotes diverging limit slots to `*`;
materialise_stratified runs that fixpoint stratum by stratum.
"""

import logging
from collections import Counter, defaultdict
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, FrozenSet, Iterable, List, Mapping, Optional, Sequence, Set, Tuple, Union

import networkx as nx

from .analysis import (Stratification, StratificationFailure, check_limit_linear, check_safety,
                       check_type_consistent, compute_stratification, find_guards)
from .config import AUTO, DEFAULT_SEARCH_RADIUS, EngineConfig
from .errors import ContractViolation, ProgramError, SearchExhausted
from .linear import Optimum, OptimumStatus, Row, Trivial, find_integer_point, make_row, optimise, row_leq
from .model import (ALL_INTS, AllInts, Fact, Finite, LimitValue, Literal, PredicateInfo, PredicateKind,
                    Program, PseudoInterpretation, Rule, SlotKey, better, build_program, entails,
                    satisfies)
from .terms import LinearForm, Var, linear_form
from .transform import SemiGroundProgram, fold_guards, reduct, semi_ground, tc_rewrite_reduct

logger = logging.getLogger(__name__)


# =============================================================================
# RESULTS
# =============================================================================

@dataclass(frozen=True)
class NotApplicable:
    def __str__(self):
        return "not-applicable"


NOT_APPLICABLE = NotApplicable()


@dataclass(frozen=True)
class Derive:
    fact: Fact


@dataclass(frozen=True)
class DeriveLimit:
    predicate: str
    objects: Tuple[str, ...]
    value: LimitValue

    @property
    def key(self) -> SlotKey:
        return self.predicate, self.objects


RuleResult = Union[NotApplicable, Derive, DeriveLimit]


class Verdict(Enum):
    ENTAILED = "entailed"
    NOT_ENTAILED = "not-entailed"
    UNKNOWN = "unknown"


class MaterialisationStatus(Enum):
    EXACT = "exact"
    PROMOTED_HEURISTIC = "promoted-heuristic"
    INCOMPLETE = "incomplete"


@dataclass(frozen=True)
class NoValue:
    def __str__(self):
        return "none"


@dataclass(frozen=True)
class Unknown:
    def __str__(self):
        return "unknown"


NO_VALUE = NoValue()
UNKNOWN = Unknown()

LubAnswer = Union[Finite, AllInts, NoValue, Unknown]


# =============================================================================
# RULE COMPILATION
# =============================================================================

@dataclass(frozen=True)
class RuleConstraintSystem:
    """Integer rows a rule body induces over J, and the head objective."""
    variables: FrozenSet[Var]
    rows: Tuple[Row, ...]
    objective: Optional[LinearForm] = None
    maximise: bool = True

    def solve(self, radius: int = DEFAULT_SEARCH_RADIUS) -> Optimum:
        if self.objective is None:
            point = find_integer_point(self.rows, radius)
            if point is None:
                return Optimum(OptimumStatus.INFEASIBLE)
            return Optimum(OptimumStatus.OPTIMAL, 0)
        return optimise(self.objective, self.rows, self.maximise, radius)


@dataclass(frozen=True)
class CompiledRule:
    rule: Rule
    head_key: SlotKey
    head_kind: PredicateKind
    head_form: Optional[LinearForm]
    ground_literals: Tuple[Literal, ...]
    limit_literals: Tuple[Tuple[SlotKey, PredicateKind, Var], ...]
    guards: Tuple[Tuple[SlotKey, Var, Var, int], ...]
    comparisons: Tuple[Tuple[LinearForm, LinearForm, bool], ...]
    reads: FrozenSet[SlotKey]
    fast: bool


def _direction(kind: PredicateKind) -> int:
    """+1 if larger values of a limit literal's variable are available, -1 if smaller."""
    return 1 if kind is PredicateKind.MAX else -1


def _aligned(form: LinearForm, directions: Mapping[Var, int], want: int) -> bool:
    for var, coeff in form.coefficients:
        if var in directions and coeff * directions[var] * want < 0:
            return False
    return True


def compile_rule(rule: Rule, predicates: Mapping[str, PredicateInfo]) -> CompiledRule:
    """Split a semi-ground rule into the parts opt_rule evaluates."""
    if rule.head.object_variables:
        raise ContractViolation(f"rule is not semi-ground: {rule}")
    guards = [g for g in find_guards(rule, predicates)
              if not any(isinstance(o, Var) for o in g.objects)]
    skip = {i for g in guards for i in g.literal_positions + g.comparison_positions}
    ground, limits, comparisons = [], [], []
    reads = set()
    for index, lit in enumerate(rule.body):
        if index in skip:
            continue
        if lit.is_comparison:
            cmp = lit.atom
            comparisons.append((linear_form(cmp.left), linear_form(cmp.right), cmp.op == "<"))
            continue
        atom = lit.atom
        if atom.object_variables:
            raise ContractViolation(f"rule is not semi-ground: {rule}")
        reads.add(atom.key())
        if atom.is_ground():
            ground.append(lit)
            continue
        info = predicates[atom.predicate]
        if not lit.positive or not info.kind.is_limit or not isinstance(atom.numeric, Var):
            raise ContractViolation(f"literal {lit} cannot be evaluated in {rule}")
        limits.append((atom.key(), info.kind, atom.numeric))
    guard_parts = []
    for g in guards:
        key = (g.predicate, tuple(o.name for o in g.objects))
        reads.add(key)
        guard_parts.append((key, g.lower, g.upper, g.step))

    head_info = predicates[rule.head.predicate]
    head_form = None
    if rule.head.numeric is not None:
        if isinstance(rule.head.numeric, AllInts):
            raise ContractViolation(f"'*' in the head of a proper rule: {rule}")
        head_form = linear_form(rule.head.numeric)

    # extremes of each literal's interval are optimal when every coefficient points the right way
    occurrences = Counter(var for _, _, var in limits)
    fixed = {v for _, lower, upper, _ in guard_parts for v in (lower, upper)}
    directions = {var: _direction(kind) for _, kind, var in limits}
    fast = all(n == 1 for n in occurrences.values()) and not (fixed & set(occurrences))
    used = set()
    if head_info.kind.is_limit and head_form is not None:
        used |= {v for v, _ in head_form.coefficients}
        fast = fast and _aligned(head_form, directions, _direction(head_info.kind))
    elif head_form is not None and head_form.coefficients:
        fast = False
    for left, right, _ in comparisons:
        used |= {v for v, _ in left.coefficients} | {v for v, _ in right.coefficients}
        fast = fast and _aligned(left, directions, -1) and _aligned(right, directions, 1)
    if used - fixed - set(directions):
        fast = False

    return CompiledRule(rule, rule.head.key(), head_info.kind, head_form, tuple(ground),
                        tuple(limits), tuple(guard_parts), tuple(comparisons), frozenset(reads), fast)


# =============================================================================
# OPTIMAL DERIVATION OF ONE RULE
# =============================================================================

def _extended(form: LinearForm, values: Mapping[Var, Tuple[int, int]]) -> Tuple[int, int]:
    """(infinity sign, finite part) of a linear form under extended values."""
    total = form.constant
    infinite = set()
    for var, coeff in form.coefficients:
        sign, value = values[var]
        if sign:
            infinite.add(sign if coeff > 0 else -sign)
        else:
            total += coeff * value
    if len(infinite) > 1:
        raise ContractViolation("opposite infinities in one term")
    return (infinite.pop() if infinite else 0), total


def _derive(compiled: CompiledRule, value: Optional[int]) -> RuleResult:
    predicate, objects = compiled.head_key
    if compiled.head_kind.is_limit:
        return DeriveLimit(predicate, objects, ALL_INTS if value is None else Finite(value))
    return Derive(Fact(predicate, objects, value))


def _fast_path(compiled: CompiledRule, entries, fixed: Mapping[Var, int]) -> RuleResult:
    values: Dict[Var, Tuple[int, int]] = {v: (0, k) for v, k in fixed.items()}
    for (_, kind, var), entry in zip(compiled.limit_literals, entries):
        values[var] = (_direction(kind), 0) if isinstance(entry, AllInts) else (0, entry.value)
    for left, right, strict in compiled.comparisons:
        l_inf, l_val = _extended(left, values)
        r_inf, r_val = _extended(right, values)
        if l_inf < 0 or r_inf > 0:
            continue
        if l_inf or r_inf:
            return NOT_APPLICABLE
        if not (l_val < r_val if strict else l_val <= r_val):
            return NOT_APPLICABLE
    if compiled.head_form is None:
        return _derive(compiled, None)
    inf, value = _extended(compiled.head_form, values)
    if inf:
        return _derive(compiled, None)
    return _derive(compiled, value)


def constraint_system(compiled: CompiledRule, entries, fixed: Mapping[Var, int]) -> Optional[RuleConstraintSystem]:
    """The body as integer rows; None if a ground comparison already fails."""
    rows: List[Row] = []
    variables: Set[Var] = set(fixed)
    for (_, kind, var), entry in zip(compiled.limit_literals, entries):
        variables.add(var)
        if isinstance(entry, AllInts):
            continue
        if kind is PredicateKind.MAX:
            rows.append(make_row({var: 1}, -entry.value))
        else:
            rows.append(make_row({var: -1}, entry.value))
    for var, value in fixed.items():
        rows.append(make_row({var: 1}, -value))
        rows.append(make_row({var: -1}, value))
    for left, right, strict in compiled.comparisons:
        row = row_leq(left, right, strict)
        if row is Trivial.FALSE:
            return None
        if row is not Trivial.TRUE:
            rows.append(row)
            variables |= row.variables
    objective = None
    if compiled.head_kind.is_limit:
        objective = compiled.head_form
        variables |= {v for v, _ in objective.coefficients}
    return RuleConstraintSystem(frozenset(variables), tuple(rows), objective,
                                compiled.head_kind is PredicateKind.MAX)


def evaluate_compiled(compiled: CompiledRule, J: PseudoInterpretation,
                      radius: int = DEFAULT_SEARCH_RADIUS) -> RuleResult:
    for lit in compiled.ground_literals:
        if not satisfies(J, lit):
            return NOT_APPLICABLE
    fixed: Dict[Var, int] = {}
    for key, lower, upper, step in compiled.guards:
        entry = J.entry(*key)
        if not isinstance(entry, Finite):
            return NOT_APPLICABLE
        fixed[lower] = entry.value
        fixed[upper] = entry.value + step
    entries = []
    for key, _, _ in compiled.limit_literals:
        entry = J.entry(*key)
        if entry is None:
            return NOT_APPLICABLE
        entries.append(entry)
    if compiled.fast:
        return _fast_path(compiled, entries, fixed)
    system = constraint_system(compiled, entries, fixed)
    if system is None:
        return NOT_APPLICABLE
    optimum = system.solve(radius)
    if optimum.status is OptimumStatus.INFEASIBLE:
        return NOT_APPLICABLE
    if not compiled.head_kind.is_limit:
        value = None if compiled.head_form is None else compiled.head_form.constant
        return _derive(compiled, value)
    if optimum.status is OptimumStatus.UNBOUNDED:
        return _derive(compiled, None)
    return _derive(compiled, optimum.value)


def opt_rule(rule: Rule, J: PseudoInterpretation, predicates: Mapping[str, PredicateInfo],
             radius: int = DEFAULT_SEARCH_RADIUS) -> RuleResult:
    """What a positive semi-ground rule derives over J at its optimal head value."""
    return evaluate_compiled(compile_rule(rule, predicates), J, radius)


# =============================================================================
# IMMEDIATE CONSEQUENCES
# =============================================================================

def _collect(results: Iterable[RuleResult], J: PseudoInterpretation):
    """Merge derivations into limit updates and new facts relative to J."""
    updates: Dict[SlotKey, LimitValue] = {}
    new_facts: List[Fact] = []
    for result in results:
        if isinstance(result, DeriveLimit):
            kind = J.kind_of(result.predicate)
            current = updates.get(result.key, J.entry(*result.key))
            merged = result.value if current is None else better(kind, current, result.value)
            if merged != J.entry(*result.key):
                updates[result.key] = merged
        elif isinstance(result, Derive):
            fact = result.fact
            if fact.value is None and (fact.predicate, fact.objects) in J.object_facts:
                continue
            if fact.value is not None and (fact.predicate, fact.objects, fact.value) in J.ordinary_facts:
                continue
            new_facts.append(fact)
    return updates, new_facts


def step(program: SemiGroundProgram, J: PseudoInterpretation,
         radius: int = DEFAULT_SEARCH_RADIUS) -> PseudoInterpretation:
    """One application of the immediate consequence operator."""
    compiled = [compile_rule(r, program.predicates) for r in program.rules]
    results = [evaluate_compiled(c, J, radius) for c in compiled]
    updates, new_facts = _collect(results, J)
    return J.with_entries(updates).merge(new_facts)


# =============================================================================
# TRACES
# =============================================================================

@dataclass(frozen=True)
class DivergenceDecision:
    stratum: int
    slot: SlotKey
    iteration: int
    improvements: int
    last_value: LimitValue
    reason: str

    def __str__(self):
        predicate, objects = self.slot
        return (f"stratum {self.stratum}: {predicate}({','.join(objects)}) -> * at iteration "
                f"{self.iteration} after {self.improvements} improvements ({self.reason})")


@dataclass
class StratumTrace:
    stratum: int
    rules: int
    slots: int
    threshold: Optional[int]
    magnitude_cap: Optional[int]
    iterations: int = 0
    status: MaterialisationStatus = MaterialisationStatus.EXACT
    improvements: Dict[SlotKey, int] = field(default_factory=dict)
    decisions: List[DivergenceDecision] = field(default_factory=list)
    undecided: List[str] = field(default_factory=list)
    snapshots: List[PseudoInterpretation] = field(default_factory=list)

    def summary(self) -> str:
        cap = "" if self.magnitude_cap is None else f", magnitude cap {self.magnitude_cap}"
        return (f"stratum {self.stratum}: {self.rules} rules, {self.slots} slots, "
                f"{self.iterations} iterations, threshold {self.threshold}{cap}, {self.status.value}")


@dataclass
class EvaluationTrace:
    strata: List[StratumTrace] = field(default_factory=list)

    @property
    def decisions(self) -> List[DivergenceDecision]:
        return [d for s in self.strata for d in s.decisions]

    def summary_lines(self) -> List[str]:
        lines = [s.summary() for s in self.strata]
        lines += [str(d) for d in self.decisions]
        for s in self.strata:
            lines += [f"stratum {s.stratum}: undecided {u}" for u in s.undecided]
        return lines


# =============================================================================
# POSITIVE FIXPOINT
# =============================================================================

def _slots_of(program: SemiGroundProgram) -> Set[SlotKey]:
    limit = program.limit_types()
    slots = {(f.predicate, f.objects) for f in program.facts if f.predicate in limit}
    for rule in program.rules:
        for lit in (Literal(rule.head),) + rule.body:
            if not lit.is_comparison and lit.atom.predicate in limit and not lit.atom.object_variables:
                slots.add(lit.atom.key())
    return slots


def _largest_constant(program: SemiGroundProgram) -> int:
    _, ints = program.to_program().constants()
    return max((abs(i) for i in ints), default=0)


def _resolve_threshold(config: EngineConfig, slots: int, rules: int) -> Tuple[Optional[int], bool]:
    """(threshold, exact): tc auto is slots x rules + 1; general auto counts nothing."""
    auto = slots * max(rules, 1) + 1
    if config.threshold == AUTO:
        return (auto, True) if config.is_tc else (None, False)
    return config.threshold, config.is_tc and config.threshold >= auto


def _resolve_cap(config: EngineConfig, slots: int, largest: int) -> Optional[int]:
    if config.is_tc:
        return None
    if config.magnitude_cap == AUTO:
        return (slots + 1) * (largest + 2) ** config.cap_exponent
    return config.magnitude_cap


def pseudo_materialise_positive(program: SemiGroundProgram, config: EngineConfig = None,
                                stratum: int = 1, largest_constant: Optional[int] = None,
                                ) -> Tuple[PseudoInterpretation, StratumTrace]:
    """Fixpoint of a positive semi-ground program, promoting diverging slots to `*`."""
    config = config or EngineConfig()
    compiled = [compile_rule(r, program.predicates) for r in program.rules]
    readers: Dict[SlotKey, List[int]] = defaultdict(list)
    for index, c in enumerate(compiled):
        for key in c.reads:
            readers[key].append(index)

    slots = _slots_of(program)
    threshold, exact_promotion = _resolve_threshold(config, len(slots), len(compiled))
    largest = _largest_constant(program) if largest_constant is None else largest_constant
    cap = _resolve_cap(config, len(slots), largest)
    trace = StratumTrace(stratum, len(compiled), len(slots), threshold, cap)

    J = PseudoInterpretation.from_facts(program.facts, program.limit_types())
    if config.keep_snapshots:
        trace.snapshots.append(J)

    schedule = set(range(len(compiled)))
    while schedule:
        if trace.iterations >= config.max_iterations:
            trace.status = MaterialisationStatus.INCOMPLETE
            logger.warning("stratum %d: no fixpoint after %d iterations", stratum, trace.iterations)
            break
        trace.iterations += 1
        results = []
        for index in sorted(schedule):
            try:
                results.append(evaluate_compiled(compiled[index], J, config.search_radius))
            except SearchExhausted as exc:
                trace.undecided.append(f"{compiled[index].rule}: {exc}")
                trace.status = MaterialisationStatus.INCOMPLETE
        updates, new_facts = _collect(results, J)
        changed: Set[SlotKey] = set()
        promoted: Dict[SlotKey, LimitValue] = {}
        for key, value in updates.items():
            changed.add(key)
            if J.entry(*key) is None or isinstance(value, AllInts):
                continue
            count = trace.improvements.get(key, 0) + 1
            trace.improvements[key] = count
            reason = None
            if threshold is not None and count > threshold:
                reason = f"more than {threshold} improvements"
            elif cap is not None and abs(value.value) > cap:
                reason = f"|{value.value}| exceeds magnitude cap {cap}"
            if reason:
                promoted[key] = ALL_INTS
                trace.decisions.append(DivergenceDecision(stratum, key, trace.iterations, count, value, reason))
                logger.info("stratum %d: promoting %s to * (%s)", stratum, key, reason)
                if not exact_promotion and trace.status is MaterialisationStatus.EXACT:
                    trace.status = MaterialisationStatus.PROMOTED_HEURISTIC
        updates.update(promoted)
        changed |= {(f.predicate, f.objects) for f in new_facts}
        J = J.with_entries(updates).merge(new_facts)
        if config.keep_snapshots:
            trace.snapshots.append(J)
        schedule = {i for key in changed for i in readers.get(key, ())}
    logger.debug(trace.summary())
    return J, trace


# =============================================================================
# STRATIFIED DRIVER
# =============================================================================

@dataclass
class MaterialisationResult:
    pseudo: PseudoInterpretation
    trace: EvaluationTrace
    status: MaterialisationStatus
    stratification: Stratification
    program: Program
    tainted: FrozenSet[SlotKey] = frozenset()

    def is_tainted(self, predicate: str, objects: Sequence[str]) -> bool:
        return (predicate, tuple(objects)) in self.tainted

    def verdict(self, phi: Fact) -> Verdict:
        if self.is_tainted(phi.predicate, phi.objects):
            return Verdict.UNKNOWN
        return Verdict.ENTAILED if entails(self.pseudo, phi) else Verdict.NOT_ENTAILED

    def lub(self, predicate: str, objects: Sequence[str]) -> LubAnswer:
        if self.is_tainted(predicate, objects):
            return UNKNOWN
        entry = self.pseudo.entry(predicate, tuple(objects))
        return NO_VALUE if entry is None else entry


def _add_dependencies(graph: nx.DiGraph, grounded: SemiGroundProgram) -> Set[SlotKey]:
    """Edges body atom -> head atom of every semi-ground instance; returns the heads."""
    heads = set()
    for rule in grounded.rules:
        head = rule.head.key()
        heads.add(head)
        graph.add_node(head)
        for lit in rule.body:
            if not lit.is_comparison and not lit.atom.object_variables:
                graph.add_edge(lit.atom.key(), head)
    return heads


def _tainted_slots(graph: nx.DiGraph, trace: EvaluationTrace,
                   heads: Mapping[int, Set[SlotKey]]) -> FrozenSet[SlotKey]:
    """Atoms whose answers may depend on a heuristic promotion or an unfinished stratum."""
    sources = set()
    for s in trace.strata:
        if s.status is MaterialisationStatus.INCOMPLETE:
            sources |= heads.get(s.stratum, set())
        elif s.status is MaterialisationStatus.PROMOTED_HEURISTIC:
            sources |= {d.slot for d in s.decisions}
    tainted = set(sources)
    for key in sources:
        if key in graph:
            tainted |= nx.descendants(graph, key)
    return frozenset(tainted)


def _check_preconditions(program: Program, config: EngineConfig):
    safety = check_safety(program)
    if not safety:
        raise ProgramError(safety.diagnostics[0])
    if config.is_tc:
        tc = check_type_consistent(program)
        if not tc:
            raise ContractViolation("tc mode needs a type-consistent program: " + tc.diagnostics[0])
    else:
        linear = check_limit_linear(program)
        if not linear:
            raise ContractViolation("program is not limit-linear: " + linear.diagnostics[0])


def materialise_stratified(program: Program, facts: Iterable[Fact] = (), config: EngineConfig = None,
                           stratification: Optional[Stratification] = None) -> MaterialisationResult:
    """Pseudo-materialisation of a stratified program, one stratum at a time."""
    config = config or EngineConfig()
    facts = tuple(facts)
    full = program.with_facts(facts) if facts else program
    if stratification is None:
        found = compute_stratification(full)
        if isinstance(found, StratificationFailure):
            raise ProgramError(str(found))
        stratification = found
    elif not stratification.is_valid_for(full):
        raise ContractViolation("stratification is not valid for the program")
    _check_preconditions(full, config)

    constants = full.constants()
    largest = max((abs(i) for i in constants[1]), default=0)
    strata = stratification.strata(full)
    J = PseudoInterpretation(limit_types=full.limit_types())
    trace = EvaluationTrace()
    graph = nx.DiGraph()
    heads: Dict[int, Set[SlotKey]] = {}
    for level, rules in strata:
        stratum_program = build_program(rules + tuple(f.to_rule() for f in J.to_facts()),
                                        full.predicates.values())
        grounded = semi_ground(stratum_program, constants=constants)
        heads[level] = _add_dependencies(graph, grounded)
        if config.is_tc:
            positive = tc_rewrite_reduct(grounded)
        else:
            positive = reduct(fold_guards(grounded))
        logger.info("stratum %d: %d rules, %d semi-ground instances, %d positive",
                    level, len(rules), len(grounded), len(positive))
        J, stratum_trace = pseudo_materialise_positive(positive, config, level, largest)
        trace.strata.append(stratum_trace)

    statuses = {s.status for s in trace.strata}
    if MaterialisationStatus.INCOMPLETE in statuses:
        status = MaterialisationStatus.INCOMPLETE
    elif MaterialisationStatus.PROMOTED_HEURISTIC in statuses:
        status = MaterialisationStatus.PROMOTED_HEURISTIC
    else:
        status = MaterialisationStatus.EXACT
    tainted = _tainted_slots(graph, trace, heads)
    return MaterialisationResult(J, trace, status, stratification, full, tainted)


def query(program: Program, facts: Iterable[Fact], phi: Fact, config: EngineConfig = None) -> Verdict:
    return materialise_stratified(program, facts, config).verdict(phi)


def lub_query(program: Program, facts: Iterable[Fact], predicate: str, objects: Sequence[str],
              config: EngineConfig = None) -> LubAnswer:
    kind = program.predicate(predicate).kind
    if not kind.is_limit:
        raise ContractViolation(f"{predicate} is not a limit predicate")
    return materialise_stratified(program, facts, config).lub(predicate, objects)
