"""
Seeded random programs, datasets and rules for the equivalence checks.

Programs are drawn from a small fixed vocabulary so that every generated
text parses; the filters (stratified, limit-linear, type-consistent) are the
analysis module's own. The comparison helpers hold the engine against the
bounded oracle and the transformations against the programs they rewrite.
"""

import itertools
import logging
from dataclasses import dataclass, field
from typing import Dict, FrozenSet, List, Optional, Sequence, Tuple

import networkx as nx
import numpy as np

from .analysis import (StratificationFailure, check_limit_linear, check_safety, check_type_consistent,
                       check_type_consistent_reference, compute_stratification, dependency_graph, is_positive)
from .config import EngineConfig
from .engine import (DeriveLimit, MaterialisationStatus, NotApplicable, RuleResult, Verdict,
                     materialise_stratified, opt_rule, pseudo_materialise_positive)
from .errors import ContractViolation, LimitLogError, SearchExhausted
from .frontend import parse_program
from .model import (ALL_INTS, AllInts, Fact, Finite, PredicateKind, Program, PseudoInterpretation,
                    Rule, build_program)
from .oracle import BoundedStore, OracleVerdict, brute_force_materialise, oracle_entails, window_lub
from .presburger import emit_presburger, enumerate_models
from .transform import fold_guards, reduct, semi_ground, tc_rewrite_reduct

logger = logging.getLogger(__name__)

OBJECTS = ("c1", "c2", "c3")
EDB_LIMITS = {"a": "max", "b": "min"}
IDB_LIMITS = {"f": "max", "g": "min", "h": "max"}
IDB_OBJECTS = ("q", "r")
CONSTANT_RANGE = 4
MAX_RULES = 6
MAX_FACTS = 10
MAX_STRATA = 3

DECLARATIONS = "".join(f"{kind} {name}/2.\n" for name, kind in {**EDB_LIMITS, **IDB_LIMITS}.items())


@dataclass(frozen=True)
class FuzzCase:
    index: int
    text: str
    program: Program
    facts: Tuple[Fact, ...]

    def describe(self) -> str:
        facts = " ".join(str(f) for f in self.facts)
        return f"case {self.index}\n{self.text}% dataset: {facts}"


# =============================================================================
# TEXT GENERATION
# =============================================================================

def _constant(rng) -> int:
    return int(rng.integers(-CONSTANT_RANGE, CONSTANT_RANGE + 1))


def _term(rng, parts: Sequence[Tuple[str, int]], with_constant: bool = True) -> str:
    """Linear term over (variable, direction) pairs, signs aligned with the direction mostly."""
    pieces = []
    for var, wanted in parts:
        magnitude = int(rng.choice([1, 1, 1, 2]))
        sign = wanted if rng.random() < 0.85 else -wanted
        coeff = sign * magnitude
        pieces.append(var if coeff == 1 else f"{coeff}*{var}")
    text = " + ".join(pieces)
    k = _constant(rng) if with_constant else 0
    if not pieces:
        return str(k)
    if k > 0:
        text += f" + {k}"
    elif k < 0:
        text += f" - {-k}"
    return text


def _kind_sign(kind: str) -> int:
    return 1 if kind == "max" else -1


class _RuleWriter:
    """Rules for one head, respecting a level assignment so the program stays stratified."""

    def __init__(self, rng, levels: Dict[str, int]):
        self.rng = rng
        self.levels = levels
        self.kinds = {**EDB_LIMITS, **IDB_LIMITS}

    def level(self, predicate: str) -> int:
        return self.levels.get(predicate, 0)

    def limit_source(self, level: int, strict: bool) -> Optional[str]:
        choices = [p for p in self.kinds
                   if (self.level(p) < level if strict else self.level(p) <= level)]
        return str(self.rng.choice(choices)) if choices else None

    def object_source(self, level: int, strict: bool) -> Optional[str]:
        choices = [p for p in IDB_OBJECTS
                   if (self.level(p) < level if strict else self.level(p) <= level)]
        return str(self.rng.choice(choices)) if choices else None

    def extras(self, level: int, variables: List[str], obj: str = "X") -> List[str]:
        rng = self.rng
        found = []
        if variables and rng.random() < 0.35:
            var = str(rng.choice(variables))
            k = _constant(rng)
            found.append(f"{var} <= {k}" if rng.random() < 0.5 else f"{k} <= {var}")
        if len(variables) == 2 and rng.random() < 0.2:
            found.append(f"{variables[0]} < {variables[1]}")
        if rng.random() < 0.25:
            lower = self.object_source(level, strict=True)
            if lower is not None and rng.random() < 0.5:
                found.append(f"not {lower}({obj})")
            else:
                source = self.limit_source(level, strict=True)
                if source is not None:
                    found.append(f"not {source}({obj}, {_constant(rng)})")
        if rng.random() < 0.2:
            found.append(f"p({obj})")
        return found

    def limit_rule(self, head: str) -> str:
        rng = self.rng
        level = self.level(head)
        want = _kind_sign(self.kinds[head])
        template = str(rng.choice(["base", "copy", "copy", "pair", "edge", "ordinary", "lub"]))
        body: List[str]
        obj, variables = "X", []
        if template == "base":
            term, body = str(_constant(rng)), ["p(X)"]
        elif template in ("copy", "edge", "ordinary"):
            source = self.limit_source(level, strict=False)
            direction = want * _kind_sign(self.kinds[source])
            term = _term(rng, [("M", direction)])
            body = [f"{source}(X, M)"]
            variables = ["M"]
            if template == "edge":
                obj = "Y"
                body.append("e(X, Y)")
            elif template == "ordinary":
                term += " + N"
                body.append("w(X, N)")
        elif template == "pair":
            first = self.limit_source(level, strict=False)
            second = self.limit_source(level, strict=False)
            term = _term(rng, [("M", want * _kind_sign(self.kinds[first])),
                               ("N", want * _kind_sign(self.kinds[second]))])
            body = [f"{first}(X, M)", f"{second}(X, N)"]
            variables = ["M", "N"]
        else:
            source = self.limit_source(level, strict=True)
            term = _term(rng, [("M", want * _kind_sign(self.kinds[source]))])
            body = [f"lub {source}(X, M)"]
        body += self.extras(level, variables, "X")
        return f"{head}({obj}, {term}) :- {', '.join(body)}."

    def object_rule(self, head: str) -> str:
        rng = self.rng
        level = self.level(head)
        template = str(rng.choice(["threshold", "negation", "edge", "lub"]))
        if template == "threshold":
            source = self.limit_source(level, strict=False)
            k = _constant(rng)
            test = f"{k} <= M" if rng.random() < 0.5 else f"M <= {k}"
            return f"{head}(X) :- {source}(X, M), {test}."
        if template == "negation":
            lower = self.object_source(level, strict=True)
            if lower is not None:
                return f"{head}(X) :- p(X), not {lower}(X)."
            source = self.limit_source(level, strict=True)
            return f"{head}(X) :- p(X), not {source}(X, {_constant(rng)})."
        if template == "edge":
            source = self.object_source(level, strict=False) or "p"
            return f"{head}(Y) :- {source}(X), e(X, Y)."
        source = self.limit_source(level, strict=True)
        k = _constant(rng)
        test = f"M < {k}" if rng.random() < 0.5 else f"{k} < M"
        return f"{head}(X) :- lub {source}(X, M), {test}."


def random_program_text(rng: np.random.Generator, max_rules: int = MAX_RULES) -> str:
    levels = {p: int(rng.integers(1, MAX_STRATA + 1)) for p in (*IDB_LIMITS, *IDB_OBJECTS)}
    writer = _RuleWriter(rng, levels)
    heads = list(IDB_LIMITS) + list(IDB_OBJECTS)
    rules = []
    for _ in range(int(rng.integers(1, max_rules + 1))):
        head = str(rng.choice(heads))
        rules.append(writer.limit_rule(head) if head in IDB_LIMITS else writer.object_rule(head))
    return DECLARATIONS + "\n".join(rules) + "\n"


def random_dataset(rng: np.random.Generator, max_facts: int = MAX_FACTS) -> Tuple[Fact, ...]:
    facts = set()
    for _ in range(int(rng.integers(1, max_facts + 1))):
        x = str(rng.choice(OBJECTS))
        kind = int(rng.integers(6))
        if kind == 0:
            facts.add(Fact("p", (x,)))
        elif kind == 1:
            facts.add(Fact("e", (x, str(rng.choice(OBJECTS)))))
        elif kind == 2:
            facts.add(Fact("w", (x,), _constant(rng)))
        else:
            predicate = "a" if kind in (3, 4) else "b"
            value = ALL_INTS if rng.random() < 0.05 else _constant(rng)
            facts.add(Fact(predicate, (x,), value))
    return tuple(sorted(facts, key=Fact.sort_key))


def _accept(text: str, facts: Tuple[Fact, ...], require_tc: bool, positive: bool = False) -> Optional[Program]:
    try:
        program = parse_program(text)
        full = program.with_facts(facts)
    except LimitLogError:
        return None
    if isinstance(compute_stratification(full), StratificationFailure):
        return None
    if not check_safety(full) or not check_limit_linear(full):
        return None
    if require_tc and not check_type_consistent(full):
        return None
    if positive and not is_positive(full):
        return None
    return program


def random_case(rng: np.random.Generator, index: int = 0, require_tc: bool = True,
                attempts: int = 500, positive: bool = False) -> FuzzCase:
    """A stratified limit-linear program with a dataset; type-consistent unless require_tc is off."""
    for _ in range(attempts):
        text = random_program_text(rng)
        facts = random_dataset(rng)
        program = _accept(text, facts, require_tc, positive)
        if program is not None:
            return FuzzCase(index, text, program, facts)
    raise ContractViolation(f"no acceptable program in {attempts} draws")


def random_cases(seed: int, count: int, require_tc: bool = True, positive: bool = False) -> List[FuzzCase]:
    rng = np.random.default_rng(seed)
    return [random_case(rng, i, require_tc, positive=positive) for i in range(count)]


# =============================================================================
# GROUND PROGRAMS
# =============================================================================

GROUND_DECLARATIONS = "max a/2.\nmax f/2.\nmin g/2.\n"
GROUND_OBJECT = "c1"
GROUND_RANGE = 1


def _ground_atom(rng, predicate: str) -> str:
    if predicate in ("p", "q"):
        return f"{predicate}({GROUND_OBJECT})"
    return f"{predicate}({GROUND_OBJECT}, {int(rng.integers(-GROUND_RANGE, GROUND_RANGE + 1))})"


def random_ground_text(rng: np.random.Generator, max_rules: int = 3) -> str:
    """A positive program without variables, small enough to enumerate its Presburger models."""
    lines = [f"{_ground_atom(rng, 'a')}."]
    if rng.random() < 0.5:
        lines.append(f"p({GROUND_OBJECT}).")
    for _ in range(int(rng.integers(1, max_rules + 1))):
        head = _ground_atom(rng, str(rng.choice(["f", "g", "q"])))
        sources = rng.choice(["a", "f", "g", "p"], size=int(rng.integers(1, 3)))
        lines.append(f"{head} :- {', '.join(_ground_atom(rng, str(s)) for s in sources)}.")
    return GROUND_DECLARATIONS + "\n".join(lines) + "\n"


def random_ground_cases(seed: int, count: int) -> List[FuzzCase]:
    rng = np.random.default_rng(seed)
    cases = []
    for index in range(count):
        text = random_ground_text(rng)
        cases.append(FuzzCase(index, text, parse_program(text), ()))
    return cases


def ground_queries(program: Program, bound: int = GROUND_RANGE) -> List[Fact]:
    """Facts over the predicates a program mentions, limit values in [-bound, bound]."""
    used = {rule.head.predicate for rule in program.rules}
    used |= {lit.atom.predicate for rule in program.rules for lit in rule.standard_literals()}
    objects, _ = program.constants()
    queries = []
    for predicate in sorted(used):
        info = program.predicates[predicate]
        for objs in itertools.product(sorted(objects), repeat=info.object_arity):
            if info.kind.is_limit:
                queries.extend(Fact(predicate, objs, k) for k in range(-bound, bound + 1))
            elif info.kind is PredicateKind.OBJECT:
                queries.append(Fact(predicate, objs))
    return queries


def check_presburger_faithful(case: FuzzCase, bound: int = GROUND_RANGE, oracle_window: int = 8) -> List[str]:
    """A query's document has a model in [-bound, bound] exactly when the oracle does not entail the query."""
    grounded = semi_ground(case.program, case.facts)
    store = brute_force_materialise(case.program, case.facts, oracle_window)
    problems = []
    for fact in ground_queries(case.program.with_facts(case.facts), bound):
        entailed = oracle_entails(store, fact) is OracleVerdict.TRUE
        model = enumerate_models(emit_presburger(grounded, fact), bound)
        if (model is None) != entailed:
            found = "no model" if model is None else f"model {model}"
            problems.append(f"{fact} in case {case.index}: oracle entailed={entailed}, document has {found}")
    return problems


# =============================================================================
# ENGINE AGAINST ORACLE
# =============================================================================

@dataclass
class Comparison:
    case: FuzzCase
    skipped: Optional[str] = None
    problems: List[str] = field(default_factory=list)
    checked: int = 0

    @property
    def ok(self) -> bool:
        return not self.problems


def _window_facts(full: Program, predicate: str, window: int, objects: Sequence[str]):
    info = full.predicates[predicate]
    for objs in itertools.product(sorted(objects), repeat=info.object_arity):
        if info.kind is PredicateKind.OBJECT:
            yield Fact(predicate, objs)
        elif info.kind.is_limit:
            for k in range(-window, window + 1):
                yield Fact(predicate, objs, k)


def _affected(full: Program, result, store: BoundedStore) -> FrozenSet[str]:
    """Predicates whose window view depends on an unbounded or window-clipped slot."""
    sources = {key[0] for key, value in result.pseudo.limit_entries.items() if isinstance(value, AllInts)}
    sources |= {key[0] for key in store.limits if store.is_saturated(key)}
    graph = dependency_graph(full)
    affected = set(sources)
    for predicate in sources:
        affected |= nx.descendants(graph, predicate)
    return frozenset(affected)


def compare_with_oracle(case: FuzzCase, bound: int = 64, window: Optional[int] = None,
                        config: Optional[EngineConfig] = None) -> Comparison:
    """Engine verdicts against oracle verdicts on every fact with |value| <= window.

    Slots downstream of an unbounded or clipped value are only checked for
    the presence of some value in the oracle.
    """
    window = bound * 3 // 4 if window is None else window
    report = Comparison(case)
    try:
        result = materialise_stratified(case.program, case.facts, config)
    except SearchExhausted as exc:
        report.skipped = f"search exhausted: {exc}"
        return report
    if result.status is not MaterialisationStatus.EXACT:
        report.skipped = f"engine result is {result.status.value}"
        return report
    large = [v.value for v in result.pseudo.limit_entries.values()
             if isinstance(v, Finite) and abs(v.value) > window]
    if large:
        report.skipped = f"engine value {large[0]} lies outside the window"
        return report
    store = brute_force_materialise(case.program, case.facts, bound)
    full = result.program
    affected = _affected(full, result, store)
    objects, _ = full.constants()
    for key, value in sorted(result.pseudo.limit_entries.items()):
        if isinstance(value, AllInts) and window_lub(store, *key) is None:
            report.problems.append(f"{key[0]}({','.join(key[1])}) is * but empty in the oracle")
    for predicate in sorted(full.predicates):
        if predicate in affected or full.predicates[predicate].kind is PredicateKind.ORDINARY:
            continue
        for fact in _window_facts(full, predicate, window, objects):
            engine = result.verdict(fact)
            oracle = oracle_entails(store, fact)
            report.checked += 1
            if oracle is OracleVerdict.OUT_OF_WINDOW:
                continue
            if (engine is Verdict.ENTAILED) != (oracle is OracleVerdict.TRUE):
                report.problems.append(f"{fact}: engine {engine.value}, oracle {oracle.value}")
    return report


# =============================================================================
# TRANSFORMATIONS AGAINST THE ORACLE
# =============================================================================

def _store_view(store: BoundedStore):
    limits = dict(store.limits)
    ordinary = {k: frozenset(v) for k, v in store.ordinary_facts.items() if v}
    return frozenset(store.object_facts), ordinary, limits


def _constants_fit(program: Program, bound: int) -> bool:
    _, ints = program.constants()
    # a guard on a value at the window edge has no witness inside the window
    return all(abs(i) <= bound // 2 for i in ints)


def check_semi_ground_preserves(case: FuzzCase, bound: int = 64) -> List[str]:
    """The semi-grounding has the same bounded materialisation as the program."""
    before = brute_force_materialise(case.program, case.facts, bound)
    grounded = semi_ground(case.program, case.facts)
    after = brute_force_materialise(grounded.to_program(), (), bound)
    if _store_view(before) != _store_view(after):
        return [f"semi-grounding changed the materialisation of case {case.index}"]
    return []


def stratum_programs(case: FuzzCase, config: Optional[EngineConfig] = None):
    """(level, stratum program with the lower strata folded in as facts), as the driver builds them."""
    config = config or EngineConfig()
    full = case.program.with_facts(case.facts)
    found = compute_stratification(full)
    if isinstance(found, StratificationFailure):
        raise ContractViolation(str(found))
    constants = full.constants()
    largest = max((abs(i) for i in constants[1]), default=0)
    J = PseudoInterpretation(limit_types=full.limit_types())
    for level, rules in found.strata(full):
        stratum = build_program(rules + tuple(f.to_rule() for f in J.to_facts()), full.predicates.values())
        yield level, stratum, constants
        grounded = semi_ground(stratum, constants=constants)
        positive = tc_rewrite_reduct(grounded) if config.is_tc else reduct(fold_guards(grounded))
        J, _ = pseudo_materialise_positive(positive, config, level, largest)


def check_reduct_preserves(case: FuzzCase, bound: int = 64) -> List[str]:
    """Each stratum and the reduct of its semi-grounding agree on the bounded materialisation."""
    problems = []
    for level, stratum, constants in stratum_programs(case):
        grounded = semi_ground(stratum, constants=constants)
        positive = reduct(fold_guards(grounded))
        if not (_constants_fit(stratum, bound) and _constants_fit(positive.to_program(), bound)):
            break
        before = brute_force_materialise(stratum, (), bound)
        after = brute_force_materialise(positive.to_program(), (), bound)
        if _store_view(before) != _store_view(after):
            problems.append(f"reduct changed stratum {level} of case {case.index}")
    return problems


def check_tc_rewrite(case: FuzzCase) -> List[str]:
    """tc_rewrite_reduct output is type-consistent by the reference check, stratum by stratum."""
    problems = []
    for level, stratum, constants in stratum_programs(case):
        grounded = semi_ground(stratum, constants=constants)
        try:
            rewritten = tc_rewrite_reduct(grounded)
        except ContractViolation as exc:
            problems.append(f"stratum {level} of case {case.index}: {exc}")
            continue
        verdict = check_type_consistent_reference(rewritten.rules, rewritten.predicates)
        if not verdict:
            problems.append(f"stratum {level} of case {case.index}: {verdict.diagnostics[0]}")
    return problems


def tc_checkers_agree(case: FuzzCase) -> bool:
    """Sign analysis and the reference check on the full semi-grounding give the same answer."""
    full = case.program.with_facts(case.facts)
    fast = check_type_consistent(full).ok
    grounded = semi_ground(full, prune=False)
    reference = check_type_consistent_reference(grounded.rules, grounded.predicates).ok
    return fast == reference


# =============================================================================
# SINGLE RULES
# =============================================================================

RULE_PREDICATES = DECLARATIONS


@dataclass(frozen=True)
class RuleCase:
    text: str
    program: Program
    rule: Rule
    facts: Tuple[Fact, ...]
    head: Tuple[str, Tuple[str, ...]]


def random_rule_case(rng: np.random.Generator, value_range: int = 8) -> RuleCase:
    """A semi-ground rule over the EDB slots a(c1), b(c1), a(c2), b(c2) and facts for those slots."""
    slots = [("a", "c1"), ("b", "c1"), ("a", "c2"), ("b", "c2")]
    n_vars = int(rng.integers(1, 3))
    names = ["M", "N"][:n_vars]
    body, directions = [], {}
    head = str(rng.choice(["f", "g"]))
    want = _kind_sign(IDB_LIMITS[head])
    for var in names:
        predicate, obj = slots[int(rng.integers(len(slots)))]
        body.append(f"{predicate}({obj}, {var})")
        directions[var] = want * _kind_sign(EDB_LIMITS[predicate])
    if n_vars == 1 and rng.random() < 0.3:
        predicate, obj = slots[int(rng.integers(len(slots)))]
        body.append(f"{predicate}({obj}, M)")
    for _ in range(int(rng.integers(0, 3))):
        left = _term(rng, [(v, -directions[v]) for v in names if rng.random() < 0.7])
        right = _term(rng, [(v, directions[v]) for v in names if rng.random() < 0.4])
        op = "<" if rng.random() < 0.3 else "<="
        body.append(f"{left} {op} {right}")
    term = _term(rng, [(v, directions[v]) for v in names])
    text = DECLARATIONS + f"{head}(c1, {term}) :- {', '.join(body)}.\n"
    facts = []
    for predicate, obj in slots:
        if rng.random() < 0.85:
            value = ALL_INTS if rng.random() < 0.15 else int(rng.integers(-value_range, value_range + 1))
            facts.append(Fact(predicate, (obj,), value))
    program = parse_program(text)
    return RuleCase(text, program, program.proper_rules[0], tuple(facts), (head, ("c1",)))


def compare_rule_with_oracle(case: RuleCase, bound: int = 60, window: int = 20) -> List[str]:
    """opt_rule on one rule against the oracle's best head value for it."""
    full = case.program.with_facts(case.facts)
    J = PseudoInterpretation.from_facts(case.facts, full.limit_types())
    try:
        result: RuleResult = opt_rule(case.rule, J, full.predicates)
    except SearchExhausted:
        return []
    store = brute_force_materialise(case.program, case.facts, bound)
    oracle = window_lub(store, *case.head)
    label = f"{case.rule} over {' '.join(str(f) for f in case.facts)}"
    if isinstance(result, NotApplicable):
        return [] if oracle is None else [f"{label}: engine not applicable, oracle {oracle}"]
    if not isinstance(result, DeriveLimit):
        return [f"{label}: unexpected result {result}"]
    if isinstance(result.value, AllInts):
        return [] if oracle is not None else [f"{label}: engine *, oracle empty"]
    if abs(result.value.value) > window:
        return []
    if oracle != result.value.value:
        return [f"{label}: engine {result.value.value}, oracle {oracle}"]
    return []
