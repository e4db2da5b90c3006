"""
Program transformations: semi-grounding and reducts.

semi_ground replaces object variables and the numeric variables of ordinary
atoms by constants. reduct removes negation over EDB atoms of a semi-positive
semi-ground program using the facts. fold_guards eliminates lub patterns over
EDB predicates by substituting their value, and tc_rewrite_reduct chains the
two so that type-consistency survives the rewrite.
"""

import itertools
import logging
from dataclasses import dataclass
from types import MappingProxyType
from typing import Dict, FrozenSet, Iterable, Iterator, List, Mapping, Optional, Sequence, Tuple

from .analysis import check_type_consistent_reference, find_guards, ordinary_variables
from .errors import ContractViolation
from .model import (ALL_INTS, AllInts, Atom, Comparison, Fact, Finite, LimitValue, Literal,
                    PredicateInfo, PredicateKind, Program, Rule, better, build_program, preceq,
                    sorted_facts)
from .terms import Int, Obj, Var, evaluate, simplify, substitute

logger = logging.getLogger(__name__)


# =============================================================================
# SEMI-GROUND PROGRAMS
# =============================================================================

@dataclass(frozen=True)
class SemiGroundProgram:
    """Rules whose variables are all numeric and occur only in limit and comparison atoms."""
    rules: Tuple[Rule, ...]
    facts: FrozenSet[Fact]
    predicates: Mapping[str, PredicateInfo]
    origins: Tuple[int, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "predicates", MappingProxyType(dict(self.predicates)))
        if not self.origins:
            object.__setattr__(self, "origins", tuple(range(len(self.rules))))

    def idb_predicates(self) -> FrozenSet[str]:
        return frozenset(r.head.predicate for r in self.rules)

    def limit_types(self) -> Dict[str, PredicateKind]:
        return {p.name: p.kind for p in self.predicates.values() if p.kind.is_limit}

    def replace(self, rules: Sequence[Rule], origins: Sequence[int]) -> "SemiGroundProgram":
        return SemiGroundProgram(tuple(rules), self.facts, self.predicates, tuple(origins))

    def to_program(self) -> Program:
        fact_rules = tuple(f.to_rule() for f in sorted_facts(self.facts))
        return build_program(self.rules + fact_rules, self.predicates.values())

    def __len__(self):
        return len(self.rules)


class DatasetView:
    """Facts of a dataset with lub values per limit slot."""

    def __init__(self, facts: Iterable[Fact], predicates: Mapping[str, PredicateInfo]):
        self.predicates = predicates
        self.by_predicate: Dict[str, List[Fact]] = {}
        self.plain = set()
        self.lubs: Dict[Tuple[str, Tuple[str, ...]], LimitValue] = {}
        for fact in facts:
            self.by_predicate.setdefault(fact.predicate, []).append(fact)
            info = predicates.get(fact.predicate)
            if info is not None and info.kind.is_limit:
                key = (fact.predicate, fact.objects)
                value = ALL_INTS if isinstance(fact.value, AllInts) else Finite(fact.value)
                old = self.lubs.get(key)
                self.lubs[key] = value if old is None else better(info.kind, old, value)
            else:
                self.plain.add(fact)
        for facts_of in self.by_predicate.values():
            facts_of.sort(key=Fact.sort_key)

    def lub(self, predicate: str, objects: Tuple[str, ...]) -> Optional[LimitValue]:
        return self.lubs.get((predicate, tuple(objects)))

    def holds(self, atom: Atom) -> bool:
        """D ⊨ α for a ground standard atom."""
        predicate, objects = atom.key()
        info = self.predicates[predicate]
        if info.kind.is_limit:
            value = self.lub(predicate, objects)
            if value is None:
                return False
            return isinstance(value, AllInts) or preceq(info.kind, evaluate(atom.numeric), value.value)
        value = None if atom.numeric is None else evaluate(atom.numeric)
        return Fact(predicate, objects, value) in self.plain


# =============================================================================
# SEMI-GROUNDING
# =============================================================================

def _substitute_atom(atom: Atom, binding: Mapping[Var, object]) -> Atom:
    objects = tuple(binding.get(o, o) if isinstance(o, Var) else o for o in atom.objects)
    numeric = atom.numeric
    if numeric is not None and not isinstance(numeric, AllInts):
        numeric = simplify(substitute(numeric, binding))
    return Atom(atom.predicate, objects, numeric)


def substitute_rule(rule: Rule, binding: Mapping[Var, object],
                    fold_comparisons: bool = True) -> Optional[Rule]:
    """Apply a binding and simplify; None if a ground comparison is false."""
    body = []
    for lit in rule.body:
        if lit.is_comparison:
            cmp = lit.atom
            left = simplify(substitute(cmp.left, binding))
            right = simplify(substitute(cmp.right, binding))
            folded = Comparison(cmp.op, left, right)
            if fold_comparisons and not folded.variables:
                if not folded.holds():
                    return None
                continue
            body.append(Literal(folded))
        else:
            body.append(Literal(_substitute_atom(lit.atom, binding), lit.positive))
    return Rule(_substitute_atom(rule.head, binding), tuple(body), rule.location)


def _match(atom: Atom, fact: Fact, binding: Dict[Var, object], numeric_vars,
           match_numeric: bool = True) -> Optional[Dict]:
    """Extend binding so that the atom's objects (and bindable numeric) match fact."""
    if len(atom.objects) != len(fact.objects):
        return None
    extended = dict(binding)
    for term, name in zip(atom.objects, fact.objects):
        if isinstance(term, Var):
            bound = extended.get(term)
            if bound is None:
                extended[term] = Obj(name)
            elif bound != Obj(name):
                return None
        elif term.name != name:
            return None
    if not match_numeric or atom.numeric is None or fact.value is None:
        return extended
    numeric = atom.numeric
    if isinstance(numeric, Int):
        return extended if numeric.value == fact.value else None
    if isinstance(numeric, Var) and numeric in numeric_vars:
        bound = extended.get(numeric)
        if bound is None:
            extended[numeric] = Int(fact.value)
        elif bound != Int(fact.value):
            return None
    return extended


def _join(literals: List[Atom], view: DatasetView, numeric_vars,
          binding: Dict[Var, object]) -> Iterator[Dict[Var, object]]:
    if not literals:
        yield binding
        return
    atom, rest = literals[0], literals[1:]
    info = view.predicates[atom.predicate]
    seen = set()
    for fact in view.by_predicate.get(atom.predicate, ()):
        # limit slots only constrain the objects
        if info.kind.is_limit:
            marker = fact.objects
            if marker in seen:
                continue
            seen.add(marker)
        extended = _match(atom, fact, binding, numeric_vars, not info.kind.is_limit)
        if extended is not None:
            yield from _join(rest, view, numeric_vars, extended)


def _instances(rule: Rule, program: Program, view: DatasetView, objects: Sequence[str],
               integers: Sequence[int], prune: bool) -> Iterator[Dict[Var, object]]:
    ordinary = ordinary_variables(rule, program.predicates, positive_only=False)
    object_vars = set()
    for lit in (Literal(rule.head),) + rule.body:
        if not lit.is_comparison:
            object_vars |= lit.atom.object_variables
    to_bind = sorted(object_vars | ordinary)
    bindings: Iterable[Dict[Var, object]] = [{}]
    if prune:
        edb = [lit.atom for lit in rule.standard_literals()
               if lit.positive and program.predicates[lit.atom.predicate].is_edb]
        edb.sort(key=lambda a: len(view.by_predicate.get(a.predicate, ())))
        bindings = _join(edb, view, ordinary, {})
    for binding in bindings:
        free = [v for v in to_bind if v not in binding]
        domains = [[Obj(o) for o in objects] if v in object_vars else [Int(i) for i in integers]
                   for v in free]
        for choice in itertools.product(*domains):
            full = dict(binding)
            full.update(zip(free, choice))
            yield full


def semi_ground(program: Program, facts: Iterable[Fact] = (), prune: bool = True,
                constants: Optional[Tuple[FrozenSet[str], FrozenSet[int]]] = None) -> SemiGroundProgram:
    """Instantiate object and ordinary-numeric variables with constants of Π ∪ D.

    With prune, positive EDB literals are joined against the facts first and
    instances with a false ground comparison are dropped; without it every
    combination of constants is produced. `constants` overrides the constants
    of the program, for strata whose facts carry derived values.
    """
    facts = tuple(facts)
    full = program.with_facts(facts) if facts else program
    object_names, integer_values = constants if constants is not None else full.constants()
    objects = sorted(object_names)
    integers = sorted(integer_values)
    view = DatasetView(full.facts, full.predicates)
    rules: List[Rule] = []
    origins: List[int] = []
    for index, rule in enumerate(full.rules):
        if rule.is_fact:
            continue
        seen = set()
        for binding in _instances(rule, full, view, objects, integers, prune):
            instance = substitute_rule(rule, binding, fold_comparisons=prune)
            if instance is None or instance in seen:
                continue
            seen.add(instance)
            rules.append(instance)
            origins.append(index)
    logger.debug("semi-grounding: %d rules -> %d instances", len(full.proper_rules), len(rules))
    return SemiGroundProgram(tuple(rules), frozenset(full.facts), full.predicates, tuple(origins))


def is_semi_ground(rule: Rule, predicates: Mapping[str, PredicateInfo]) -> bool:
    """All variables numeric and only inside limit atoms and comparisons."""
    for lit in (Literal(rule.head),) + rule.body:
        if lit.is_comparison:
            continue
        atom = lit.atom
        if atom.object_variables:
            return False
        if atom.numeric_variables and not predicates[atom.predicate].kind.is_limit:
            return False
    return True


# =============================================================================
# REDUCT
# =============================================================================

def _check_semi_positive(sg: SemiGroundProgram):
    idb = sg.idb_predicates()
    for rule in sg.rules:
        for lit in rule.standard_literals():
            if not lit.positive and lit.atom.predicate in idb:
                raise ContractViolation(f"negation over IDB atom {lit.atom} in {rule}")


def reduct(sg: SemiGroundProgram) -> SemiGroundProgram:
    """Positive program entailing the same facts as a semi-positive one."""
    _check_semi_positive(sg)
    view = DatasetView(sg.facts, sg.predicates)
    rules, origins = [], []
    for rule, origin in zip(sg.rules, sg.origins):
        body = []
        deleted = False
        for lit in rule.body:
            if lit.positive:
                body.append(lit)
                continue
            atom = lit.atom
            info = sg.predicates[atom.predicate]
            if atom.is_ground():
                if view.holds(atom):
                    deleted = True
                    break
                continue
            if not info.kind.is_limit or not isinstance(atom.numeric, Var) or atom.object_variables:
                raise ContractViolation(f"non-ground negative literal {lit} is not over a limit slot")
            value = view.lub(*atom.key())
            if isinstance(value, AllInts):
                deleted = True
                break
            if value is None:
                continue
            bound = Int(value.value)
            if info.kind is PredicateKind.MAX:
                body.append(Literal(Comparison("<", bound, atom.numeric)))
            else:
                body.append(Literal(Comparison("<", atom.numeric, bound)))
        if deleted:
            logger.debug("reduct deletes %s", rule)
            continue
        rules.append(Rule(rule.head, tuple(body), rule.location))
        origins.append(origin)
    return sg.replace(rules, origins)


def fold_guards(sg: SemiGroundProgram) -> SemiGroundProgram:
    """Replace lub patterns over EDB slots by their value; delete rules they can never fire."""
    idb = sg.idb_predicates()
    view = DatasetView(sg.facts, sg.predicates)
    rules, origins = [], []
    for rule, origin in zip(sg.rules, sg.origins):
        guards = [g for g in find_guards(rule, sg.predicates)
                  if g.predicate not in idb and not any(isinstance(o, Var) for o in g.objects)]
        if not guards:
            rules.append(rule)
            origins.append(origin)
            continue
        drop = set()
        binding: Dict[Var, object] = {}
        fired = True
        for guard in guards:
            value = view.lub(guard.predicate, tuple(o.name for o in guard.objects))
            if value is None or isinstance(value, AllInts):
                fired = False
                break
            drop.update(guard.literal_positions + guard.comparison_positions)
            binding[guard.lower] = Int(value.value)
            binding[guard.upper] = Int(value.value + guard.step)
        if not fired:
            logger.debug("guard can never fire, deleting %s", rule)
            continue
        kept = Rule(rule.head, tuple(l for i, l in enumerate(rule.body) if i not in drop),
                    rule.location)
        folded = substitute_rule(kept, binding)
        if folded is None:
            continue
        rules.append(folded)
        origins.append(origin)
    return sg.replace(rules, origins)


def tc_rewrite_reduct(sg: SemiGroundProgram) -> SemiGroundProgram:
    """Reduct of a type-consistent semi-positive program that stays type-consistent."""
    before = check_type_consistent_reference(sg.rules, sg.predicates)
    if not before:
        raise ContractViolation("input is not type-consistent: " + "; ".join(before.diagnostics[:3]))
    result = reduct(fold_guards(sg))
    after = check_type_consistent_reference(result.rules, result.predicates)
    if not after:
        raise ContractViolation("rewrite lost type-consistency: " + "; ".join(after.diagnostics[:3]))
    return result
