"""
Core model of stratified limit Datalog.

Abstract syntax (atoms, literals, rules, programs), facts, limit values and
pseudo-interpretations: the finite representation of a limit-closed
Herbrand model with one optimal value per limit predicate and object tuple.
"""

from dataclasses import dataclass, field
from enum import Enum
from types import MappingProxyType
from typing import (Dict, FrozenSet, Iterable, Iterator, Mapping, Optional,
                    Tuple, Union)

from .errors import ContractViolation, ProgramError
from .terms import (BinOp, Int, NumericTerm, Obj, ObjectTerm, Var, evaluate,
                    format_term, is_ground, term_size, variables_of)

# =============================================================================
# LIMIT VALUES
# =============================================================================


@dataclass(frozen=True, order=True)
class Finite:
    value: int

    def __str__(self):
        return str(self.value)


@dataclass(frozen=True)
class AllInts:
    """Every integer; written `*` in concrete syntax."""

    def __str__(self):
        return "*"


ALL_INTS = AllInts()

LimitValue = Union[Finite, AllInts]


# =============================================================================
# PREDICATES
# =============================================================================

class PredicateKind(Enum):
    OBJECT = "object"
    ORDINARY = "ordinary"
    MIN = "min"
    MAX = "max"

    @property
    def is_limit(self) -> bool:
        return self in (PredicateKind.MIN, PredicateKind.MAX)

    @property
    def is_numeric(self) -> bool:
        return self is not PredicateKind.OBJECT


def preceq(kind: PredicateKind, k: int, limit: int) -> bool:
    """k ⪯ limit: <= for max predicates, >= for min predicates."""
    return k <= limit if kind is PredicateKind.MAX else k >= limit


def step_of(kind: PredicateKind) -> int:
    """The t of the lub expansion: +1 for max, -1 for min."""
    return 1 if kind is PredicateKind.MAX else -1


def better(kind: PredicateKind, a: LimitValue, b: LimitValue) -> LimitValue:
    """The ⪯-larger of two limit values; AllInts absorbs."""
    if isinstance(a, AllInts) or isinstance(b, AllInts):
        return ALL_INTS
    if kind is PredicateKind.MAX:
        return a if a.value >= b.value else b
    return a if a.value <= b.value else b


@dataclass(frozen=True)
class PredicateInfo:
    name: str
    arity: int
    kind: PredicateKind
    is_edb: bool = True

    @property
    def sort_of_last_position(self) -> str:
        return "numeric" if self.kind.is_numeric else "object"

    @property
    def object_arity(self) -> int:
        return self.arity - 1 if self.kind.is_numeric else self.arity

    def signature(self) -> str:
        return f"{self.name}/{self.arity}"


# =============================================================================
# SYNTAX
# =============================================================================

@dataclass(frozen=True)
class SourceLocation:
    line: int
    column: int

    def __str__(self):
        return f"{self.line}:{self.column}"


@dataclass(frozen=True)
class Atom:
    """Standard atom; `numeric` is None for object predicates, ALL_INTS only in facts."""
    predicate: str
    objects: Tuple[ObjectTerm, ...] = ()
    numeric: Optional[Union[NumericTerm, AllInts]] = None

    @property
    def variables(self) -> FrozenSet[Var]:
        found = {o for o in self.objects if isinstance(o, Var)}
        if self.numeric is not None and not isinstance(self.numeric, AllInts):
            found |= variables_of(self.numeric)
        return frozenset(found)

    @property
    def object_variables(self) -> FrozenSet[Var]:
        return frozenset(o for o in self.objects if isinstance(o, Var))

    @property
    def numeric_variables(self) -> FrozenSet[Var]:
        if self.numeric is None or isinstance(self.numeric, AllInts):
            return frozenset()
        return variables_of(self.numeric)

    def is_ground(self) -> bool:
        return not self.variables

    def key(self) -> Tuple[str, Tuple[str, ...]]:
        """(predicate, object names) of a ground-object atom."""
        return self.predicate, tuple(o.name for o in self.objects)

    def __str__(self):
        args = [str(o) for o in self.objects]
        if self.numeric is not None:
            args.append(str(self.numeric) if isinstance(self.numeric, AllInts)
                        else format_term(self.numeric))
        if not args:
            return self.predicate
        return f"{self.predicate}({','.join(args)})"


@dataclass(frozen=True)
class Comparison:
    op: str  # '<' or '<='
    left: NumericTerm
    right: NumericTerm

    @property
    def variables(self) -> FrozenSet[Var]:
        return variables_of(self.left) | variables_of(self.right)

    def holds(self, assignment: Mapping[Var, int] = None) -> bool:
        a = evaluate(self.left, assignment)
        b = evaluate(self.right, assignment)
        return a < b if self.op == "<" else a <= b

    def __str__(self):
        return f"{format_term(self.left)} {self.op} {format_term(self.right)}"


@dataclass(frozen=True)
class Literal:
    atom: Union[Atom, Comparison]
    positive: bool = True

    def __post_init__(self):
        if isinstance(self.atom, Comparison) and not self.positive:
            raise ContractViolation("comparison atoms cannot be negated")

    @property
    def is_comparison(self) -> bool:
        return isinstance(self.atom, Comparison)

    @property
    def variables(self) -> FrozenSet[Var]:
        return self.atom.variables

    def __str__(self):
        return str(self.atom) if self.positive else f"not {self.atom}"


@dataclass(frozen=True)
class Rule:
    head: Atom
    body: Tuple[Literal, ...] = ()
    location: Optional[SourceLocation] = field(default=None, compare=False)

    @property
    def is_fact(self) -> bool:
        return not self.body and self.head.is_ground()

    @property
    def variables(self) -> FrozenSet[Var]:
        found = set(self.head.variables)
        for lit in self.body:
            found |= lit.variables
        return frozenset(found)

    def standard_literals(self) -> Iterator[Literal]:
        return (lit for lit in self.body if not lit.is_comparison)

    def comparisons(self) -> Iterator[Comparison]:
        return (lit.atom for lit in self.body if lit.is_comparison)

    def where(self) -> str:
        return f" (at {self.location})" if self.location else ""

    def __str__(self):
        if not self.body:
            return f"{self.head}."
        return f"{self.head} :- {', '.join(str(lit) for lit in self.body)}."


def unit_size(rule: Rule) -> int:
    """Number of symbols of a rule with integers written in unary."""
    size = _atom_size(rule.head)
    for lit in rule.body:
        if lit.is_comparison:
            size += 1 + term_size(lit.atom.left) + term_size(lit.atom.right)
        else:
            size += _atom_size(lit.atom) + (0 if lit.positive else 1)
    return size


def _atom_size(atom: Atom) -> int:
    size = 1 + len(atom.objects)
    if isinstance(atom.numeric, AllInts):
        size += 1
    elif atom.numeric is not None:
        size += term_size(atom.numeric)
    return size


# =============================================================================
# FACTS
# =============================================================================

@dataclass(frozen=True)
class Fact:
    predicate: str
    objects: Tuple[str, ...] = ()
    value: Optional[Union[int, AllInts]] = None

    def sort_key(self):
        if self.value is None:
            tail = (0, 0)
        elif isinstance(self.value, AllInts):
            tail = (2, 0)
        else:
            tail = (1, self.value)
        return self.predicate, self.objects, tail

    def to_atom(self) -> Atom:
        numeric = None
        if isinstance(self.value, AllInts):
            numeric = ALL_INTS
        elif self.value is not None:
            numeric = Int(self.value)
        return Atom(self.predicate, tuple(Obj(o) for o in self.objects), numeric)

    def to_rule(self) -> Rule:
        return Rule(self.to_atom())

    @classmethod
    def from_atom(cls, atom: Atom) -> "Fact":
        if not atom.is_ground():
            raise ContractViolation(f"fact {atom} is not ground")
        value = atom.numeric
        if value is not None and not isinstance(value, AllInts):
            value = evaluate(value)
        return cls(atom.predicate, tuple(o.name for o in atom.objects), value)

    def __str__(self):
        return f"{self.to_atom()}."


def sorted_facts(facts: Iterable[Fact]):
    return sorted(facts, key=Fact.sort_key)


# =============================================================================
# PROGRAMS
# =============================================================================

@dataclass(frozen=True)
class Program:
    rules: Tuple[Rule, ...]
    predicates: Mapping[str, PredicateInfo]

    def __post_init__(self):
        object.__setattr__(self, "predicates", MappingProxyType(dict(self.predicates)))

    def __eq__(self, other):
        if not isinstance(other, Program):
            return NotImplemented
        return self.rules == other.rules and dict(self.predicates) == dict(other.predicates)

    def __hash__(self):
        return hash(self.rules)

    @property
    def facts(self) -> Tuple[Fact, ...]:
        return tuple(Fact.from_atom(r.head) for r in self.rules if r.is_fact)

    @property
    def proper_rules(self) -> Tuple[Rule, ...]:
        return tuple(r for r in self.rules if not r.is_fact)

    def predicate(self, name: str) -> PredicateInfo:
        try:
            return self.predicates[name]
        except KeyError:
            raise ProgramError(f"unknown predicate {name!r}")

    def kind(self, name: str) -> PredicateKind:
        return self.predicate(name).kind

    def idb_predicates(self) -> FrozenSet[str]:
        return frozenset(p.name for p in self.predicates.values() if not p.is_edb)

    def limit_types(self) -> Dict[str, PredicateKind]:
        return {p.name: p.kind for p in self.predicates.values() if p.kind.is_limit}

    def with_rules(self, rules: Iterable[Rule]) -> "Program":
        return build_program(rules, self.predicates.values())

    def with_facts(self, facts: Iterable[Fact]) -> "Program":
        """Union dataset facts into the program."""
        existing = set(self.rules)
        extra = []
        for fact in sorted_facts(set(facts)):
            rule = fact.to_rule()
            if rule not in existing:
                existing.add(rule)
                extra.append(rule)
        return build_program(self.rules + tuple(extra), self.predicates.values())

    def constants(self) -> Tuple[FrozenSet[str], FrozenSet[int]]:
        """Object and integer constants occurring anywhere in the program."""
        objects, ints = set(), set()
        for rule in self.rules:
            for lit in (Literal(rule.head),) + rule.body:
                atom = lit.atom
                if isinstance(atom, Comparison):
                    ints |= _ints_of(atom.left) | _ints_of(atom.right)
                    continue
                objects |= {o.name for o in atom.objects if isinstance(o, Obj)}
                if atom.numeric is not None and not isinstance(atom.numeric, AllInts):
                    ints |= _ints_of(atom.numeric)
        return frozenset(objects), frozenset(ints)

    def __str__(self):
        return "\n".join(str(r) for r in self.rules)


def _ints_of(term) -> set:
    if isinstance(term, Int):
        return {term.value}
    if isinstance(term, BinOp):
        return _ints_of(term.left) | _ints_of(term.right)
    return set()


def build_program(rules: Iterable[Rule], declared: Iterable[PredicateInfo]) -> Program:
    """Assemble a program, re-deriving EDB flags and checking signatures."""
    rules = tuple(rules)
    table: Dict[str, PredicateInfo] = {}
    for info in declared:
        table[info.name] = PredicateInfo(info.name, info.arity, info.kind, True)
    heads = {r.head.predicate for r in rules if not r.is_fact}
    for rule in rules:
        for lit in (Literal(rule.head),) + rule.body:
            if isinstance(lit.atom, Comparison):
                continue
            atom = lit.atom
            arity = len(atom.objects) + (atom.numeric is not None)
            info = table.get(atom.predicate)
            if info is None:
                kind = PredicateKind.ORDINARY if atom.numeric is not None else PredicateKind.OBJECT
                table[atom.predicate] = PredicateInfo(atom.predicate, arity, kind, True)
            elif info.arity != arity:
                raise ProgramError(
                    f"predicate {info.signature()} used as {atom.predicate}/{arity}{rule.where()}")
            elif info.kind.is_numeric and atom.numeric is None:
                raise ProgramError(f"{info.kind.value} predicate {info.signature()} used without its value "
                                   f"argument in {atom}{rule.where()}")
            elif not info.kind.is_numeric and atom.numeric is not None:
                raise ProgramError(f"object predicate {info.signature()} used with a numeric argument "
                                   f"in {atom}{rule.where()}")
    for name in heads:
        info = table[name]
        table[name] = PredicateInfo(info.name, info.arity, info.kind, False)
        if info.kind is PredicateKind.ORDINARY:
            raise ProgramError(f"numeric IDB predicate {info.signature()} needs a min/max declaration")
    for rule in rules:
        if isinstance(rule.head.numeric, AllInts) and not table[rule.head.predicate].kind.is_limit:
            raise ProgramError(f"'*' on non-limit predicate {rule.head.predicate}{rule.where()}")
    return Program(rules, table)


# =============================================================================
# PSEUDO-INTERPRETATIONS
# =============================================================================

SlotKey = Tuple[str, Tuple[str, ...]]


@dataclass(frozen=True)
class PseudoInterpretation:
    object_facts: FrozenSet[SlotKey] = frozenset()
    ordinary_facts: FrozenSet[Tuple[str, Tuple[str, ...], int]] = frozenset()
    limit_entries: Mapping[SlotKey, LimitValue] = field(default_factory=dict)
    limit_types: Mapping[str, PredicateKind] = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "limit_entries", MappingProxyType(dict(self.limit_entries)))
        object.__setattr__(self, "limit_types", MappingProxyType(dict(self.limit_types)))

    def __eq__(self, other):
        if not isinstance(other, PseudoInterpretation):
            return NotImplemented
        return (self.object_facts == other.object_facts
                and self.ordinary_facts == other.ordinary_facts
                and dict(self.limit_entries) == dict(other.limit_entries))

    def __hash__(self):
        return hash((self.object_facts, self.ordinary_facts))

    @classmethod
    def from_facts(cls, facts: Iterable[Fact],
                   limit_types: Mapping[str, PredicateKind]) -> "PseudoInterpretation":
        return cls(limit_types=limit_types).merge(facts)

    def entry(self, predicate: str, objects: Tuple[str, ...]) -> Optional[LimitValue]:
        return self.limit_entries.get((predicate, tuple(objects)))

    def kind_of(self, predicate: str) -> PredicateKind:
        return self.limit_types[predicate]

    def slots(self) -> Tuple[SlotKey, ...]:
        return tuple(sorted(self.limit_entries))

    def merge(self, facts: Iterable[Fact]) -> "PseudoInterpretation":
        """Least pseudo-interpretation above self containing the facts (copy on write)."""
        objects = set(self.object_facts)
        ordinary = set(self.ordinary_facts)
        entries = dict(self.limit_entries)
        for fact in facts:
            kind = self.limit_types.get(fact.predicate)
            if kind is not None:
                value = ALL_INTS if isinstance(fact.value, AllInts) else Finite(fact.value)
                key = (fact.predicate, fact.objects)
                old = entries.get(key)
                entries[key] = value if old is None else better(kind, old, value)
            elif fact.value is None:
                objects.add((fact.predicate, fact.objects))
            else:
                ordinary.add((fact.predicate, fact.objects, fact.value))
        return PseudoInterpretation(frozenset(objects), frozenset(ordinary), entries,
                                    self.limit_types)

    def with_entries(self, updates: Mapping[SlotKey, LimitValue],
                     new_objects: Iterable[SlotKey] = ()) -> "PseudoInterpretation":
        entries = dict(self.limit_entries)
        entries.update(updates)
        return PseudoInterpretation(self.object_facts | frozenset(new_objects),
                                    self.ordinary_facts, entries, self.limit_types)

    def to_facts(self) -> Tuple[Fact, ...]:
        """Fold back to facts: one fact per limit slot at its value (or `*`)."""
        facts = [Fact(p, objs) for p, objs in self.object_facts]
        facts += [Fact(p, objs, v) for p, objs, v in self.ordinary_facts]
        for (p, objs), value in self.limit_entries.items():
            facts.append(Fact(p, objs, ALL_INTS if isinstance(value, AllInts) else value.value))
        return tuple(sorted_facts(facts))

    def leq(self, other: "PseudoInterpretation") -> bool:
        """self ⊑ other."""
        if not (self.object_facts <= other.object_facts
                and self.ordinary_facts <= other.ordinary_facts):
            return False
        for key, value in self.limit_entries.items():
            theirs = other.limit_entries.get(key)
            if theirs is None:
                return False
            if better(self.limit_types[key[0]], value, theirs) != theirs:
                return False
        return True

    def __len__(self):
        return len(self.object_facts) + len(self.ordinary_facts) + len(self.limit_entries)


# =============================================================================
# SATISFACTION
# =============================================================================

def satisfies(J: PseudoInterpretation, alpha: Union[Atom, Comparison, Literal]) -> bool:
    """Truth of a ground atom or literal in the interpretation J represents."""
    if isinstance(alpha, Literal):
        value = satisfies(J, alpha.atom)
        return value if alpha.positive else not value
    if isinstance(alpha, Comparison):
        if alpha.variables:
            raise ContractViolation(f"comparison {alpha} is not ground")
        return alpha.holds()
    if not alpha.is_ground():
        raise ContractViolation(f"atom {alpha} is not ground")
    predicate, objects = alpha.key()
    if alpha.numeric is None:
        return (predicate, objects) in J.object_facts
    kind = J.limit_types.get(predicate)
    if kind is None:
        if isinstance(alpha.numeric, AllInts):
            raise ContractViolation(f"'*' on non-limit predicate {predicate}")
        return (predicate, objects, evaluate(alpha.numeric)) in J.ordinary_facts
    entry = J.entry(predicate, objects)
    if entry is None:
        return False
    if isinstance(entry, AllInts):
        return True
    if isinstance(alpha.numeric, AllInts):
        return False
    return preceq(kind, evaluate(alpha.numeric), entry.value)


def satisfies_lub(J: PseudoInterpretation, predicate: str, objects: Tuple[str, ...], k: int) -> bool:
    """J ⊨ A(a,k) and J ⊭ A(a,k+t): the entry is exactly Finite(k)."""
    return J.entry(predicate, tuple(objects)) == Finite(k)


def entails(J: PseudoInterpretation, phi: Fact) -> bool:
    if isinstance(phi.value, AllInts):
        return isinstance(J.entry(phi.predicate, phi.objects), AllInts)
    return satisfies(J, phi.to_atom())
