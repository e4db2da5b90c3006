"""
Presburger encoding of positive semi-ground programs as SMT-LIB2 text.

Every slot A(a) of the program gets a boolean defined_A_a; limit slots also
get fin_A_a (the slot has a finite value) and an integer val_A_a; an ordinary
atom B(a,k) gets defined_B_a_k. The document asserts the encoding of every
rule and the negated encoding of the query fact, so it is unsatisfiable
exactly when the program entails the fact.
"""

import itertools
import logging
import re
from dataclasses import dataclass
from typing import Dict, Iterable, List, Mapping, Optional, Tuple, Union

from .errors import ContractViolation
from .model import AllInts, Atom, Comparison, Fact, PredicateInfo, PredicateKind, Rule, sorted_facts
from .terms import BinOp, Int, NumericTerm, Var
from .transform import SemiGroundProgram, is_semi_ground

logger = logging.getLogger(__name__)

_SIMPLE_SYMBOL = re.compile(r"[A-Za-z~!@$%^&*_+=<>.?/\-][A-Za-z0-9~!@$%^&*_+=<>.?/\-]*")
_RESERVED = {"and", "or", "not", "forall", "exists", "let", "true", "false", "assert", "par", "_"}


def symbol(name: str) -> str:
    """An SMT-LIB symbol, |quoted| when the name is not a simple symbol."""
    if _SIMPLE_SYMBOL.fullmatch(name) and name not in _RESERVED:
        return name
    return "|" + name.replace("|", "_").replace("\\", "_") + "|"


# =============================================================================
# FORMULA NODES
# =============================================================================

@dataclass(frozen=True)
class Const:
    """A declared constant: Bool or Int."""
    name: str
    sort: str


@dataclass(frozen=True)
class Truth:
    value: bool


@dataclass(frozen=True)
class Not:
    operand: "Formula"


@dataclass(frozen=True)
class And:
    operands: Tuple["Formula", ...]


@dataclass(frozen=True)
class Or:
    operands: Tuple["Formula", ...]


@dataclass(frozen=True)
class Implies:
    premise: "Formula"
    conclusion: "Formula"


@dataclass(frozen=True)
class Compare:
    op: str  # '<', '<=' or '>='
    left: Union[NumericTerm, Const]
    right: Union[NumericTerm, Const]


@dataclass(frozen=True)
class Forall:
    variables: Tuple[Var, ...]
    body: "Formula"


Formula = Union[Const, Truth, Not, And, Or, Implies, Compare, Forall]


def _slot_name(prefix: str, predicate: str, objects: Iterable[str], value: Optional[int] = None) -> str:
    parts = [prefix, predicate, *objects]
    if value is not None:
        parts.append(str(value) if value >= 0 else f"m{-value}")
    return "_".join(parts)


# =============================================================================
# ENCODING
# =============================================================================

class _Encoder:
    def __init__(self, predicates: Mapping[str, PredicateInfo]):
        self.predicates = predicates
        self.constants: Dict[str, Const] = {}

    def const(self, name: str, sort: str) -> Const:
        found = self.constants.get(name)
        if found is None:
            found = self.constants[name] = Const(name, sort)
        return found

    def atom(self, atom: Atom) -> Formula:
        if atom.object_variables:
            raise ContractViolation(f"atom {atom} is not semi-ground")
        predicate, objects = atom.key()
        info = self.predicates[predicate]
        if not info.kind.is_limit:
            value = None
            if atom.numeric is not None:
                if not isinstance(atom.numeric, Int):
                    raise ContractViolation(f"ordinary atom {atom} is not ground")
                value = atom.numeric.value
            return self.const(_slot_name("defined", predicate, objects, value), "Bool")
        defined = self.const(_slot_name("defined", predicate, objects), "Bool")
        fin = self.const(_slot_name("fin", predicate, objects), "Bool")
        if isinstance(atom.numeric, AllInts):
            return And((defined, Not(fin)))
        val = self.const(_slot_name("val", predicate, objects), "Int")
        op = "<=" if info.kind is PredicateKind.MAX else ">="
        return And((defined, Or((Not(fin), Compare(op, atom.numeric, val)))))

    def literal(self, lit) -> Formula:
        if lit.is_comparison:
            cmp: Comparison = lit.atom
            return Compare(cmp.op, cmp.left, cmp.right)
        encoded = self.atom(lit.atom)
        return encoded if lit.positive else Not(encoded)

    def rule(self, rule: Rule) -> Formula:
        head = self.atom(rule.head)
        if not rule.body:
            body: Formula = Truth(True)
            formula: Formula = head
        else:
            body = And(tuple(self.literal(l) for l in rule.body))
            formula = Implies(body, head)
        variables = tuple(sorted(rule.variables))
        return Forall(variables, formula) if variables else formula


@dataclass
class PresburgerDocument:
    constants: Tuple[Const, ...]
    assertions: Tuple[Formula, ...]
    query: Fact

    @property
    def quantified(self) -> bool:
        return any(isinstance(a, Forall) for a in self.assertions)

    def to_smtlib(self) -> str:
        lines = [f"; entailment of {self.query} holds iff unsat",
                 f"(set-logic {'LIA' if self.quantified else 'QF_LIA'})"]
        for const in self.constants:
            lines.append(f"(declare-fun {symbol(const.name)} () {const.sort})")
        for assertion in self.assertions:
            lines.append(f"(assert {render(assertion)})")
        lines.append("(check-sat)")
        return "\n".join(lines) + "\n"


def emit_presburger(program: SemiGroundProgram, phi: Fact) -> PresburgerDocument:
    """Pres(program) and not Pres(phi) as one document."""
    encoder = _Encoder(program.predicates)
    assertions: List[Formula] = []
    for rule in program.rules:
        if not is_semi_ground(rule, program.predicates):
            raise ContractViolation(f"rule is not semi-ground: {rule}")
        if any(not lit.positive for lit in rule.body):
            raise ContractViolation(f"rule is not positive: {rule}")
        assertions.append(encoder.rule(rule))
    for fact in sorted_facts(program.facts):
        assertions.append(encoder.atom(fact.to_atom()))
    if phi.predicate not in program.predicates:
        raise ContractViolation(f"unknown predicate in query {phi}")
    assertions.append(Not(encoder.atom(phi.to_atom())))
    constants = tuple(sorted(encoder.constants.values(), key=lambda c: (c.sort, c.name)))
    logger.debug("presburger document: %d constants, %d assertions", len(constants), len(assertions))
    return PresburgerDocument(constants, tuple(assertions), phi)


# =============================================================================
# RENDERING
# =============================================================================

def _render_term(term) -> str:
    if isinstance(term, Const):
        return symbol(term.name)
    if isinstance(term, Int):
        return str(term.value) if term.value >= 0 else f"(- {-term.value})"
    if isinstance(term, Var):
        return symbol(term.name)
    if isinstance(term, BinOp):
        return f"({term.op} {_render_term(term.left)} {_render_term(term.right)})"
    raise ContractViolation(f"cannot render {term!r}")


def render(formula: Formula) -> str:
    if isinstance(formula, Const):
        return symbol(formula.name)
    if isinstance(formula, Truth):
        return "true" if formula.value else "false"
    if isinstance(formula, Not):
        return f"(not {render(formula.operand)})"
    if isinstance(formula, (And, Or)):
        word = "and" if isinstance(formula, And) else "or"
        if not formula.operands:
            return "true" if word == "and" else "false"
        return f"({word} {' '.join(render(f) for f in formula.operands)})"
    if isinstance(formula, Implies):
        return f"(=> {render(formula.premise)} {render(formula.conclusion)})"
    if isinstance(formula, Compare):
        return f"({formula.op} {_render_term(formula.left)} {_render_term(formula.right)})"
    if isinstance(formula, Forall):
        bound = " ".join(f"({symbol(v.name)} Int)" for v in formula.variables)
        return f"(forall ({bound}) {render(formula.body)})"
    raise ContractViolation(f"cannot render {formula!r}")


# =============================================================================
# BOUNDED MODEL ENUMERATION
# =============================================================================

def _value(term, env: Mapping) -> int:
    if isinstance(term, Const):
        return env[term.name]
    if isinstance(term, Int):
        return term.value
    if isinstance(term, Var):
        return env[term]
    left, right = _value(term.left, env), _value(term.right, env)
    if term.op == "+":
        return left + right
    if term.op == "-":
        return left - right
    return left * right


def holds(formula: Formula, env: Mapping, bound: int) -> bool:
    """Truth under env; quantifiers range over [-bound, bound]."""
    if isinstance(formula, Const):
        return bool(env[formula.name])
    if isinstance(formula, Truth):
        return formula.value
    if isinstance(formula, Not):
        return not holds(formula.operand, env, bound)
    if isinstance(formula, And):
        return all(holds(f, env, bound) for f in formula.operands)
    if isinstance(formula, Or):
        return any(holds(f, env, bound) for f in formula.operands)
    if isinstance(formula, Implies):
        return not holds(formula.premise, env, bound) or holds(formula.conclusion, env, bound)
    if isinstance(formula, Compare):
        a, b = _value(formula.left, env), _value(formula.right, env)
        return {"<": a < b, "<=": a <= b, ">=": a >= b}[formula.op]
    if isinstance(formula, Forall):
        window = range(-bound, bound + 1)
        for values in itertools.product(window, repeat=len(formula.variables)):
            inner = dict(env)
            inner.update(zip(formula.variables, values))
            if not holds(formula.body, inner, bound):
                return False
        return True
    raise ContractViolation(f"cannot evaluate {formula!r}")


def enumerate_models(document: PresburgerDocument, bound: int,
                     limit: int = 1_000_000) -> Optional[Dict[str, int]]:
    """First model with integer constants in [-bound, bound], or None.

    Exhaustive over the window, so only meant for small ground documents.
    """
    bools = [c for c in document.constants if c.sort == "Bool"]
    ints = [c for c in document.constants if c.sort == "Int"]
    size = 2 ** len(bools) * (2 * bound + 1) ** len(ints)
    if size > limit:
        raise ContractViolation(f"{size} assignments exceed the enumeration limit {limit}")
    window = range(-bound, bound + 1)
    for truth in itertools.product((False, True), repeat=len(bools)):
        for numbers in itertools.product(window, repeat=len(ints)):
            env = {c.name: v for c, v in zip(bools, truth)}
            env.update({c.name: v for c, v in zip(ints, numbers)})
            if all(holds(a, env, bound) for a in document.assertions):
                return env
    return None
