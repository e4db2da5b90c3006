"""
Terms: object constants, variables and integer arithmetic.

Numeric terms are trees over integer literals, variables, +, - and *.
Analysis works on their polynomial normal form, a mapping from monomials
(sorted tuples of variables, repeated for powers) to integer coefficients,
expanded by sympy.
"""

import re
from dataclasses import dataclass
from functools import lru_cache
from typing import Dict, FrozenSet, Iterator, Mapping, Tuple, Union

import sympy

from .errors import ContractViolation


# =============================================================================
# TERM NODES
# =============================================================================

@dataclass(frozen=True, order=True)
class Var:
    """A variable. `scope` is the index of the rule it belongs to."""
    name: str
    scope: int = 0

    def __str__(self):
        return self.name


@dataclass(frozen=True, order=True)
class Obj:
    """An object constant."""
    name: str

    def __str__(self):
        return _quote_object(self.name)


@dataclass(frozen=True)
class Int:
    value: int

    def __str__(self):
        return str(self.value)


@dataclass(frozen=True)
class BinOp:
    op: str  # '+', '-' or '*'
    left: "NumericTerm"
    right: "NumericTerm"

    def __str__(self):
        return format_term(self)


NumericTerm = Union[Int, Var, BinOp]
ObjectTerm = Union[Obj, Var]

Monomial = Tuple[Var, ...]
Polynomial = Dict[Monomial, int]

_PRECEDENCE = {"+": 1, "-": 1, "*": 2}


IDENTIFIER = re.compile(r"[a-z][A-Za-z0-9_]*(?:-[A-Za-z0-9_]+)*'*")
RESERVED_WORDS = frozenset({"not", "lub", "min", "max"})


def _quote_object(name: str) -> str:
    if IDENTIFIER.fullmatch(name) and name not in RESERVED_WORDS:
        return name
    return "'" + name.replace("\\", "\\\\").replace("'", "\\'") + "'"


def format_term(term) -> str:
    """Render a term with the minimal parentheses the grammar needs."""
    if isinstance(term, BinOp):
        prec = _PRECEDENCE[term.op]
        left = format_term(term.left)
        if isinstance(term.left, BinOp) and _PRECEDENCE[term.left.op] < prec:
            left = f"({left})"
        right = format_term(term.right)
        # right operands of equal precedence need parentheses (left associativity)
        if isinstance(term.right, BinOp) and _PRECEDENCE[term.right.op] <= prec:
            right = f"({right})"
        return f"{left} {term.op} {right}"
    return str(term)


# =============================================================================
# TRAVERSAL AND EVALUATION
# =============================================================================

def variables_of(term) -> FrozenSet[Var]:
    return frozenset(_iter_vars(term))


def _iter_vars(term) -> Iterator[Var]:
    if isinstance(term, Var):
        yield term
    elif isinstance(term, BinOp):
        yield from _iter_vars(term.left)
        yield from _iter_vars(term.right)


def is_ground(term) -> bool:
    return not any(True for _ in _iter_vars(term))


def evaluate(term: NumericTerm, assignment: Mapping[Var, int] = None) -> int:
    """Evaluate under an integer assignment; unbound variables are an error."""
    if isinstance(term, Int):
        return term.value
    if isinstance(term, Var):
        if assignment is None or term not in assignment:
            raise ContractViolation(f"variable {term} is unbound")
        return assignment[term]
    if isinstance(term, BinOp):
        a = evaluate(term.left, assignment)
        b = evaluate(term.right, assignment)
        if term.op == "+":
            return a + b
        if term.op == "-":
            return a - b
        return a * b
    raise ContractViolation(f"not a numeric term: {term!r}")


def substitute(term, mapping: Mapping[Var, object]):
    """Replace variables by terms (objects for object variables)."""
    if isinstance(term, Var):
        return mapping.get(term, term)
    if isinstance(term, BinOp):
        return BinOp(term.op, substitute(term.left, mapping), substitute(term.right, mapping))
    return term


# =============================================================================
# POLYNOMIAL NORMAL FORM
# =============================================================================

def symbol_of(var: Var) -> sympy.Symbol:
    """The sympy symbol standing for a variable (scope-qualified)."""
    return sympy.Symbol(f"{var.name}@{var.scope}")


def to_sympy(term: NumericTerm, symbols: Mapping[Var, sympy.Symbol]) -> sympy.Expr:
    if isinstance(term, Int):
        return sympy.Integer(term.value)
    if isinstance(term, Var):
        return symbols[term]
    if not isinstance(term, BinOp):
        raise ContractViolation(f"not a numeric term: {term!r}")
    left = to_sympy(term.left, symbols)
    right = to_sympy(term.right, symbols)
    if term.op == "+":
        return left + right
    if term.op == "-":
        return left - right
    return left * right


@lru_cache(maxsize=16384)
def _expanded(term: NumericTerm) -> Tuple[Tuple[Monomial, int], ...]:
    variables = sorted(variables_of(term))
    if not variables:
        value = evaluate(term)
        return (((), value),) if value else ()
    symbols = {var: symbol_of(var) for var in variables}
    poly = sympy.Poly(to_sympy(term, symbols), *(symbols[var] for var in variables))
    monomials = []
    for exponents, coeff in poly.as_dict().items():
        if coeff:
            mono = tuple(var for var, power in zip(variables, exponents) for _ in range(power))
            monomials.append((mono, int(coeff)))
    return tuple(monomials)


def to_polynomial(term: NumericTerm) -> Polynomial:
    """Expand to a polynomial with like terms collected and zeros removed."""
    if not isinstance(term, (Int, Var, BinOp)):
        raise ContractViolation(f"not a numeric term: {term!r}")
    return dict(_expanded(term))


def from_polynomial(poly: Mapping[Monomial, int]) -> NumericTerm:
    """Canonical term of a polynomial: variable monomials first, constant last."""
    monomials = sorted((m for m in poly if m), key=lambda m: (len(m), m))
    if () in poly:
        monomials.append(())
    if not monomials:
        return Int(0)
    term = None
    for mono in monomials:
        coeff = poly[mono]
        if term is None:
            term = _monomial_term(mono, coeff)
        elif coeff < 0:
            term = BinOp("-", term, _monomial_term(mono, -coeff))
        else:
            term = BinOp("+", term, _monomial_term(mono, coeff))
    return term


def _monomial_term(mono: Monomial, coeff: int) -> NumericTerm:
    if not mono:
        return Int(coeff)
    product: NumericTerm = mono[0]
    for var in mono[1:]:
        product = BinOp("*", product, var)
    if coeff == 1:
        return product
    return BinOp("*", Int(coeff), product)


def simplify(term: NumericTerm) -> NumericTerm:
    return from_polynomial(to_polynomial(term))


def degree(poly: Mapping[Monomial, int]) -> int:
    return max((len(m) for m in poly), default=0)


@dataclass(frozen=True)
class LinearForm:
    """constant + sum(coefficients[v] * v)"""
    constant: int
    coefficients: Tuple[Tuple[Var, int], ...]

    def as_dict(self) -> Dict[Var, int]:
        return dict(self.coefficients)


def linear_form(term: NumericTerm) -> LinearForm:
    """Linear view of a term; raises ContractViolation if it is not linear."""
    poly = to_polynomial(term)
    if degree(poly) > 1:
        raise ContractViolation(f"non-linear term {format_term(term)}")
    coeffs = tuple(sorted((m[0], c) for m, c in poly.items() if m))
    return LinearForm(poly.get((), 0), coeffs)


def term_size(term) -> int:
    """Symbol count with integers in unary (|k| + 1 symbols)."""
    if isinstance(term, Int):
        return abs(term.value) + 1
    if isinstance(term, BinOp):
        return 1 + term_size(term.left) + term_size(term.right)
    return 1
