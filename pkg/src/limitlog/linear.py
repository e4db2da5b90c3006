"""
Integer linear constraint systems.

Rows are `Σ a·x + c <= 0` with integer data, each divided by the gcd of its
coefficients with the constant rounded up, which removes many
rationally-feasible but integer-infeasible systems. Projection onto one
variable is the exact rational optimum from sympy's simplex (`lpmin` and
`lpmax`), rounded inwards. Integer feasibility and optimisation finish with a
depth-first search over the per-variable boxes the projections induce.
"""

import logging
import math
from dataclasses import dataclass
from enum import Enum
from functools import lru_cache
from typing import Dict, FrozenSet, Iterable, Iterator, List, Mapping, Optional, Set, Tuple

import sympy
from sympy.solvers.simplex import InfeasibleLPError, UnboundedLPError, lpmax, lpmin

from .config import DEFAULT_SEARCH_RADIUS
from .errors import SearchExhausted
from .terms import LinearForm, Var, symbol_of

logger = logging.getLogger(__name__)

Coefficients = Tuple[Tuple[Var, int], ...]


@dataclass(frozen=True)
class Row:
    """Σ coefficients·x + constant <= 0."""
    coefficients: Coefficients
    constant: int

    def coefficient(self, var: Var) -> int:
        for v, a in self.coefficients:
            if v == var:
                return a
        return 0

    @property
    def variables(self) -> FrozenSet[Var]:
        return frozenset(v for v, _ in self.coefficients)

    def negated(self) -> "Row":
        return Row(tuple((v, -a) for v, a in self.coefficients), -self.constant)

    def __str__(self):
        terms = " + ".join(f"{a}*{v}" for v, a in self.coefficients) or "0"
        return f"{terms} + {self.constant} <= 0"


class Trivial(Enum):
    TRUE = "true"
    FALSE = "false"


def make_row(coefficients: Mapping[Var, int], constant: int):
    """Normalised row, or Trivial.TRUE / Trivial.FALSE for variable-free rows."""
    coeffs = tuple(sorted((v, a) for v, a in coefficients.items() if a))
    if not coeffs:
        return Trivial.TRUE if constant <= 0 else Trivial.FALSE
    g = 0
    for _, a in coeffs:
        g = math.gcd(g, a)
    if g > 1:
        coeffs = tuple((v, a // g) for v, a in coeffs)
        constant = -((-constant) // g)
    return Row(coeffs, constant)


def row_leq(left: LinearForm, right: LinearForm, strict: bool = False):
    """left <= right (left < right when strict) as a row."""
    coeffs: Dict[Var, int] = dict(left.coefficients)
    for var, a in right.coefficients:
        coeffs[var] = coeffs.get(var, 0) - a
    return make_row(coeffs, left.constant - right.constant + (1 if strict else 0))


class Infeasible(Exception):
    """Raised internally when a system derives 0 < c <= 0."""


def _add(rows: Set[Row], row) -> None:
    if row is Trivial.FALSE:
        raise Infeasible()
    if row is not Trivial.TRUE:
        rows.add(row)


def substitute(rows: Iterable[Row], var: Var, value: int) -> Set[Row]:
    result: Set[Row] = set()
    for row in rows:
        a = row.coefficient(var)
        if not a:
            result.add(row)
            continue
        coeffs = {v: c for v, c in row.coefficients if v != var}
        _add(result, make_row(coeffs, row.constant + a * value))
    return result


def substitute_form(rows: Iterable[Row], var: Var, form: Mapping[Var, int], constant: int) -> Set[Row]:
    """Replace var by Σ form·y + constant."""
    result: Set[Row] = set()
    for row in rows:
        a = row.coefficient(var)
        if not a:
            result.add(row)
            continue
        coeffs = {v: c for v, c in row.coefficients if v != var}
        for y, b in form.items():
            coeffs[y] = coeffs.get(y, 0) + a * b
        _add(result, make_row(coeffs, row.constant + a * constant))
    return result


# =============================================================================
# PROJECTION
# =============================================================================

def _constraints(rows: FrozenSet[Row]) -> Tuple[List[sympy.Rel], Dict[Var, sympy.Symbol]]:
    symbols: Dict[Var, sympy.Symbol] = {}
    constraints = []
    for row in rows:
        expr = sympy.Integer(row.constant)
        for var, a in row.coefficients:
            if var not in symbols:
                symbols[var] = symbol_of(var)
            expr += a * symbols[var]
        constraints.append(sympy.Le(expr, 0))
    return constraints, symbols


def _extreme(target: sympy.Symbol, constraints: List[sympy.Rel], maximise: bool) -> Optional[sympy.Rational]:
    solve = lpmax if maximise else lpmin
    try:
        value, _ = solve(target, constraints)
    except UnboundedLPError:
        return None
    except InfeasibleLPError:
        raise Infeasible()
    return value


@lru_cache(maxsize=65536)
def _bounds(rows: FrozenSet[Row], var: Var) -> Tuple[Optional[int], Optional[int]]:
    if not rows:
        return None, None
    constraints, symbols = _constraints(rows)
    if var not in symbols:
        # unconstrained, but the rest of the system must still be satisfiable
        _extreme(next(iter(symbols.values())), constraints, maximise=True)
        return None, None
    low = _extreme(symbols[var], constraints, maximise=False)
    high = _extreme(symbols[var], constraints, maximise=True)
    lower = None if low is None else int(sympy.ceiling(low))
    upper = None if high is None else int(sympy.floor(high))
    return lower, upper


def project_bounds(rows: Iterable[Row], var: Var) -> Tuple[Optional[int], Optional[int]]:
    """Integer bounds of var implied by the rows (None = unbounded on that side)."""
    lower, upper = _bounds(frozenset(rows), var)
    if lower is not None and upper is not None and lower > upper:
        raise Infeasible()
    return lower, upper


# =============================================================================
# INTEGER SYSTEMS
# =============================================================================

def _unit_equality(rows: Set[Row], keep: FrozenSet[Var]):
    for row in rows:
        if row.negated() not in rows:
            continue
        for var, a in row.coefficients:
            if abs(a) == 1 and var not in keep:
                return row, var, a
    return None


def eliminate_equalities(rows: Iterable[Row], keep: FrozenSet[Var] = frozenset()) -> Set[Row]:
    """Substitute away variables fixed by an equality with a unit coefficient."""
    current = set(rows)
    while True:
        found = _unit_equality(current, keep)
        if found is None:
            return current
        row, var, a = found
        # a·var + rest + c = 0  =>  var = -a·(rest + c)
        form = {v: -a * c for v, c in row.coefficients if v != var}
        constant = -a * row.constant
        current.discard(row)
        current.discard(row.negated())
        current = substitute_form(current, var, form, constant)


def _candidates(lower: Optional[int], upper: Optional[int], radius: int) -> Tuple[Iterator[int], bool]:
    if lower is not None and upper is not None:
        return iter(range(lower, upper + 1)), False
    if lower is not None:
        return iter(range(lower, lower + radius + 1)), True
    if upper is not None:
        return iter(range(upper, upper - radius - 1, -1)), True

    def outward():
        yield 0
        for k in range(1, radius + 1):
            yield k
            yield -k
    return outward(), True


def _box_width(bounds: Tuple[Optional[int], Optional[int]]) -> Tuple[int, int]:
    lower, upper = bounds
    if lower is not None and upper is not None:
        return 0, upper - lower
    if lower is not None or upper is not None:
        return 1, 0
    return 2, 0


def _search(rows: Set[Row], radius: int) -> Optional[Dict[Var, int]]:
    variables: Set[Var] = set()
    for row in rows:
        variables |= row.variables
    if not variables:
        return {}
    try:
        bounds = {v: project_bounds(rows, v) for v in sorted(variables)}
    except Infeasible:
        return None
    var = min(sorted(variables), key=lambda v: _box_width(bounds[v]))
    values, truncated = _candidates(*bounds[var], radius)
    exhausted = truncated
    for value in values:
        try:
            reduced = substitute(rows, var, value)
            solution = _search(reduced, radius)
        except Infeasible:
            continue
        except SearchExhausted:
            exhausted = True
            continue
        if solution is not None:
            solution[var] = value
            return solution
    if exhausted:
        raise SearchExhausted(f"no integer point of {var} within radius {radius}")
    return None


def find_integer_point(rows: Iterable[Row], radius: int = DEFAULT_SEARCH_RADIUS) -> Optional[Dict[Var, int]]:
    """Some integer solution, or None if there is none; SearchExhausted if undecided."""
    try:
        reduced = eliminate_equalities(rows)
    except Infeasible:
        return None
    return _search(reduced, radius)


class OptimumStatus(Enum):
    INFEASIBLE = "infeasible"
    OPTIMAL = "optimal"
    UNBOUNDED = "unbounded"


@dataclass(frozen=True)
class Optimum:
    status: OptimumStatus
    value: Optional[int] = None


_OBJECTIVE = Var("_objective", -1)


def optimise(objective: LinearForm, rows: Iterable[Row], maximise: bool = True,
             radius: int = DEFAULT_SEARCH_RADIUS) -> Optimum:
    """Exact integer optimum of a linear objective subject to the rows."""
    sign = 1 if maximise else -1
    form = {v: sign * a for v, a in objective.coefficients}
    form[_OBJECTIVE] = -1
    # objective variable equals the (sign-adjusted) objective
    defining = make_row(form, sign * objective.constant)
    system: Set[Row] = set(rows)
    try:
        system.add(defining)
        system.add(defining.negated())
        system = eliminate_equalities(system, keep=frozenset({_OBJECTIVE}))
        lower, upper = project_bounds(system, _OBJECTIVE)
    except Infeasible:
        return Optimum(OptimumStatus.INFEASIBLE)
    if upper is None:
        if find_integer_point(system, radius) is None:
            return Optimum(OptimumStatus.INFEASIBLE)
        return Optimum(OptimumStatus.UNBOUNDED)
    stop = lower if lower is not None else upper - radius
    exhausted = lower is None
    for value in range(upper, stop - 1, -1):
        try:
            point = _search(substitute(system, _OBJECTIVE, value), radius)
        except Infeasible:
            continue
        except SearchExhausted:
            exhausted = True
            continue
        if point is not None:
            return Optimum(OptimumStatus.OPTIMAL, sign * value)
    if exhausted:
        raise SearchExhausted(f"objective scan from {upper} gave no integer witness")
    return Optimum(OptimumStatus.INFEASIBLE)
