"""
OddMinSAT instances: boolean formulas, their brute-force answer, and the
reduction to a limit program plus dataset.

An instance is a formula over x_N..x_0. Its answer is the value of x_0 in the
satisfying assignment that is lexicographically least on (x_N, ..., x_0),
which is the least integer sum(2^i for true x_i).
"""

import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, FrozenSet, List, Optional, Tuple, Union

import numpy as np

from .errors import ContractViolation
from .frontend import parse_program
from .model import Fact, Program

logger = logging.getLogger(__name__)

PROGRAMS_DIR = Path(__file__).resolve().parent / "programs"
PROGRAM_FILE = PROGRAMS_DIR / "oddminsat.lpl"
GOAL = Fact("min_odd")


@dataclass(frozen=True)
class Variable:
    index: int

    def __str__(self):
        return f"x{self.index}"


@dataclass(frozen=True)
class Or:
    left: "Formula"
    right: "Formula"

    def __str__(self):
        return f"({self.left} | {self.right})"


@dataclass(frozen=True)
class Not:
    operand: "Formula"

    def __str__(self):
        return f"~{self.operand}"


Formula = Union[Variable, Or, Not]


def evaluate(formula: Formula, assignment: int) -> bool:
    """Truth of the formula when x_i is bit i of assignment."""
    if isinstance(formula, Variable):
        return bool((assignment >> formula.index) & 1)
    if isinstance(formula, Or):
        return evaluate(formula.left, assignment) or evaluate(formula.right, assignment)
    return not evaluate(formula.operand, assignment)


def variables_in(formula: Formula) -> FrozenSet[int]:
    if isinstance(formula, Variable):
        return frozenset({formula.index})
    if isinstance(formula, Or):
        return variables_in(formula.left) | variables_in(formula.right)
    return variables_in(formula.operand)


def _check_variables(n_vars: int, formula: Formula):
    if n_vars < 1:
        raise ContractViolation("at least one variable is needed")
    outside = [i for i in variables_in(formula) if i >= n_vars]
    if outside:
        raise ContractViolation(f"formula uses x{max(outside)} but only x0..x{n_vars - 1} exist")


def minimal_assignment(n_vars: int, formula: Formula) -> Optional[int]:
    """Least satisfying assignment as an integer, None if unsatisfiable."""
    _check_variables(n_vars, formula)
    for assignment in range(2 ** n_vars):
        if evaluate(formula, assignment):
            return assignment
    return None


def brute_force_oddminsat(n_vars: int, formula: Formula) -> Optional[bool]:
    """x_0 in the least satisfying assignment; None for an unsatisfiable formula."""
    found = minimal_assignment(n_vars, formula)
    return None if found is None else bool(found & 1)


# =============================================================================
# GENERATORS
# =============================================================================

def random_formula(n_vars: int, rng: np.random.Generator, depth: int = 3) -> Formula:
    if depth == 0 or rng.random() < 0.25:
        return Variable(int(rng.integers(n_vars)))
    if rng.random() < 0.65:
        return Or(random_formula(n_vars, rng, depth - 1), random_formula(n_vars, rng, depth - 1))
    return Not(random_formula(n_vars, rng, depth - 1))


def random_satisfiable_formula(n_vars: int, rng: np.random.Generator, depth: int = 3,
                               attempts: int = 1000) -> Formula:
    for _ in range(attempts):
        formula = random_formula(n_vars, rng, depth)
        if minimal_assignment(n_vars, formula) is not None:
            return formula
    raise ContractViolation(f"no satisfiable formula over {n_vars} variables in {attempts} draws")


# =============================================================================
# REDUCTION
# =============================================================================

def oddminsat_program() -> Program:
    return parse_program(PROGRAM_FILE.read_text())


def _node_names(formula: Formula) -> Dict[Formula, str]:
    names: Dict[Formula, str] = {}
    counter = 0

    def visit(node: Formula):
        nonlocal counter
        if node in names:
            return
        if isinstance(node, Variable):
            names[node] = str(node)
            return
        if isinstance(node, Or):
            visit(node.left)
            visit(node.right)
        else:
            visit(node.operand)
        names[node] = f"g{counter}"
        counter += 1

    visit(formula)
    return names


def oddminsat_dataset(n_vars: int, formula: Formula) -> Tuple[Fact, ...]:
    """shift, root, or and neg facts; one object per distinct subformula."""
    _check_variables(n_vars, formula)
    names = _node_names(formula)
    facts: List[Fact] = [Fact("shift", (f"x{i}",), 2 ** i) for i in range(n_vars)]
    facts.append(Fact("root", (names[formula],)))
    for node, name in names.items():
        if isinstance(node, Or):
            facts.append(Fact("or", (name, names[node.left], names[node.right])))
        elif isinstance(node, Not):
            facts.append(Fact("neg", (name, names[node.operand])))
    return tuple(facts)


def oddminsat_encode(n_vars: int, formula: Formula) -> Tuple[Program, Tuple[Fact, ...]]:
    """The fixed program and the dataset of one instance.

    The formula must be satisfiable: otherwise ass climbs through every
    integer and the evaluation never settles.
    """
    if minimal_assignment(n_vars, formula) is None:
        raise ContractViolation(f"formula {formula} is unsatisfiable")
    facts = oddminsat_dataset(n_vars, formula)
    logger.debug("oddminsat instance %s: %d facts", formula, len(facts))
    return oddminsat_program(), facts
