"""
Bounded brute-force materialisation.

An evaluator that shares nothing with the engine beyond the syntax tree:
every numeric variable ranges over the window [-B, B] and rule bodies are
checked on the full integer grid with numpy. Limit slots are stored as their
best value clipped to the window, which is the limit closure restricted to
[-B, B]. A slot at the window edge is saturated: the oracle cannot tell it
apart from `*`.
"""

import itertools
import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, FrozenSet, Iterable, Iterator, List, Mapping, Optional, Set, Tuple

import numpy as np

from .analysis import StratificationFailure, compute_stratification
from .config import oracle_bound
from .errors import ContractViolation, ProgramError
from .model import (AllInts, Atom, Comparison, Fact, Literal, PredicateKind, Program, Rule, SlotKey,
                    sorted_facts)
from .terms import BinOp, Int, Var, substitute, variables_of

logger = logging.getLogger(__name__)

# grids larger than this are split over the leading variables
MAX_GRID_VARIABLES = 3


class OracleVerdict(Enum):
    TRUE = "true"
    FALSE = "false"
    OUT_OF_WINDOW = "out-of-window"


@dataclass
class BoundedStore:
    """Ground facts of a materialisation restricted to [-bound, bound]."""
    bound: int
    limit_types: Mapping[str, PredicateKind]
    objects: FrozenSet[str] = frozenset()
    object_facts: Set[SlotKey] = field(default_factory=set)
    ordinary_facts: Dict[SlotKey, Set[int]] = field(default_factory=dict)
    limits: Dict[SlotKey, int] = field(default_factory=dict)

    def add_limit(self, key: SlotKey, value: int) -> bool:
        """Merge a derived value, clipped into the window; True if the store grew."""
        kind = self.limit_types[key[0]]
        if kind is PredicateKind.MAX:
            if value < -self.bound:
                return False
            value = min(value, self.bound)
            old = self.limits.get(key)
            if old is not None and old >= value:
                return False
        else:
            if value > self.bound:
                return False
            value = max(value, -self.bound)
            old = self.limits.get(key)
            if old is not None and old <= value:
                return False
        self.limits[key] = value
        return True

    def add_fact(self, fact: Fact) -> bool:
        key = (fact.predicate, fact.objects)
        if fact.predicate in self.limit_types:
            if isinstance(fact.value, AllInts):
                kind = self.limit_types[fact.predicate]
                return self.add_limit(key, self.bound if kind is PredicateKind.MAX else -self.bound)
            return self.add_limit(key, fact.value)
        if fact.value is None:
            if key in self.object_facts:
                return False
            self.object_facts.add(key)
            return True
        values = self.ordinary_facts.setdefault(key, set())
        if fact.value in values:
            return False
        values.add(fact.value)
        return True

    def is_saturated(self, key: SlotKey) -> bool:
        value = self.limits.get(key)
        if value is None:
            return False
        kind = self.limit_types[key[0]]
        return value == (self.bound if kind is PredicateKind.MAX else -self.bound)

    def window_lub(self, predicate: str, objects: Tuple[str, ...]) -> Optional[int]:
        """Best value of a limit slot inside the window, None if the slot is empty there."""
        return self.limits.get((predicate, tuple(objects)))

    def facts_in_window(self) -> Iterator[Fact]:
        """Every ground fact of the store, limit slots expanded over the window."""
        for predicate, objects in sorted(self.object_facts):
            yield Fact(predicate, objects)
        for (predicate, objects), values in sorted(self.ordinary_facts.items()):
            for value in sorted(values):
                yield Fact(predicate, objects, value)
        for (predicate, objects), best in sorted(self.limits.items()):
            if self.limit_types[predicate] is PredicateKind.MAX:
                values = range(-self.bound, best + 1)
            else:
                values = range(best, self.bound + 1)
            for value in values:
                yield Fact(predicate, objects, value)


# =============================================================================
# GRID EVALUATION
# =============================================================================

class _Grid:
    """Open numpy grids for the numeric variables of one rule."""

    def __init__(self, variables: List[Var], fixed: Mapping[Var, int], bound: int,
                 defined: Mapping[Var, object] = None):
        self.axes: Dict[Var, np.ndarray] = {}
        window = np.arange(-bound, bound + 1, dtype=np.int64)
        for axis, var in enumerate(variables):
            shape = [1] * len(variables)
            shape[axis] = window.size
            self.axes[var] = window.reshape(shape)
        self.fixed = dict(fixed)
        self.defined = dict(defined or {})
        self.bound = bound
        self.shape = tuple([window.size] * len(variables))

    def in_window(self):
        """Mask of the points where every defined variable stays inside the window."""
        mask = np.ones(self.shape, dtype=bool)
        for var in self.defined:
            values = self.term(var)
            mask = np.logical_and(mask, (values >= -self.bound) & (values <= self.bound))
        return mask

    def term(self, term):
        if isinstance(term, Int):
            return np.int64(term.value)
        if isinstance(term, Var):
            if term in self.fixed:
                return np.int64(self.fixed[term])
            if term in self.defined:
                return self.term(self.defined[term])
            return self.axes[term]
        if isinstance(term, BinOp):
            left, right = self.term(term.left), self.term(term.right)
            if term.op == "+":
                return left + right
            if term.op == "-":
                return left - right
            return left * right
        raise ContractViolation(f"not a numeric term: {term!r}")


def _bind_atom(atom: Atom, binding: Mapping[Var, str]) -> Tuple[str, Tuple[str, ...]]:
    objects = tuple(binding[o] if isinstance(o, Var) else o.name for o in atom.objects)
    return atom.predicate, objects


def _literal_mask(lit: Literal, grid: _Grid, binding, store: BoundedStore):
    if lit.is_comparison:
        cmp: Comparison = lit.atom
        left, right = grid.term(cmp.left), grid.term(cmp.right)
        return left < right if cmp.op == "<" else left <= right
    key = _bind_atom(lit.atom, binding)
    atom = lit.atom
    if atom.numeric is None:
        present = np.bool_(key in store.object_facts)
    elif atom.predicate in store.limit_types:
        best = store.limits.get(key)
        if best is None:
            present = np.bool_(False)
        else:
            values = grid.term(atom.numeric)
            if store.limit_types[atom.predicate] is PredicateKind.MAX:
                present = values <= best
            else:
                present = values >= best
    else:
        allowed = store.ordinary_facts.get(key)
        if not allowed:
            present = np.bool_(False)
        else:
            present = np.isin(grid.term(atom.numeric), np.array(sorted(allowed), dtype=np.int64))
    return present if lit.positive else np.logical_not(present)


def _definitions(rule: Rule) -> Dict[Var, object]:
    """Variables pinned by an equality (a <= b together with b <= a), as terms over the others."""
    comparisons = [lit.atom for lit in rule.body if lit.is_comparison and lit.atom.op == "<="]
    sides = {(c.left, c.right) for c in comparisons}
    defined: Dict[Var, object] = {}
    for cmp in comparisons:
        if (cmp.right, cmp.left) not in sides:
            continue
        for var, expr in ((cmp.left, cmp.right), (cmp.right, cmp.left)):
            if not isinstance(var, Var) or var in defined:
                continue
            expanded = substitute(expr, defined)
            if var in variables_of(expanded):
                continue
            defined = {v: substitute(t, {var: expanded}) for v, t in defined.items()}
            defined[var] = expanded
            break
    return defined


def _fire(rule: Rule, store: BoundedStore, objects: List[str]) -> bool:
    """Apply one rule to the store; True if anything new was derived."""
    object_vars = sorted({v for lit in (Literal(rule.head),) + rule.body
                          if not lit.is_comparison for v in lit.atom.object_variables})
    defined = _definitions(rule)
    # pinned variables are computed from the grid axes instead of spanning one
    numeric_vars = sorted(rule.variables - set(object_vars) - set(defined))
    head = rule.head
    grew = False
    outer = numeric_vars[:-MAX_GRID_VARIABLES] if len(numeric_vars) > MAX_GRID_VARIABLES else []
    inner = numeric_vars[len(outer):]
    window = range(-store.bound, store.bound + 1)
    for choice in itertools.product(objects, repeat=len(object_vars)):
        binding = dict(zip(object_vars, choice))
        # object-only literals decide without a grid
        if any(not lit.is_comparison and lit.atom.numeric is None
               and ((_bind_atom(lit.atom, binding) in store.object_facts) != lit.positive)
               for lit in rule.body):
            continue
        for outer_values in itertools.product(window, repeat=len(outer)):
            grid = _Grid(inner, dict(zip(outer, outer_values)), store.bound, defined)
            mask = grid.in_window()
            for lit in rule.body:
                mask = np.logical_and(mask, _literal_mask(lit, grid, binding, store))
                if not mask.any():
                    break
            if not mask.any():
                continue
            key = _bind_atom(head, binding)
            if head.numeric is None:
                grew |= store.add_fact(Fact(*key))
            elif head.predicate in store.limit_types:
                values = np.broadcast_to(grid.term(head.numeric), grid.shape)[mask]
                if store.limit_types[head.predicate] is PredicateKind.MAX:
                    grew |= store.add_limit(key, int(values.max()))
                else:
                    grew |= store.add_limit(key, int(values.min()))
            else:
                values = np.broadcast_to(grid.term(head.numeric), grid.shape)[mask]
                for value in np.unique(values):
                    if -store.bound <= value <= store.bound:
                        grew |= store.add_fact(Fact(key[0], key[1], int(value)))
    return grew


# =============================================================================
# MATERIALISATION
# =============================================================================

def brute_force_materialise(program: Program, facts: Iterable[Fact] = (),
                            bound: Optional[int] = None) -> BoundedStore:
    """Stratum-by-stratum fixpoint with every numeric variable in [-bound, bound]."""
    bound = oracle_bound(bound)
    facts = tuple(facts)
    full = program.with_facts(facts) if facts else program
    objects, ints = full.constants()
    largest = max((abs(i) for i in ints), default=0)
    if largest > bound:
        raise ContractViolation(f"oracle bound {bound} is below the constant {largest}")
    found = compute_stratification(full)
    if isinstance(found, StratificationFailure):
        raise ProgramError(str(found))
    store = BoundedStore(bound, full.limit_types(), frozenset(objects))
    object_list = sorted(objects)
    for level, rules in found.strata(full):
        for rule in rules:
            if rule.is_fact:
                store.add_fact(Fact.from_atom(rule.head))
        proper = [r for r in rules if not r.is_fact]
        reads = [{lit.atom.predicate for lit in r.standard_literals()} for r in proper]
        pending = set(range(len(proper)))
        rounds = 0
        while pending:
            rounds += 1
            changed = set()
            for index in sorted(pending):
                if _fire(proper[index], store, object_list):
                    changed.add(proper[index].head.predicate)
            pending = {i for i, preds in enumerate(reads) if preds & changed}
        logger.debug("oracle stratum %d: %d rounds", level, rounds)
    return store


def oracle_entails(store: BoundedStore, phi: Fact) -> OracleVerdict:
    """Membership of a ground fact; `*` facts are answered by window saturation."""
    key = (phi.predicate, phi.objects)
    if isinstance(phi.value, AllInts):
        return OracleVerdict.TRUE if store.is_saturated(key) else OracleVerdict.FALSE
    if phi.value is None:
        return OracleVerdict.TRUE if key in store.object_facts else OracleVerdict.FALSE
    if abs(phi.value) > store.bound:
        return OracleVerdict.OUT_OF_WINDOW
    if phi.predicate in store.limit_types:
        best = store.limits.get(key)
        if best is None:
            return OracleVerdict.FALSE
        if store.limit_types[phi.predicate] is PredicateKind.MAX:
            return OracleVerdict.TRUE if phi.value <= best else OracleVerdict.FALSE
        return OracleVerdict.TRUE if phi.value >= best else OracleVerdict.FALSE
    return OracleVerdict.TRUE if phi.value in store.ordinary_facts.get(key, ()) else OracleVerdict.FALSE


def window_lub(store: BoundedStore, predicate: str, objects: Tuple[str, ...]) -> Optional[int]:
    return store.window_lub(predicate, objects)


def render_store(store: BoundedStore) -> str:
    """One line per slot: object and ordinary facts as facts, limit slots as their window best."""
    lines = []
    for fact in sorted_facts([Fact(p, o) for p, o in store.object_facts]
                             + [Fact(p, o, v) for (p, o), vs in store.ordinary_facts.items() for v in vs]):
        lines.append(str(fact))
    for (predicate, objects), best in sorted(store.limits.items()):
        mark = "  % saturated" if store.is_saturated((predicate, objects)) else ""
        lines.append(f"{Fact(predicate, objects, best)}{mark}")
    return "\n".join(lines) + ("\n" if lines else "")
