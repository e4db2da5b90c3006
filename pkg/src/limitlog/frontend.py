"""
Concrete syntax of limit programs (.lpl) and datasets (.lpd).

    % shortest path
    min ds/2.
    ds(X, 0) :- source(X).
    ds(Y, M + N) :- ds(X, M), edge(X, Y, N).
    sp-edge(X, Y) :- lub ds(X, M1), lub ds(Y, M2), edge(X, Y, N), target(Y), M1 + N = M2.

Variables start uppercase (or `_`), objects lowercase or single-quoted.
`=` and `lub` are sugar expanded while loading; compound numeric arguments of
body atoms are pulled out into fresh variables. Sorts are inferred: the last
position of a predicate is numeric when it is declared min/max or when any
occurrence carries an integer, arithmetic, or a variable used numerically.
"""

import logging
from dataclasses import dataclass
from typing import Dict, FrozenSet, Iterable, List, Optional, Sequence, Set, Tuple

from lark import Lark, Transformer, v_args
from lark.exceptions import LarkError, UnexpectedCharacters, UnexpectedInput, VisitError

from .errors import ParseError, ProgramError
from .model import (ALL_INTS, AllInts, Atom, Comparison, Fact, Literal, PredicateInfo,
                    PredicateKind, Program, PseudoInterpretation, Rule, SourceLocation,
                    build_program, sorted_facts, step_of)
from .terms import BinOp, Int, Obj, Var

logger = logging.getLogger(__name__)

# =============================================================================
# GRAMMAR
# =============================================================================

GRAMMAR = r"""
start: statement*
query: atom "."?

?statement: declaration | clause

declaration: (MIN | MAX) IDENT "/" INT "."

clause: atom "."                -> fact_clause
      | atom ":-" body "."      -> rule_clause

body: body_item ("," body_item)*

?body_item: atom                -> positive
          | "not" atom          -> negative
          | "lub" atom          -> lub
          | sum COMP_OP sum     -> comparison

atom: IDENT ["(" arg ("," arg)* ")"]

?arg: sum
    | "*"                       -> star

?sum: product
    | sum "+" product           -> add
    | sum "-" product           -> sub

?product: unit
        | product "*" unit      -> mul

?unit: INT                      -> integer
     | "-" INT                  -> negative_integer
     | VAR                      -> variable
     | IDENT                    -> object
     | QUOTED                   -> quoted
     | "(" sum ")"

MIN: "min"
MAX: "max"
COMP_OP: "<=" | ">=" | "<" | ">" | "="
IDENT: /[a-z][A-Za-z0-9_]*(?:-[A-Za-z0-9_]+)*'*/
VAR: /[A-Z_][A-Za-z0-9_]*'*/
QUOTED: /'(?:[^'\\]|\\.)*'/
INT: /[0-9]+/
COMMENT: /%[^\n]*/

%import common.WS
%ignore WS
%ignore COMMENT
"""

_PARSER = Lark(GRAMMAR, start=["start", "query"], parser="lalr", propagate_positions=True)

STAR = object()  # placeholder for `*` before sort checking


# =============================================================================
# RAW STATEMENTS
# =============================================================================

@dataclass
class RawVar:
    name: str


@dataclass
class RawAtom:
    predicate: str
    args: List[object]
    location: SourceLocation


@dataclass
class RawClause:
    head: RawAtom
    body: List[Tuple]             # ("pos"|"neg"|"lub", RawAtom) or ("cmp", op, left, right)
    location: SourceLocation
    is_rule: bool


@dataclass
class RawDeclaration:
    kind: PredicateKind
    name: str
    arity: int
    location: SourceLocation


def _location(meta) -> SourceLocation:
    return SourceLocation(getattr(meta, "line", 0), getattr(meta, "column", 0))


@v_args(meta=True)
class _ToRaw(Transformer):
    """Lark tree to raw statements; variables stay names until sorts are known."""

    def start(self, meta, children):
        return list(children)

    def query(self, meta, children):
        return children[0]

    def declaration(self, meta, children):
        kind, name, arity = children
        return RawDeclaration(PredicateKind(str(kind)), str(name), int(arity), _location(meta))

    def fact_clause(self, meta, children):
        return RawClause(children[0], [], _location(meta), is_rule=False)

    def rule_clause(self, meta, children):
        return RawClause(children[0], children[1], _location(meta), is_rule=True)

    def body(self, meta, children):
        return list(children)

    def positive(self, meta, children):
        return ("pos", children[0])

    def negative(self, meta, children):
        return ("neg", children[0])

    def lub(self, meta, children):
        return ("lub", children[0])

    def comparison(self, meta, children):
        left, op, right = children
        return ("cmp", str(op), left, right)

    def atom(self, meta, children):
        name, *args = children
        args = [a for a in args if a is not None]
        return RawAtom(str(name), args, _location(meta))

    def star(self, meta, children):
        return STAR

    def add(self, meta, children):
        return BinOp("+", children[0], children[1])

    def sub(self, meta, children):
        return BinOp("-", children[0], children[1])

    def mul(self, meta, children):
        return BinOp("*", children[0], children[1])

    def integer(self, meta, children):
        return Int(int(children[0]))

    def negative_integer(self, meta, children):
        return Int(-int(children[0]))

    def variable(self, meta, children):
        return RawVar(str(children[0]))

    def object(self, meta, children):
        return Obj(str(children[0]))

    def quoted(self, meta, children):
        text = str(children[0])[1:-1]
        return Obj(text.replace("\\'", "'").replace("\\\\", "\\"))


def _parse_raw(text: str, start: str = "start"):
    try:
        tree = _PARSER.parse(text, start=start)
        return _ToRaw().transform(tree)
    except UnexpectedInput as exc:
        found = getattr(exc, "token", None) or getattr(exc, "char", "")
        if isinstance(exc, UnexpectedCharacters):
            found = exc.char
        raise ParseError(f"unexpected {str(found)!r}", exc.line, exc.column, str(found)) from exc
    except VisitError as exc:
        raise ParseError(str(exc.orig_exc)) from exc
    except LarkError as exc:
        raise ParseError(str(exc)) from exc


# =============================================================================
# SORT INFERENCE
# =============================================================================

_NUMERIC, _OBJECT = "numeric", "object"


def _raw_atoms(clause: RawClause):
    yield clause.head
    for item in clause.body:
        if item[0] != "cmp":
            yield item[1]


def _term_var_names(term) -> Set[str]:
    if isinstance(term, RawVar):
        return {term.name}
    if isinstance(term, BinOp):
        return _term_var_names(term.left) | _term_var_names(term.right)
    return set()


class _SortTable:
    """Fixpoint of sort constraints between predicates and clause variables."""

    def __init__(self, clauses: Sequence[RawClause], declarations: Dict[str, RawDeclaration],
                 known: Dict[str, PredicateInfo]):
        self.pred_sort: Dict[str, str] = {}
        self.var_sort: Dict[Tuple[int, str], str] = {}
        self.arity: Dict[str, int] = {}
        self.limits: Dict[str, PredicateKind] = {n: i.kind for n, i in known.items() if i.kind.is_limit}
        self.limits.update((d.name, d.kind) for d in declarations.values())
        for name, info in known.items():
            self.arity[name] = info.arity
            if info.arity:
                self._set_pred(name, _NUMERIC if info.kind.is_numeric else _OBJECT, None)
        for decl in declarations.values():
            self._check_arity(decl.name, decl.arity, decl.location)
            self._set_pred(decl.name, _NUMERIC, decl.location)
        for index, clause in enumerate(clauses):
            self._seed(index, clause)
        self._propagate(clauses)

    def _check_arity(self, name, arity, location):
        old = self.arity.setdefault(name, arity)
        if old != arity:
            if name in self.limits and arity == old - 1:
                raise ParseError(f"{self.limits[name].value} predicate {name}/{old} used without its value argument",
                                 location.line, location.column, name)
            raise ParseError(f"predicate {name} used with arity {arity}, elsewhere {old}",
                             location.line, location.column, name)

    def _set_pred(self, name, sort, location) -> bool:
        old = self.pred_sort.get(name)
        if old == sort:
            return False
        if old is not None:
            line, col = (location.line, location.column) if location else (None, None)
            raise ParseError(f"last position of {name} is used both as object and numeric",
                             line, col, name)
        self.pred_sort[name] = sort
        return True

    def _set_var(self, key, sort, location) -> bool:
        old = self.var_sort.get(key)
        if old == sort:
            return False
        if old is not None:
            raise ParseError(f"variable {key[1]} is used both as object and numeric",
                             location.line, location.column, key[1])
        self.var_sort[key] = sort
        return True

    def _seed(self, index: int, clause: RawClause):
        for atom in _raw_atoms(clause):
            self._check_arity(atom.predicate, len(atom.args), atom.location)
            for position, arg in enumerate(atom.args):
                last = position == len(atom.args) - 1
                if isinstance(arg, BinOp) or isinstance(arg, Int) or arg is STAR:
                    if not last:
                        raise ParseError(f"numeric argument in object position of {atom.predicate}",
                                         atom.location.line, atom.location.column, atom.predicate)
                    self._set_pred(atom.predicate, _NUMERIC, atom.location)
                    for name in _term_var_names(arg):
                        self._set_var((index, name), _NUMERIC, atom.location)
                elif isinstance(arg, Obj) and last:
                    self._set_pred(atom.predicate, _OBJECT, atom.location)
                elif isinstance(arg, RawVar) and not last:
                    self._set_var((index, arg.name), _OBJECT, atom.location)
        for item in clause.body:
            if item[0] == "cmp":
                for term in item[2:]:
                    if isinstance(term, Obj) or _has_object(term):
                        raise ParseError("object constant inside a comparison",
                                         clause.location.line, clause.location.column)
                    for name in _term_var_names(term):
                        self._set_var((index, name), _NUMERIC, clause.location)

    def _propagate(self, clauses: Sequence[RawClause]):
        changed = True
        while changed:
            changed = False
            for index, clause in enumerate(clauses):
                for atom in _raw_atoms(clause):
                    if not atom.args or not isinstance(atom.args[-1], RawVar):
                        continue
                    key = (index, atom.args[-1].name)
                    pred = self.pred_sort.get(atom.predicate)
                    var = self.var_sort.get(key)
                    if pred is not None and var is None:
                        changed |= self._set_var(key, pred, atom.location)
                    elif var is not None and pred is None:
                        changed |= self._set_pred(atom.predicate, var, atom.location)
                    elif var is not None and var != pred:
                        self._set_pred(atom.predicate, var, atom.location)
        # undetermined predicates are object predicates
        for name, arity in self.arity.items():
            self.pred_sort.setdefault(name, _OBJECT)

    def is_numeric(self, predicate: str) -> bool:
        return self.pred_sort.get(predicate) == _NUMERIC and self.arity.get(predicate, 0) > 0


def _has_object(term) -> bool:
    if isinstance(term, BinOp):
        return _has_object(term.left) or _has_object(term.right)
    return isinstance(term, Obj)


# =============================================================================
# BUILDING TYPED RULES
# =============================================================================

class _RuleBuilder:
    """Types one clause, expands lub and flattens body arguments."""

    def __init__(self, index: int, clause: RawClause, sorts: _SortTable,
                 kinds: Dict[str, PredicateKind]):
        self.index = index
        self.clause = clause
        self.sorts = sorts
        self.kinds = kinds
        self.used = set()
        for atom in _raw_atoms(clause):
            for arg in atom.args:
                self.used |= _term_var_names(arg) if not isinstance(arg, Obj) else set()
        for item in clause.body:
            if item[0] == "cmp":
                self.used |= _term_var_names(item[2]) | _term_var_names(item[3])
        self.counter = 0

    def error(self, message: str, location: Optional[SourceLocation] = None):
        location = location or self.clause.location
        return ParseError(message, location.line, location.column)

    def fresh(self, prefix: str) -> Var:
        while True:
            self.counter += 1
            name = f"_{prefix}{self.counter}"
            if name not in self.used:
                self.used.add(name)
                return Var(name, self.index)

    def term(self, raw):
        if isinstance(raw, RawVar):
            return Var(raw.name, self.index)
        if isinstance(raw, BinOp):
            return BinOp(raw.op, self.term(raw.left), self.term(raw.right))
        return raw

    def atom(self, raw: RawAtom, allow_star: bool) -> Atom:
        args = list(raw.args)
        numeric = None
        if self.sorts.is_numeric(raw.predicate):
            last = args.pop()
            if last is STAR:
                if not allow_star:
                    raise self.error(f"'*' is only allowed in facts ({raw.predicate})", raw.location)
                numeric = ALL_INTS
            else:
                numeric = self.term(last)
        objects = []
        for arg in args:
            if arg is STAR:
                raise self.error(f"'*' in object position of {raw.predicate}", raw.location)
            objects.append(self.term(arg))
        return Atom(raw.predicate, tuple(objects), numeric)

    def build(self) -> Rule:
        clause = self.clause
        head = self.atom(clause.head, allow_star=not clause.is_rule)
        if not clause.is_rule and not head.is_ground():
            raise self.error(f"fact {head} is not ground")
        body: List[Literal] = []
        for item in clause.body:
            if item[0] == "cmp":
                body.extend(_comparisons(item[1], self.term(item[2]), self.term(item[3])))
                continue
            kind, raw = item
            atom = self.atom(raw, allow_star=False)
            atom, extra = self.flatten(atom)
            if kind == "lub":
                body.extend(self.expand_lub(atom, raw.location))
            else:
                body.append(Literal(atom, kind == "pos"))
            body.extend(extra)
        return Rule(head, tuple(body), clause.location)

    def flatten(self, atom: Atom) -> Tuple[Atom, List[Literal]]:
        if not isinstance(atom.numeric, BinOp):
            return atom, []
        fresh = self.fresh("N")
        return (Atom(atom.predicate, atom.objects, fresh),
                _comparisons("=", fresh, atom.numeric))

    def expand_lub(self, atom: Atom, location: SourceLocation) -> List[Literal]:
        kind = self.kinds.get(atom.predicate)
        if kind is None or not kind.is_limit:
            raise self.error(f"lub applied to non-limit predicate {atom.predicate}", location)
        beyond = self.fresh("L")
        shifted = BinOp("+", atom.numeric, Int(step_of(kind)))
        return [Literal(atom, True),
                Literal(Atom(atom.predicate, atom.objects, beyond), False),
                *_comparisons("=", beyond, shifted)]


def _comparisons(op: str, left, right) -> List[Literal]:
    if op == "=":
        return [Literal(Comparison("<=", left, right)), Literal(Comparison("<=", right, left))]
    if op == ">":
        return [Literal(Comparison("<", right, left))]
    if op == ">=":
        return [Literal(Comparison("<=", right, left))]
    return [Literal(Comparison(op, left, right))]


def _check_safety(rule: Rule):
    bound = set()
    for lit in rule.standard_literals():
        if lit.positive:
            bound |= lit.atom.object_variables
    unsafe = set(rule.head.object_variables)
    for lit in rule.standard_literals():
        unsafe |= lit.atom.object_variables
    unsafe -= bound
    if unsafe:
        names = ", ".join(sorted(v.name for v in unsafe))
        raise ProgramError(f"unsafe rule{rule.where()}: object variable(s) {names} "
                           f"do not occur in a positive body literal")


def _collect(statements) -> Tuple[List[RawClause], Dict[str, RawDeclaration]]:
    clauses, declarations = [], {}
    for statement in statements:
        if isinstance(statement, RawDeclaration):
            if statement.arity < 1:
                loc = statement.location
                raise ParseError(f"{statement.kind.value} predicate {statement.name} needs a value argument; "
                                 f"declare it as {statement.name}/1 or more", loc.line, loc.column, statement.name)
            old = declarations.get(statement.name)
            if old is not None and (old.kind, old.arity) != (statement.kind, statement.arity):
                loc = statement.location
                raise ParseError(f"conflicting declarations for {statement.name}",
                                 loc.line, loc.column, statement.name)
            declarations[statement.name] = statement
        else:
            clauses.append(statement)
    return clauses, declarations


def _build(statements, known: Optional[Program] = None) -> Program:
    clauses, declarations = _collect(statements)
    known_table = dict(known.predicates) if known is not None else {}
    sorts = _SortTable(clauses, declarations, known_table)
    kinds: Dict[str, PredicateKind] = {n: i.kind for n, i in known_table.items()}
    for decl in declarations.values():
        kinds[decl.name] = decl.kind
    rules = []
    for index, clause in enumerate(clauses):
        rule = _RuleBuilder(index, clause, sorts, kinds).build()
        _check_safety(rule)
        rules.append(rule)
    table = []
    for name, arity in sorted(sorts.arity.items()):
        if name in kinds:
            kind = kinds[name]
        elif sorts.is_numeric(name):
            kind = PredicateKind.ORDINARY
        else:
            kind = PredicateKind.OBJECT
        table.append(PredicateInfo(name, arity, kind))
    program = build_program(rules, table)
    logger.debug("loaded %d rules over %d predicates", len(rules), len(program.predicates))
    return program


# =============================================================================
# PUBLIC API
# =============================================================================

def parse_program(text: str) -> Program:
    """Parse a .lpl document into a normalised Program."""
    return _build(_parse_raw(text))


def load_program(program_text: str, *dataset_texts: str) -> Program:
    """Program plus datasets, with sorts inferred over all of them jointly."""
    statements = list(_parse_raw(program_text))
    for text in dataset_texts:
        dataset = _parse_raw(text)
        _reject_rules(dataset)
        statements.extend(dataset)
    return _build(statements)


def _reject_rules(statements):
    for statement in statements:
        if isinstance(statement, RawClause) and statement.is_rule:
            loc = statement.location
            raise ParseError("rule syntax inside a dataset", loc.line, loc.column)


def parse_dataset(text: str, program: Optional[Program] = None) -> FrozenSet[Fact]:
    """Parse a .lpd document: facts (and optional min/max declarations) only."""
    statements = _parse_raw(text)
    _reject_rules(statements)
    built = _build(statements, known=program)
    return frozenset(built.facts)


def parse_fact(text: str, program: Optional[Program] = None) -> Fact:
    """Parse a single ground fact, e.g. a query `ds(c,3)` or `q(a,*)`."""
    raw = _parse_raw(text, start="query")
    clause = RawClause(raw, [], raw.location, is_rule=False)
    built = _build([clause], known=program)
    return built.facts[0]


def parse_slot(text: str, program: Program) -> Tuple[str, Tuple[str, ...]]:
    """Parse a limit slot given by its object arguments, e.g. `ds(c)` for `min ds/2`."""
    raw = _parse_raw(text, start="query")
    loc = raw.location
    info = program.predicates.get(raw.predicate)
    if info is None:
        raise ProgramError(f"unknown predicate {raw.predicate!r}")
    if not info.kind.is_limit:
        raise ProgramError(f"{raw.predicate} is not a min or max predicate")
    if len(raw.args) != info.object_arity:
        raise ParseError(f"{raw.predicate} takes {info.object_arity} object arguments here, "
                         f"got {len(raw.args)}", loc.line, loc.column)
    objects = []
    for arg in raw.args:
        if not isinstance(arg, Obj):
            raise ParseError(f"slot argument {arg!r} is not an object", loc.line, loc.column)
        objects.append(arg.name)
    return raw.predicate, tuple(objects)


def check_ordered(facts: Iterable[Fact]) -> Tuple[bool, str]:
    """Do first/next/last enumerate all objects of the dataset exactly once?"""
    facts = list(facts)
    objects: Set[str] = set()
    first, last, successor = [], [], {}
    for fact in facts:
        objects.update(fact.objects)
        if fact.predicate in ("first", "last", "next") and fact.value is not None:
            return False, f"{fact.predicate} must be an object predicate"
        if fact.predicate == "first":
            if len(fact.objects) != 1:
                return False, "first/1 expected"
            first.append(fact.objects[0])
        elif fact.predicate == "last":
            if len(fact.objects) != 1:
                return False, "last/1 expected"
            last.append(fact.objects[0])
        elif fact.predicate == "next":
            if len(fact.objects) != 2:
                return False, "next/2 expected"
            a, b = fact.objects
            if a in successor:
                return False, f"{a} has two successors"
            successor[a] = b
    if len(first) != 1 or len(last) != 1:
        return False, f"expected one first and one last fact, found {len(first)} and {len(last)}"
    order, seen, current = [first[0]], {first[0]}, first[0]
    while current in successor:
        current = successor[current]
        if current in seen:
            return False, f"repetition at {current}"
        seen.add(current)
        order.append(current)
    if current != last[0]:
        return False, f"enumeration ends at {current}, but last is {last[0]}"
    if len(successor) != len(order) - 1:
        return False, "next facts outside the enumeration"
    missing = objects - seen
    if missing:
        return False, f"objects not enumerated: {', '.join(sorted(missing))}"
    return True, f"ordered: {' < '.join(order)}"


def print_program(program: Program) -> str:
    """Canonical .lpl text: declarations, then rules in order."""
    lines = []
    for name in sorted(program.predicates):
        info = program.predicates[name]
        if info.kind.is_limit:
            lines.append(f"{info.kind.value} {info.name}/{info.arity}.")
    lines.extend(str(rule) for rule in program.rules)
    return "\n".join(lines) + ("\n" if lines else "")


def print_facts(facts: Iterable[Fact]) -> str:
    lines = [str(fact) for fact in sorted_facts(facts)]
    return "\n".join(lines) + ("\n" if lines else "")


def print_pseudo(J: PseudoInterpretation) -> str:
    """Canonical .lpd text of a pseudo-interpretation; finite limits marked as lub values."""
    lines = []
    for fact in J.to_facts():
        line = str(fact)
        if fact.predicate in J.limit_types and not isinstance(fact.value, AllInts):
            line += "  % lub"
        lines.append(line)
    return "\n".join(lines) + ("\n" if lines else "")
