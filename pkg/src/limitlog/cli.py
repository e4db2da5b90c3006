"""
Command line: python -m limitlog <command> ...

Exit status: 0 on success (and for an entailed query), 1 for a query that is
not entailed or an example run with mismatches, 2 for usage, parse and
contract errors, 3 for an unknown verdict.
"""

import argparse
import logging
import sys
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from . import __version__
from .analysis import StratificationFailure, classify, compute_stratification, is_positive, is_semi_positive
from .config import AUTO, EngineConfig, EvaluationMode, oracle_bound
from .corpus import EXAMPLES, run_example
from .engine import LubAnswer, Verdict, materialise_stratified
from .errors import ContractViolation, LimitLogError
from .frontend import load_program, parse_fact, parse_slot, print_facts, print_program, print_pseudo
from .model import Atom, Program, build_program
from .oddminsat import PROGRAM_FILE, minimal_assignment, oddminsat_dataset, random_satisfiable_formula
from .oracle import OracleVerdict, brute_force_materialise, oracle_entails, render_store
from .presburger import emit_presburger
from .terms import Obj
from .transform import fold_guards, reduct, semi_ground, tc_rewrite_reduct

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_NOT_ENTAILED = 1
EXIT_ERROR = 2
EXIT_UNKNOWN = 3

VERDICT_EXIT = {
    Verdict.ENTAILED: EXIT_OK,
    Verdict.NOT_ENTAILED: EXIT_NOT_ENTAILED,
    Verdict.UNKNOWN: EXIT_UNKNOWN,
}

ORACLE_EXIT = {
    OracleVerdict.TRUE: EXIT_OK,
    OracleVerdict.FALSE: EXIT_NOT_ENTAILED,
    OracleVerdict.OUT_OF_WINDOW: EXIT_UNKNOWN,
}


# =============================================================================
# INPUT
# =============================================================================

def _read(path: str) -> str:
    try:
        return Path(path).read_text()
    except OSError as exc:
        raise LimitLogError(f"cannot read {path}: {exc.strerror}") from exc


def _load(args) -> Program:
    program = load_program(_read(args.program), *(_read(p) for p in args.datasets))
    logger.info("loaded %s: %d rules, %d facts", args.program, len(program.proper_rules), len(program.facts))
    return program


def _engine_config(args) -> EngineConfig:
    return EngineConfig.from_options(args.mode, args.threshold, args.max_iterations, args.magnitude_cap)


def _write(text: str, path: Optional[str]):
    if path is None:
        sys.stdout.write(text)
        return
    try:
        Path(path).write_text(text)
    except OSError as exc:
        raise LimitLogError(f"cannot write {path}: {exc.strerror}") from exc
    logger.info("wrote %s", path)


def _stratum_program(program: Program, level: int, config: EngineConfig) -> Program:
    """Rules of one stratum with the materialisation of the strata below folded in as facts."""
    found = compute_stratification(program)
    if isinstance(found, StratificationFailure):
        raise ContractViolation(str(found))
    strata = dict(found.strata(program))
    if level not in strata:
        raise ContractViolation(f"no stratum {level}; strata are {', '.join(map(str, sorted(strata)))}")
    lower = [r for i, rules in strata.items() if i < level for r in rules]
    folded = ()
    if lower:
        below = materialise_stratified(build_program(lower, program.predicates.values()), config=config).pseudo
        folded = tuple(f.to_rule() for f in below.to_facts())
    return build_program(strata[level] + folded, program.predicates.values())


# =============================================================================
# COMMANDS
# =============================================================================

def cmd_check(args) -> int:
    program = _load(args)
    report = classify(program)
    sys.stdout.write(report.render())
    return EXIT_OK


def cmd_ground(args) -> int:
    program = _load(args)
    grounded = semi_ground(program, prune=not args.no_prune)
    sys.stdout.write(print_program(grounded.to_program()))
    return EXIT_OK


def cmd_reduct(args) -> int:
    program = _load(args)
    if args.stratum is not None:
        mode = EvaluationMode.TC_EXACT if args.tc else EvaluationMode.GENERAL_BOUNDED
        program = _stratum_program(program, args.stratum, EngineConfig(mode=mode))
    elif not is_semi_positive(program):
        raise ContractViolation("program is not semi-positive; pick a stratum with --stratum")
    grounded = semi_ground(program)
    positive = tc_rewrite_reduct(grounded) if args.tc else reduct(fold_guards(grounded))
    sys.stdout.write(print_program(positive.to_program()))
    return EXIT_OK


def cmd_materialize(args) -> int:
    program = _load(args)
    result = materialise_stratified(program, config=_engine_config(args))
    sys.stdout.write(print_pseudo(result.pseudo))
    for line in result.trace.summary_lines():
        sys.stdout.write(f"% {line}\n")
    sys.stdout.write(f"% status {result.status.value}\n")
    if result.tainted:
        unknown = [str(Atom(p, tuple(Obj(o) for o in objects))) for p, objects in sorted(result.tainted)]
        sys.stdout.write(f"% unknown: {', '.join(unknown)}\n")
    return EXIT_OK


def cmd_query(args) -> int:
    program = _load(args)
    phi = parse_fact(args.fact, program)
    result = materialise_stratified(program, config=_engine_config(args))
    verdict = result.verdict(phi)
    sys.stdout.write(f"{verdict.value}\n")
    return VERDICT_EXIT[verdict]


def cmd_lub(args) -> int:
    program = _load(args)
    predicate, objects = parse_slot(args.slot, program)
    result = materialise_stratified(program, config=_engine_config(args))
    answer: LubAnswer = result.lub(predicate, objects)
    sys.stdout.write(f"{answer}\n")
    return EXIT_UNKNOWN if result.is_tainted(predicate, objects) else EXIT_OK


def cmd_oracle(args) -> int:
    program = _load(args)
    store = brute_force_materialise(program, bound=oracle_bound(args.bound))
    if args.query is None:
        sys.stdout.write(render_store(store))
        return EXIT_OK
    verdict = oracle_entails(store, parse_fact(args.query, program))
    sys.stdout.write(f"{verdict.value}\n")
    return ORACLE_EXIT[verdict]


def cmd_export_smt(args) -> int:
    program = _load(args)
    phi = parse_fact(args.fact, program)
    grounded = semi_ground(program)
    if not is_positive(program):
        if not is_semi_positive(program):
            raise ContractViolation("export needs a positive or semi-positive program")
        grounded = reduct(fold_guards(grounded))
    document = emit_presburger(grounded, phi)
    _write(document.to_smtlib(), args.output)
    return EXIT_OK


def cmd_gen_oddminsat(args) -> int:
    if args.vars < 1:
        raise LimitLogError("--vars must be positive")
    rng = np.random.default_rng(args.seed)
    formula = random_satisfiable_formula(args.vars, rng, args.depth)
    least = minimal_assignment(args.vars, formula)
    lines = [f"% formula: {formula}",
             f"% least satisfying assignment: {least:0{args.vars}b} (min_odd {'holds' if least & 1 else 'fails'})"]
    sys.stdout.write("\n".join(lines) + "\n" + print_facts(oddminsat_dataset(args.vars, formula)))
    if args.program_out:
        _write(PROGRAM_FILE.read_text(), args.program_out)
    return EXIT_OK


def cmd_run_example(args) -> int:
    report = run_example(args.name, args.seed, args.count)
    sys.stdout.write(report.render())
    return EXIT_OK if report.mismatches == 0 else EXIT_NOT_ENTAILED


# =============================================================================
# PARSER
# =============================================================================

def _program_arguments(parser: argparse.ArgumentParser):
    parser.add_argument("program", help="limit program (.lpl)")
    parser.add_argument("datasets", nargs="*", help="datasets (.lpd)")


def _engine_arguments(parser: argparse.ArgumentParser):
    group = parser.add_argument_group("evaluation")
    group.add_argument("--mode", choices=["tc", "general"], default="tc",
                       help="tc: exact for type-consistent programs; general: bounded heuristic (default tc)")
    group.add_argument("--threshold", default=AUTO, metavar="N|auto",
                       help="improvements before a slot is promoted to * (default auto)")
    group.add_argument("--max-iters", "--max-iterations", dest="max_iterations", type=int, default=None, metavar="N",
                       help="fixpoint rounds per stratum before giving up")
    group.add_argument("--magnitude-cap", default=AUTO, metavar="N|auto",
                       help="general mode: promote slots whose value exceeds this magnitude (default auto)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="limitlog",
                                     description="Stratified limit Datalog: analysis, evaluation and checking.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="count", default=0,
                        help="log progress to stderr (-v info, -vv debug)")
    commands = parser.add_subparsers(dest="command", metavar="command", required=True)

    p = commands.add_parser("check", help="classify a program (safe, stratified, ..., type-consistent)")
    _program_arguments(p)
    p.set_defaults(handler=cmd_check)

    p = commands.add_parser("ground", help="print the semi-grounding")
    _program_arguments(p)
    p.add_argument("--no-prune", action="store_true", help="all combinations of constants, no join against facts")
    p.set_defaults(handler=cmd_ground)

    p = commands.add_parser("reduct", help="print the positive reduct of a semi-positive program or stratum")
    _program_arguments(p)
    p.add_argument("--stratum", type=int, metavar="I", help="fold the strata below I in and reduce stratum I")
    p.add_argument("--tc", action="store_true",
                   help="type-consistency preserving rewrite, with the strata below evaluated in tc mode")
    p.set_defaults(handler=cmd_reduct)

    p = commands.add_parser("materialize", help="print the pseudo-materialisation and its trace")
    _program_arguments(p)
    _engine_arguments(p)
    p.set_defaults(handler=cmd_materialize)

    p = commands.add_parser("query", help="decide entailment of a ground fact")
    _program_arguments(p)
    p.add_argument("fact", help="ground fact, e.g. 'ds(c,3)' or 'q(a,*)'")
    _engine_arguments(p)
    p.set_defaults(handler=cmd_query)

    p = commands.add_parser("lub", help="least upper bound of a limit slot")
    _program_arguments(p)
    p.add_argument("slot", help="limit atom without its value, e.g. 'ds(c)'")
    _engine_arguments(p)
    p.set_defaults(handler=cmd_lub)

    p = commands.add_parser("oracle", help="bounded brute-force materialisation")
    _program_arguments(p)
    p.add_argument("--bound", type=int, default=None, metavar="B",
                   help="integer window [-B, B] (default $LIMITLOG_ORACLE_BOUND or 64)")
    p.add_argument("--query", metavar="FACT", help="only report this fact")
    p.set_defaults(handler=cmd_oracle)

    p = commands.add_parser("export-smt", help="SMT-LIB2 document, unsatisfiable iff the fact is entailed")
    _program_arguments(p)
    p.add_argument("fact", help="ground fact to encode negated")
    p.add_argument("-o", "--output", metavar="FILE", help="write here instead of stdout")
    p.set_defaults(handler=cmd_export_smt)

    p = commands.add_parser("gen-oddminsat", help="random satisfiable OddMinSAT instance as a dataset")
    p.add_argument("--vars", type=int, default=4, metavar="N")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--depth", type=int, default=3, help="formula nesting depth")
    p.add_argument("--program-out", metavar="FILE", help="also write the fixed reduction program")
    p.set_defaults(handler=cmd_gen_oddminsat)

    p = commands.add_parser("run-example", help="evaluate seeded instances of a bundled example")
    p.add_argument("name", choices=sorted(EXAMPLES))
    p.add_argument("--count", type=int, default=10)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(handler=cmd_run_example)
    return parser


def configure_logging(verbosity: int):
    level = logging.WARNING if verbosity == 0 else logging.INFO if verbosity == 1 else logging.DEBUG
    logging.basicConfig(level=level, stream=sys.stderr, format="%(levelname)s %(name)s: %(message)s")


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    configure_logging(args.verbose)
    try:
        return args.handler(args)
    except LimitLogError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_ERROR
