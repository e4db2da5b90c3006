"""
limitlog: Datalog with integer min/max limit predicates.

Programs are parsed by `frontend`, classified by `analysis`, rewritten by
`transform` and evaluated by `engine`; `oracle` and `presburger` check the
engine independently. `python -m limitlog --help` lists the commands.
"""

__version__ = "0.1.0"

from .config import EngineConfig, EvaluationMode
from .engine import MaterialisationResult, Verdict, lub_query, materialise_stratified, query
from .errors import ContractViolation, LimitLogError, ParseError, ProgramError
from .frontend import load_program, parse_dataset, parse_fact, parse_program

__all__ = [
    "ContractViolation",
    "EngineConfig",
    "EvaluationMode",
    "LimitLogError",
    "MaterialisationResult",
    "ParseError",
    "ProgramError",
    "Verdict",
    "load_program",
    "lub_query",
    "materialise_stratified",
    "parse_dataset",
    "parse_fact",
    "parse_program",
    "query",
]
