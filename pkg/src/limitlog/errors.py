"""
Exception hierarchy for limitlog.

Every error raised on purpose by the package derives from LimitLogError, so
callers (and the command line) can separate user-facing failures from bugs.
"""

from typing import Optional


class LimitLogError(ValueError):
    """Root of all limitlog errors."""


class ConfigError(LimitLogError):
    """Invalid configuration value (flags, environment, EngineConfig)."""


class ParseError(LimitLogError):
    """Syntax or sort error in program, dataset or query text."""

    def __init__(self, message: str, line: Optional[int] = None,
                 column: Optional[int] = None, text: str = ""):
        self.line = line
        self.column = column
        self.text = text
        where = f"line {line}, column {column}: " if line is not None else ""
        super().__init__(f"{where}{message}")


class ProgramError(LimitLogError):
    """A well-formed program that is not a legal limit program."""


class ContractViolation(LimitLogError):
    """An operation was called outside its precondition."""


class SearchExhausted(LimitLogError):
    """The bounded integer search ran out of radius before deciding."""
