"""
Configuration: defaults, evaluation modes and the engine configuration.

All tunables live here as module constants so experiments and the command
line resolve them the same way.
"""

import os
from dataclasses import dataclass
from enum import Enum
from typing import Optional, Union

from .errors import ConfigError

# =============================================================================
# DEFAULTS
# =============================================================================

DEFAULT_ORACLE_BOUND = 64
ORACLE_BOUND_ENV = "LIMITLOG_ORACLE_BOUND"

DEFAULT_MAX_ITERATIONS = 20_000      # per stratum
DEFAULT_CAP_EXPONENT = 3             # general mode magnitude cap exponent
DEFAULT_SEARCH_RADIUS = 4_096        # integer values tried on an unbounded side

AUTO = "auto"

Threshold = Union[int, str]


class EvaluationMode(Enum):
    """How pseudo-materialisation treats divergence."""
    TC_EXACT = "tc"
    GENERAL_BOUNDED = "general"


# =============================================================================
# ENGINE CONFIGURATION
# =============================================================================

@dataclass(frozen=True)
class EngineConfig:
    """Knobs of the evaluator.

    threshold: promote a slot to all-integers after this many strict
        improvements; "auto" picks slots x rules + 1 in tc mode and the
        magnitude cap in general mode.
    magnitude_cap: general mode only; "auto" derives it from the program as
        (slots + 1) * (a + 2) ** cap_exponent with a the largest constant.
    """
    mode: EvaluationMode = EvaluationMode.TC_EXACT
    threshold: Threshold = AUTO
    max_iterations: int = DEFAULT_MAX_ITERATIONS
    magnitude_cap: Threshold = AUTO
    cap_exponent: int = DEFAULT_CAP_EXPONENT
    search_radius: int = DEFAULT_SEARCH_RADIUS
    keep_snapshots: bool = False

    def __post_init__(self):
        if not isinstance(self.mode, EvaluationMode):
            raise ConfigError(f"unknown evaluation mode {self.mode!r}")
        _check_auto_or_positive("threshold", self.threshold)
        _check_auto_or_positive("magnitude_cap", self.magnitude_cap)
        if self.max_iterations < 1:
            raise ConfigError("max_iterations must be positive")
        if self.cap_exponent < 1:
            raise ConfigError("cap_exponent must be positive")
        if self.search_radius < 1:
            raise ConfigError("search_radius must be positive")

    @property
    def is_tc(self) -> bool:
        return self.mode is EvaluationMode.TC_EXACT

    @classmethod
    def from_options(cls, mode: str = "tc", threshold: str = AUTO,
                     max_iterations: Optional[int] = None,
                     magnitude_cap: str = AUTO) -> "EngineConfig":
        """Build a config from command-line style strings."""
        try:
            parsed_mode = EvaluationMode(mode)
        except ValueError:
            raise ConfigError(f"mode must be 'tc' or 'general', not {mode!r}")
        return cls(
            mode=parsed_mode,
            threshold=_parse_auto_or_int("threshold", threshold),
            max_iterations=max_iterations or DEFAULT_MAX_ITERATIONS,
            magnitude_cap=_parse_auto_or_int("magnitude-cap", magnitude_cap),
        )


def _check_auto_or_positive(name: str, value: Threshold):
    if value == AUTO:
        return
    if not isinstance(value, int) or isinstance(value, bool) or value < 1:
        raise ConfigError(f"{name} must be 'auto' or a positive integer, not {value!r}")


def _parse_auto_or_int(name: str, text: Union[str, int]) -> Threshold:
    if isinstance(text, int) or text == AUTO:
        return text
    try:
        return int(text)
    except ValueError:
        raise ConfigError(f"{name} must be 'auto' or an integer, not {text!r}")


def oracle_bound(explicit: Optional[int] = None) -> int:
    """Resolve the oracle window: argument, then environment, then default."""
    if explicit is not None:
        bound = explicit
    else:
        raw = os.environ.get(ORACLE_BOUND_ENV)
        if raw is None or raw.strip() == "":
            return DEFAULT_ORACLE_BOUND
        try:
            bound = int(raw)
        except ValueError:
            raise ConfigError(f"{ORACLE_BOUND_ENV}={raw!r} is not an integer")
    if bound < 1:
        raise ConfigError(f"oracle bound must be positive, got {bound}")
    return bound
