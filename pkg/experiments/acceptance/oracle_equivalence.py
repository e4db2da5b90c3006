"""
Engine and Transformations against the Bounded Oracle
Random stratified type-consistent programs: engine verdicts, semi-grounding,
per-stratum reducts and the type-consistent rewrite, all compared with
brute-force evaluation over [-64, 64].
"""

import os
import sys
import time

sys.path.append(os.path.join(os.path.dirname(os.path.dirname(os.path.dirname(os.path.abspath(__file__)))), "src"))

from limitlog.config import EngineConfig
from limitlog.engine import materialise_stratified
from limitlog.fuzz import (check_reduct_preserves, check_semi_ground_preserves, check_tc_rewrite,
                           compare_with_oracle, random_cases)

CASES = 200
BOUND = 64
WINDOW = 48


def _monotone(case) -> list:
    result = materialise_stratified(case.program, case.facts, EngineConfig(keep_snapshots=True))
    for stratum in result.trace.strata:
        for before, after in zip(stratum.snapshots, stratum.snapshots[1:]):
            if not before.leq(after):
                return [f"case {case.index}: stratum {stratum.stratum} trace shrinks"]
    return []


def main(seed: int = 0) -> int:
    print("=" * 70)
    print(f"ORACLE EQUIVALENCE ({CASES} programs, B = {BOUND})")
    print("=" * 70)
    start = time.perf_counter()
    cases = random_cases(seed=seed, count=CASES)
    checks = {
        "engine verdicts": lambda c: compare_with_oracle(c, bound=BOUND, window=WINDOW).problems,
        "semi-grounding": lambda c: check_semi_ground_preserves(c, bound=BOUND),
        "stratum reducts": lambda c: check_reduct_preserves(c, bound=BOUND),
        "tc rewrite": check_tc_rewrite,
        "monotone trace": _monotone,
    }
    failures = 0
    for label, check in checks.items():
        problems = []
        for case in cases:
            found = check(case)
            if found:
                problems.extend(found)
                print(case.describe())
        status = "OK" if not problems else "FAIL"
        print(f"  [{status}] {label:<16} {len(problems)} problems")
        for problem in problems[:5]:
            print(f"       -> {problem}")
        failures += bool(problems)
    seconds = time.perf_counter() - start
    print("-" * 70)
    print(f"  {len(checks) - failures}/{len(checks)} checks pass in {seconds:.1f}s")
    print("=" * 70)
    return 0 if failures == 0 else 1


if __name__ == "__main__":
    sys.exit(main(int(sys.argv[1]) if len(sys.argv) > 1 else 0))
