"""
Classifier Conformance
The bundled programs are limit-linear (and, bar the OddMinSAT reduction,
type-consistent); the sign-analysis TC check agrees with the check on the
full semi-grounding for random limit-linear programs.
"""

import os
import sys

sys.path.append(os.path.join(os.path.dirname(os.path.dirname(os.path.dirname(os.path.abspath(__file__)))), "src"))

from limitlog.analysis import check_limit_linear, check_type_consistent
from limitlog.corpus import load_corpus_program
from limitlog.fuzz import random_cases, tc_checkers_agree
from limitlog.oddminsat import oddminsat_program

CASES = 200


def main(seed: int = 0) -> int:
    print("=" * 70)
    print("CLASSIFIER CONFORMANCE")
    print("=" * 70)
    shortest_path = load_corpus_program("shortest_path.lpl")
    closeness = load_corpus_program("closeness.lpl")
    expectations = [
        ("shortest path is limit-linear", bool(check_limit_linear(shortest_path))),
        ("shortest path is type-consistent", bool(check_type_consistent(shortest_path))),
        ("closeness is limit-linear", bool(check_limit_linear(closeness))),
        ("closeness is type-consistent", bool(check_type_consistent(closeness))),
        ("oddminsat reduction is limit-linear", bool(check_limit_linear(oddminsat_program()))),
    ]
    disagreements = [case for case in random_cases(seed=seed, count=CASES, require_tc=False)
                     if not tc_checkers_agree(case)]
    expectations.append((f"TC checkers agree on {CASES} random programs", not disagreements))
    for case in disagreements[:3]:
        print(case.describe())
    for label, ok in expectations:
        print(f"  [{'OK' if ok else 'FAIL'}] {label}")
    failures = sum(not ok for _, ok in expectations)
    print("-" * 70)
    print(f"  {len(expectations) - failures}/{len(expectations)} expectations hold")
    print("=" * 70)
    return 0 if failures == 0 else 1


if __name__ == "__main__":
    sys.exit(main(int(sys.argv[1]) if len(sys.argv) > 1 else 0))
