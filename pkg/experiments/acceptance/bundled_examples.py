"""
Bundled Examples at Full Count
Shortest paths against Dijkstra, closeness centrality against direct
farness, and OddMinSAT against the brute-force least assignment.
"""

import os
import sys

sys.path.append(os.path.join(os.path.dirname(os.path.dirname(os.path.dirname(os.path.abspath(__file__)))), "src"))

from limitlog.corpus import run_example

# (example, instances, seconds allowed)
RUNS = [
    ("shortest-path", 50, 5.0),
    ("closeness", 25, 5.0),
    ("oddminsat", 100, 120.0),
]


def main(seed: int = 0) -> int:
    print("=" * 70)
    print("BUNDLED EXAMPLES")
    print("=" * 70)
    failures = 0
    for name, count, allowed in RUNS:
        report = run_example(name, seed=seed, count=count)
        for outcome in report.outcomes:
            if not outcome.ok:
                print(outcome.render())
        slow = report.seconds > allowed
        status = "OK" if report.mismatches == 0 and not slow else "FAIL"
        print(f"  [{status}] {name:<14} {count - report.mismatches}/{count} agree "
              f"in {report.seconds:.2f}s (limit {allowed:.0f}s)")
        failures += report.mismatches > 0 or slow
    print("-" * 70)
    print(f"  {len(RUNS) - failures}/{len(RUNS)} examples pass")
    print("=" * 70)
    return 0 if failures == 0 else 1


if __name__ == "__main__":
    sys.exit(main(int(sys.argv[1]) if len(sys.argv) > 1 else 0))
