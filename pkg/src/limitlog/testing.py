"""
Script runner for the collocated test modules.

Under pytest the test_* functions run as usual; `python -m limitlog.test_engine`
runs them through run_all_tests with a banner report instead.
"""

import inspect
import os
import sys
import traceback
from dataclasses import dataclass, field
from typing import Callable, List, Sequence, Tuple

PROPERTY_CASES_ENV = "LIMITLOG_PROPERTY_CASES"


def property_cases(default: int) -> int:
    """Case count for randomised suites; the environment overrides the default."""
    raw = os.environ.get(PROPERTY_CASES_ENV, "").strip()
    return int(raw) if raw.isdigit() and int(raw) > 0 else default


@dataclass
class TestResults:
    """Track test results."""
    passed: int = 0
    failed: int = 0
    skipped: int = 0
    tests: List[Tuple[str, str, str]] = field(default_factory=list)

    def record(self, name: str, status: str, details: str = ""):
        self.tests.append((name, status, details))
        if status == "OK":
            self.passed += 1
        elif status == "SKIP":
            self.skipped += 1
        else:
            self.failed += 1

    def summary(self) -> str:
        total = self.passed + self.failed
        share = 100 * self.passed / total if total else 100.0
        return f"{self.passed}/{total} tests passed ({share:.1f}%), {self.skipped} skipped"


def collect_tests(namespace: dict) -> List[Tuple[str, Callable]]:
    return [(name, obj) for name, obj in namespace.items()
            if name.startswith("test_") and callable(obj)]


def run_all_tests(title: str, tests: Sequence[Tuple[str, Callable]]) -> TestResults:
    results = TestResults()
    print("=" * 70)
    print(f"TEST SUITE: {title}")
    print("=" * 70)
    for name, func in tests:
        if inspect.signature(func).parameters:
            results.record(name, "SKIP", "needs pytest fixtures")
            continue
        try:
            func()
            results.record(name, "OK")
        except AssertionError as exc:
            results.record(name, "FAIL", str(exc) or traceback.format_exc(limit=2))
        except Exception as exc:
            results.record(name, "ERROR", f"{type(exc).__name__}: {exc}")
    for name, status, details in results.tests:
        print(f"  [{status}] {name}")
        if details:
            print(f"       -> {details}")
    print("-" * 70)
    print(f"  {results.summary()}")
    print("=" * 70)
    return results


def main(title: str, namespace: dict):
    results = run_all_tests(title, collect_tests(namespace))
    sys.exit(0 if results.failed == 0 else 1)
