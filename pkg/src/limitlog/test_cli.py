"""
Command line: each command end to end on temporary files.
"""

import contextlib
import io
import tempfile
from pathlib import Path

from limitlog.cli import EXIT_ERROR, EXIT_NOT_ENTAILED, EXIT_OK, EXIT_UNKNOWN, main
from limitlog.corpus import corpus_path
from limitlog.testing import main as run_tests

SP = str(corpus_path("shortest_path.lpl"))
SP_DATA = str(corpus_path("shortest_path.lpd"))
SHIFTED = "min d/3.\nd(a, b, 1).\nd(a, c, M + 2) :- d(a, b, M).\n"
DIVERGING = "max p/1.\np(0).\np(N + 1) :- p(N).\n"
TWO_SLOTS = "max p/2.\np(a, 0).\np(a, N + 1) :- p(a, N).\np(b, 5).\n"
NEGATED_BELOW = "max a/1.\nmax b/1.\na(3).\nb(0 - N) :- a(N).\nq :- b(N), N <= 0.\nr :- not q.\n"


def run(*argv):
    """(exit status, stdout, stderr) of one invocation."""
    out, err = io.StringIO(), io.StringIO()
    with contextlib.redirect_stdout(out), contextlib.redirect_stderr(err):
        status = main(list(argv))
    return status, out.getvalue(), err.getvalue()


def write(directory: str, name: str, text: str) -> str:
    path = Path(directory) / name
    path.write_text(text)
    return str(path)


def test_check():
    status, out, _ = run("check", SP, SP_DATA)
    assert status == EXIT_OK
    assert out.splitlines()[:6] == ["safe=true", "stratified=true", "semi_positive=false",
                                    "positive=false", "limit_linear=true", "type_consistent=true"]


def test_query_exit_codes():
    status, out, _ = run("query", SP, SP_DATA, "ds(c,3)")
    assert (status, out) == (EXIT_OK, "entailed\n")
    status, out, _ = run("query", SP, SP_DATA, "sp-edge(a,c)")
    assert (status, out) == (EXIT_NOT_ENTAILED, "not-entailed\n")


def test_lub():
    assert run("lub", SP, SP_DATA, "ds(c)")[:2] == (EXIT_OK, "3\n")
    assert run("lub", SP, SP_DATA, "ds(z)")[:2] == (EXIT_OK, "none\n")


def test_materialize():
    status, out, _ = run("materialize", SP, SP_DATA)
    assert status == EXIT_OK
    assert "ds(c,3).  % lub" in out.splitlines()
    assert "sp-edge(a,b)." in out.splitlines()
    assert "% status exact" in out


def test_ground_and_reduct():
    status, out, _ = run("ground", SP, SP_DATA)
    assert status == EXIT_OK and "min ds/2." in out
    status, out, _ = run("reduct", SP, SP_DATA, "--stratum", "2", "--tc")
    assert status == EXIT_OK and "sp-edge(a,b)" in out
    status, _, err = run("reduct", SP, SP_DATA)
    assert status == EXIT_ERROR and "semi-positive" in err


def test_oracle():
    assert run("oracle", SP, SP_DATA, "--bound", "16", "--query", "ds(c,3)")[:2] == (EXIT_OK, "true\n")
    status, out, _ = run("oracle", SP, SP_DATA, "--bound", "16")
    assert status == EXIT_OK and "ds(c,3)" in out


def test_export_smt():
    with tempfile.TemporaryDirectory() as tmp:
        program = Path(tmp) / "shifted.lpl"
        program.write_text(SHIFTED)
        target = Path(tmp) / "query.smt2"
        status, _, _ = run("export-smt", str(program), "d(a,c,3)", "-o", str(target))
        assert status == EXIT_OK
        text = target.read_text()
        assert text.startswith("; entailment of d(a,c,3). holds iff unsat")
        assert text.endswith("(check-sat)\n")
    status, _, err = run("export-smt", SP, SP_DATA, "ds(c,3)")
    assert status == EXIT_ERROR and "semi-positive" in err


def test_gen_oddminsat():
    with tempfile.TemporaryDirectory() as tmp:
        program = Path(tmp) / "oddminsat.lpl"
        status, out, _ = run("gen-oddminsat", "--vars", "3", "--seed", "1", "--program-out", str(program))
        assert status == EXIT_OK
        assert out.startswith("% formula: ")
        assert "shift(x2,4)." in out.splitlines()
        assert "min_odd :- " in program.read_text()


def test_run_example():
    status, out, _ = run("run-example", "shortest-path", "--count", "2", "--seed", "4")
    assert status == EXIT_OK
    assert "2/2 instances agree" in out


def test_engine_options():
    with tempfile.TemporaryDirectory() as tmp:
        program = write(tmp, "diverging.lpl", DIVERGING)
        status, out, _ = run("materialize", program, "--mode", "general", "--max-iters", "5",
                             "--magnitude-cap", "1000000")
        assert status == EXIT_OK and "% status incomplete" in out
        status, out, _ = run("materialize", program, "--mode", "tc", "--max-iters", "50", "--threshold", "auto")
        assert "p(*)." in out.splitlines() and "% status exact" in out
        status, out, _ = run("materialize", program, "--threshold", "4", "--max-iterations", "50")
        assert status == EXIT_OK and "% status exact" in out
        status, _, err = run("materialize", program, "--threshold", "0")
        assert status == EXIT_ERROR and "threshold" in err


def test_unknown_is_reported_per_slot():
    with tempfile.TemporaryDirectory() as tmp:
        program = write(tmp, "two_slots.lpl", TWO_SLOTS)
        options = ("--mode", "general", "--magnitude-cap", "50")
        assert run("lub", program, "p(b)", *options)[:2] == (EXIT_OK, "5\n")
        assert run("lub", program, "p(a)", *options)[:2] == (EXIT_UNKNOWN, "unknown\n")
        assert run("query", program, "p(b,5)", *options)[:2] == (EXIT_OK, "entailed\n")
        status, out, _ = run("materialize", program, *options)
        assert "% unknown: p(a)" in out.splitlines()


def test_reduct_of_a_stratum_above_a_general_program():
    with tempfile.TemporaryDirectory() as tmp:
        program = write(tmp, "negated.lpl", NEGATED_BELOW)
        status, out, _ = run("reduct", program, "--stratum", "2")
        assert status == EXIT_OK
        assert "q." in out.splitlines() and "b(*)." in out.splitlines()
        assert not any(line.startswith("r") for line in out.splitlines())
        # b(0 - N) is not type-consistent, so tc evaluation of the lower strata refuses it
        status, _, err = run("reduct", program, "--stratum", "2", "--tc")
        assert status == EXIT_ERROR and "type-consistent" in err


def test_errors_are_reported_with_status_two():
    status, _, err = run("check", "/nonexistent/program.lpl")
    assert status == EXIT_ERROR and err.startswith("error: cannot read")
    with tempfile.TemporaryDirectory() as tmp:
        broken = Path(tmp) / "broken.lpl"
        broken.write_text("p(a).\nq(X) :- p(X)\n")
        status, _, err = run("check", str(broken))
        assert status == EXIT_ERROR and err.startswith("error: ")


if __name__ == "__main__":
    run_tests("command line", globals())
