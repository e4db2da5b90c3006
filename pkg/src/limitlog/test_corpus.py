"""
Bundled examples against their reference answers.
"""

import numpy as np

from limitlog.corpus import (ClosenessInstance, ShortestPathInstance, WeightedGraph, check_closeness,
                             check_oddminsat, check_shortest_path, load_corpus_program, run_example)
from limitlog.errors import ConfigError
from limitlog.oddminsat import Not, Or, Variable
from limitlog.testing import main, property_cases


def fixed_graph(edges, size) -> WeightedGraph:
    weights = np.zeros((size, size), dtype=np.int64)
    for i, j, w in edges:
        weights[i, j] = w
    return WeightedGraph(weights)


def test_reference_answers_of_a_fixed_graph():
    instance = ShortestPathInstance(fixed_graph([(0, 1, 1), (1, 2, 2), (0, 2, 5)], 3), 0, 2)
    assert instance.expected_distances() == {"n0": 0, "n1": 1, "n2": 3}
    assert instance.expected_sp_edges() == {("n0", "n1"), ("n1", "n2")}
    assert check_shortest_path(instance, load_corpus_program("shortest_path.lpl")) == []


def test_unreachable_nodes_have_no_distance():
    instance = ShortestPathInstance(fixed_graph([(0, 1, 4), (2, 1, 1)], 3), 0, 1)
    assert instance.expected_distances() == {"n0": 0, "n1": 4}
    assert check_shortest_path(instance, load_corpus_program("shortest_path.lpl")) == []


def test_closeness_on_a_fixed_graph():
    instance = ClosenessInstance(fixed_graph([(0, 1, 1), (1, 2, 1), (2, 0, 1), (1, 0, 1)], 3))
    assert instance.expected_centre() == "n1"
    assert check_closeness(instance, load_corpus_program("closeness.lpl")) == []


def test_oddminsat_fixed_formulas():
    assert check_oddminsat(2, Or(Variable(0), Not(Variable(1)))) == []
    assert check_oddminsat(2, Variable(0)) == []
    assert check_oddminsat(2, Variable(1)) == []


def test_run_examples():
    count = property_cases(3)
    for name in ("shortest-path", "closeness", "oddminsat"):
        report = run_example(name, seed=3, count=count)
        assert report.mismatches == 0, report.render()
        assert report.render().rstrip().endswith("s)")


def test_run_example_arguments():
    for name, count in (("no-such-example", 1), ("closeness", 0)):
        try:
            run_example(name, count=count)
        except ConfigError:
            continue
        raise AssertionError(f"run_example({name!r}, count={count}) was accepted")


if __name__ == "__main__":
    main("bundled examples", globals())
