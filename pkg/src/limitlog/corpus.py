"""
Bundled example programs, random instance generators and reference answers.

Each corpus pairs a program under programs/ with a seeded generator of
datasets and an answer computed without the engine (scipy shortest paths,
networkx reachability, enumeration of assignments). run_example evaluates
a batch of instances and reports expected against actual.
"""

import logging
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Dict, FrozenSet, List, Optional, Tuple

import networkx as nx
import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import dijkstra

from .config import EngineConfig, EvaluationMode
from .engine import NO_VALUE, MaterialisationStatus, Verdict, materialise_stratified
from .errors import ConfigError
from .frontend import parse_program
from .model import Fact, Finite, Program
from .oddminsat import GOAL, brute_force_oddminsat, oddminsat_encode, random_satisfiable_formula

logger = logging.getLogger(__name__)

PROGRAMS_DIR = Path(__file__).resolve().parent / "programs"


def corpus_path(name: str) -> Path:
    return PROGRAMS_DIR / name


def load_corpus_program(name: str) -> Program:
    return parse_program(corpus_path(name).read_text())


# =============================================================================
# GRAPHS
# =============================================================================

@dataclass(frozen=True)
class WeightedGraph:
    """Dense weight matrix; 0 means no edge. Node i is the object n<i>."""
    weights: np.ndarray

    @property
    def size(self) -> int:
        return self.weights.shape[0]

    def name(self, i: int) -> str:
        return f"n{i}"

    def edges(self) -> List[Tuple[int, int, int]]:
        rows, cols = np.nonzero(self.weights)
        return [(int(i), int(j), int(self.weights[i, j])) for i, j in zip(rows, cols)]

    def edge_facts(self) -> List[Fact]:
        return [Fact("edge", (self.name(i), self.name(j)), w) for i, j, w in self.edges()]

    def distances(self, source: Optional[int] = None) -> np.ndarray:
        """Shortest-path lengths (inf when unreachable), from one source or all pairs."""
        return dijkstra(csr_matrix(self.weights), directed=True, indices=source)


def _random_weights(rng: np.random.Generator, n: int, density: float, max_weight: int) -> np.ndarray:
    present = rng.random((n, n)) < density
    np.fill_diagonal(present, False)
    return np.where(present, rng.integers(1, max_weight + 1, size=(n, n)), 0).astype(np.int64)


def random_weighted_digraph(rng: np.random.Generator, max_nodes: int = 12,
                            density: float = 0.3, max_weight: int = 9) -> WeightedGraph:
    n = int(rng.integers(2, max_nodes + 1))
    return WeightedGraph(_random_weights(rng, n, density, max_weight))


def random_strongly_connected_digraph(rng: np.random.Generator, max_nodes: int = 8,
                                      density: float = 0.25, max_weight: int = 9) -> WeightedGraph:
    """A random cycle through all nodes plus random extra edges."""
    n = int(rng.integers(2, max_nodes + 1))
    weights = _random_weights(rng, n, density, max_weight)
    order = rng.permutation(n)
    for a, b in zip(order, np.roll(order, -1)):
        if weights[a, b] == 0:
            weights[a, b] = int(rng.integers(1, max_weight + 1))
    return WeightedGraph(weights)


# =============================================================================
# SHORTEST PATH
# =============================================================================

@dataclass(frozen=True)
class ShortestPathInstance:
    graph: WeightedGraph
    source: int
    target: int

    def facts(self) -> List[Fact]:
        g = self.graph
        return [Fact("source", (g.name(self.source),)), Fact("target", (g.name(self.target),))] + g.edge_facts()

    def expected_distances(self) -> Dict[str, int]:
        dist = self.graph.distances(self.source)
        return {self.graph.name(i): int(d) for i, d in enumerate(dist) if np.isfinite(d)}

    def expected_sp_edges(self) -> FrozenSet[Tuple[str, str]]:
        """Edges on some shortest source-target path: tight edges from which the target is reachable."""
        dist = self.graph.distances(self.source)
        tight = nx.DiGraph()
        tight.add_nodes_from(range(self.graph.size))
        for i, j, w in self.graph.edges():
            if np.isfinite(dist[i]) and dist[i] + w == dist[j]:
                tight.add_edge(i, j)
        g = self.graph
        return frozenset((g.name(i), g.name(j)) for i, j in tight.edges
                         if nx.has_path(tight, j, self.target))


def random_shortest_path_instance(rng: np.random.Generator, max_nodes: int = 12) -> ShortestPathInstance:
    graph = random_weighted_digraph(rng, max_nodes)
    source, target = rng.choice(graph.size, size=2, replace=False)
    return ShortestPathInstance(graph, int(source), int(target))


def check_shortest_path(instance: ShortestPathInstance, program: Program,
                        config: Optional[EngineConfig] = None) -> List[str]:
    """Mismatches between the engine and the reference answers (empty when they agree)."""
    result = materialise_stratified(program, instance.facts(), config)
    problems = []
    expected = instance.expected_distances()
    for i in range(instance.graph.size):
        name = instance.graph.name(i)
        actual = result.lub("ds", (name,))
        wanted = Finite(expected[name]) if name in expected else NO_VALUE
        if actual != wanted:
            problems.append(f"ds({name}): expected {wanted}, got {actual}")
    derived = {objs for pred, objs in result.pseudo.object_facts if pred == "sp-edge"}
    wanted_edges = instance.expected_sp_edges()
    for edge in sorted(derived ^ wanted_edges):
        side = "missing" if edge in wanted_edges else "unexpected"
        problems.append(f"{side} sp-edge({edge[0]},{edge[1]})")
    return problems


# =============================================================================
# CLOSENESS
# =============================================================================

@dataclass(frozen=True)
class ClosenessInstance:
    graph: WeightedGraph

    def facts(self) -> List[Fact]:
        g = self.graph
        names = [g.name(i) for i in range(g.size)]
        facts = [Fact("node", (x,)) for x in names]
        facts += [Fact("first", (names[0],)), Fact("last", (names[-1],))]
        facts += [Fact("next", (a, b)) for a, b in zip(names, names[1:])]
        return facts + g.edge_facts()

    def expected_centre(self) -> str:
        farness = self.graph.distances().sum(axis=1)
        # argmin returns the first minimiser, which is the earliest in the order
        return self.graph.name(int(np.argmin(farness)))


def random_closeness_instance(rng: np.random.Generator, max_nodes: int = 8) -> ClosenessInstance:
    return ClosenessInstance(random_strongly_connected_digraph(rng, max_nodes))


def check_closeness(instance: ClosenessInstance, program: Program,
                    config: Optional[EngineConfig] = None) -> List[str]:
    result = materialise_stratified(program, instance.facts(), config)
    centres = sorted(objs[0] for pred, objs in result.pseudo.object_facts if pred == "centre")
    wanted = instance.expected_centre()
    if centres != [wanted]:
        return [f"centre: expected {wanted}, got {', '.join(centres) or 'none'}"]
    return []


# =============================================================================
# ODDMINSAT
# =============================================================================

def check_oddminsat(n_vars: int, formula, config: Optional[EngineConfig] = None) -> List[str]:
    program, facts = oddminsat_encode(n_vars, formula)
    config = config or EngineConfig(mode=EvaluationMode.GENERAL_BOUNDED)
    result = materialise_stratified(program, facts, config)
    if result.status is not MaterialisationStatus.EXACT:
        return [f"{formula}: evaluation is {result.status.value}"]
    expected = brute_force_oddminsat(n_vars, formula)
    actual = result.verdict(GOAL) is Verdict.ENTAILED
    if actual != expected:
        return [f"{formula}: expected min_odd={expected}, got {actual} (ass={result.lub('ass', ())})"]
    return []


# =============================================================================
# RUNNER
# =============================================================================

@dataclass
class ExampleOutcome:
    index: int
    description: str
    problems: List[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.problems

    def render(self) -> str:
        if self.ok:
            return f"[{self.index}] ok: {self.description}"
        return f"[{self.index}] MISMATCH: {self.description}\n" + "\n".join(f"    {p}" for p in self.problems)


@dataclass
class ExampleReport:
    name: str
    seed: int
    outcomes: List[ExampleOutcome]
    seconds: float

    @property
    def mismatches(self) -> int:
        return sum(not o.ok for o in self.outcomes)

    def render(self) -> str:
        lines = [o.render() for o in self.outcomes]
        lines.append(f"{self.name}: {len(self.outcomes) - self.mismatches}/{len(self.outcomes)} "
                     f"instances agree (seed {self.seed}, {self.seconds:.2f}s)")
        return "\n".join(lines) + "\n"


def _shortest_path_case(rng, program) -> Tuple[str, List[str]]:
    instance = random_shortest_path_instance(rng)
    text = (f"{instance.graph.size} nodes, {len(instance.graph.edges())} edges, "
            f"n{instance.source} -> n{instance.target}")
    return text, check_shortest_path(instance, program)


def _closeness_case(rng, program) -> Tuple[str, List[str]]:
    instance = random_closeness_instance(rng)
    text = f"{instance.graph.size} nodes, centre {instance.expected_centre()}"
    return text, check_closeness(instance, program)


def _oddminsat_case(rng, program) -> Tuple[str, List[str]]:
    n_vars = int(rng.integers(1, 7))
    formula = random_satisfiable_formula(n_vars, rng)
    return f"{n_vars} variables, {formula}", check_oddminsat(n_vars, formula)


EXAMPLES: Dict[str, Tuple[Optional[str], Callable]] = {
    "shortest-path": ("shortest_path.lpl", _shortest_path_case),
    "closeness": ("closeness.lpl", _closeness_case),
    "oddminsat": (None, _oddminsat_case),
}


def run_example(name: str, seed: int = 0, count: int = 10) -> ExampleReport:
    """Evaluate `count` seeded instances of a bundled example."""
    if name not in EXAMPLES:
        raise ConfigError(f"unknown example {name!r}; choose from {', '.join(sorted(EXAMPLES))}")
    if count < 1:
        raise ConfigError("count must be positive")
    filename, case = EXAMPLES[name]
    program = load_corpus_program(filename) if filename else None
    rng = np.random.default_rng(seed)
    start = time.perf_counter()
    outcomes = []
    for index in range(count):
        description, problems = case(rng, program)
        outcomes.append(ExampleOutcome(index, description, problems))
        if problems:
            logger.warning("%s instance %d disagrees: %s", name, index, problems[0])
    report = ExampleReport(name, seed, outcomes, time.perf_counter() - start)
    logger.info("%s: %d mismatches in %.2fs", name, report.mismatches, report.seconds)
    return report
