import itertools

import networkx as nx
import numpy as np
import pytest

from loanqaoa.model import ProblemInstance


def random_instance(rng, n, m, epsilon=0.5, p_edge=0.4, cap=None):
    h = rng.random((n, m))
    l = 10.0 ** rng.uniform(-3, 0, size=(n, m))
    assoc = {(a, b): float(rng.uniform(0.05, 1.0))
             for a, b in itertools.combinations(range(1, n + 1), 2) if rng.random() < p_edge}
    return ProblemInstance(n, m, h, l, assoc, epsilon, cap)


def schematic_graph():
    """Stand-in for the schematic network: a 5-clique, a bridge triangle
    {6, 7, 9} and a triangle {8, 10, 11}."""
    g = nx.Graph()
    g.add_nodes_from(range(1, 12))
    g.add_edges_from(itertools.combinations([1, 2, 3, 4, 5], 2), weight=1.0)
    g.add_edges_from([(6, 7), (7, 9), (6, 9)], weight=1.0)
    g.add_edges_from([(8, 10), (10, 11), (8, 11)], weight=1.0)
    g.add_edges_from([(5, 6), (4, 7), (3, 9), (7, 8), (9, 10)], weight=1.0)
    return g


def schematic_instance(epsilon=0.5):
    g = schematic_graph()
    assoc = {(min(a, b), max(a, b)): d["weight"] for a, b, d in g.edges(data=True)}
    rng = np.random.default_rng(11)
    return ProblemInstance(11, 5, rng.random((11, 5)), rng.random((11, 5)), assoc, epsilon)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def small_instance():
    """h = [[1, 2], [3, 4]], one edge of weight 2, epsilon 0.5."""
    return ProblemInstance(2, 2, [[1, 2], [3, 4]], [[0.1, 0.2], [0.3, 0.4]], {(1, 2): 2.0}, 0.5)
