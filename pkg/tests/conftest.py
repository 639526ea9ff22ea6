import networkx as nx
import numpy as np
import pytest

from src.cli import gen_edges, gen_lists
from src.graph_core import AdjacencyGraph
from src.stream_engine import MultiPassSource


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def petersen() -> AdjacencyGraph:
    G = nx.petersen_graph()
    return AdjacencyGraph.from_edges(G.number_of_nodes(), G.edges())


@pytest.fixture
def capped_graph():
    """make(n, delta, seed) -> degree-capped random graph."""
    def make(n: int, delta: int, seed: int = 0, kind: str = "gnp-capped") -> AdjacencyGraph:
        return AdjacencyGraph.from_edges(n, gen_edges(kind, n, delta, seed), max_degree=delta)
    return make


@pytest.fixture
def stream_of():
    """make(graph, lists=False, universe=None, seed=0) -> MultiPassSource (lists first when asked)."""
    def make(graph: AdjacencyGraph, lists: bool = False, universe: int | None = None, seed: int = 0):
        L = None
        if lists:
            top = graph.max_degree()
            L = gen_lists(graph.n, graph.edges, universe or 2 * (top + 1), seed)
        return MultiPassSource.from_edges(graph.n, graph.edges, lists=L)
    return make

