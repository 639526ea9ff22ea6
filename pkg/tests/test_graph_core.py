from fractions import Fraction

import networkx as nx
import numpy as np
import pytest
from hypothesis import given, settings

from src.graph_core import (AdjacencyGraph, PartialColoring, canonical_edge, check_proper,
                            degeneracy_orientation, degeneracy_peel, degeneracy_plus_one_color,
                            find_independent_set, greedy_color, independence_lower_bound,
                            induced_subgraph, is_prime, prime_in_range, psi, read_edge_list,
                            write_edge_list)
from src.utils import ConfigError, InputError, TheoryViolation

from .strategies import graphs, partial_colorings, to_networkx


def test_canonical_edge_orders_and_rejects_loops():
    assert canonical_edge(5, 2) == (2, 5)
    with pytest.raises(InputError):
        canonical_edge(3, 3)


def test_from_edges_dedupes_and_caps_degree():
    g = AdjacencyGraph.from_edges(4, [(0, 1), (1, 0), (2, 1)])
    assert g.edges == ((0, 1), (1, 2))
    assert g.adjacency[1] == (0, 2)
    with pytest.raises(InputError):
        AdjacencyGraph.from_edges(4, [(0, 1), (0, 2), (0, 3)], max_degree=2)
    with pytest.raises(InputError):
        AdjacencyGraph.from_edges(3, [(0, 3)])


def test_check_proper_flags_monochromatic_edges(petersen):
    chi = greedy_color(petersen).chi
    assert check_proper(petersen.edges, chi) == []
    u, v = petersen.edges[0]
    chi[v] = chi[u]
    assert (u, v) in check_proper(petersen.edges, chi)


def test_check_proper_ignores_uncolored_endpoints():
    assert check_proper([(0, 1)], [None, None]) == []
    assert check_proper([(0, 1)], [3, None]) == []


@given(graphs())
def test_greedy_is_proper_within_delta_plus_one(graph):
    coloring = greedy_color(graph)
    assert coloring.is_complete()
    assert check_proper(graph.edges, coloring) == []
    assert all(0 <= c <= graph.max_degree() for c in coloring.chi)


@given(graphs().flatmap(lambda g: partial_colorings(g).map(lambda c: (g, c))))
def test_greedy_extends_a_partial_coloring(pair):
    graph, partial = pair
    done = greedy_color(graph, initial=partial)
    assert check_proper(graph.edges, done) == []
    for x, c in enumerate(partial.chi):
        if c is not None:
            assert done.chi[x] == c


def test_greedy_with_lists_uses_lists():
    g = AdjacencyGraph.from_edges(3, [(0, 1), (1, 2)])
    lists = {0: [7, 9], 1: [7, 8, 9], 2: [9, 4]}
    chi = greedy_color(g, lists=lists).chi
    assert chi == [7, 8, 4]


def test_greedy_with_short_list_raises():
    g = AdjacencyGraph.from_edges(2, [(0, 1)])
    with pytest.raises(TheoryViolation):
        greedy_color(g, lists={0: [0], 1: [0]})


@given(graphs())
def test_degeneracy_matches_core_number(graph):
    kappa, ordering = degeneracy_peel(graph)
    cores = nx.core_number(to_networkx(graph))
    assert kappa == max(cores.values(), default=0)
    assert sorted(ordering) == list(range(graph.n))
    assert max(degeneracy_orientation(graph, ordering), default=0) <= kappa


@given(graphs())
def test_degeneracy_coloring_uses_kappa_plus_one_colors(graph):
    kappa, _ = degeneracy_peel(graph)
    coloring = degeneracy_plus_one_color(graph)
    assert check_proper(graph.edges, coloring) == []
    assert max(coloring.chi, default=0) <= kappa


@settings(max_examples=60)
@given(graphs(max_n=10))
def test_independent_set_meets_caro_wei(graph):
    chosen = find_independent_set(graph)
    assert all(not (u in chosen and v in chosen) for u, v in graph.edges)
    assert Fraction(len(chosen)) >= psi(graph)
    assert len(chosen) >= independence_lower_bound(graph.n, graph.m)
    complement = nx.complement(to_networkx(graph))
    _, alpha = nx.max_weight_clique(complement, weight=None)
    assert len(chosen) <= alpha


def test_independent_set_on_petersen(petersen):
    chosen = find_independent_set(petersen)
    assert psi(petersen) == Fraction(10, 4)
    assert 3 <= len(chosen) <= 4


def test_turan_bound_over_seeded_graphs(capped_graph):
    rng = np.random.default_rng(7)
    for trial in range(150):
        n = int(rng.integers(2, 60))
        delta = int(rng.integers(1, n))
        g = capped_graph(n, delta, seed=trial)
        chosen = find_independent_set(g)
        assert len(chosen) >= independence_lower_bound(g.n, g.m)
        assert all(not (u in chosen and v in chosen) for u, v in g.edges)


def test_independence_lower_bound_values():
    assert independence_lower_bound(0, 0) == 0
    assert independence_lower_bound(10, 0) == 10
    assert independence_lower_bound(10, 15) == 3      # ceil(100 / 40)


def test_primes():
    assert [q for q in range(20) if is_prime(q)] == [2, 3, 5, 7, 11, 13, 17, 19]
    assert prime_in_range(8, 16) == 11
    assert prime_in_range(2, 2) == 2
    with pytest.raises(ConfigError):
        prime_in_range(24, 28)
    with pytest.raises(ConfigError):
        prime_in_range(1, 5)


def test_induced_subgraph_relabels():
    g, back = induced_subgraph([4, 7, 9], [(4, 7), (7, 9), (1, 4), (4, 9)])
    assert g.n == 3
    assert g.edges == ((0, 1), (0, 2), (1, 2))
    assert back == [4, 7, 9]


def test_partial_coloring_bookkeeping():
    pc = PartialColoring.empty(3)
    pc.assign(1, 4)
    assert pc.uncolored == {0, 2}
    assert pc.colors_used() == {4}
    clone = pc.copy()
    clone.assign(0, 1)
    assert pc.uncolored == {0, 2}
    assert PartialColoring.from_colors([None, 2]).uncolored == {0}


def test_edge_list_io(tmp_path):
    path = tmp_path / "g.txt"
    write_edge_list(path, [(0, 3), (1, 2)], header="tiny")
    n, edges = read_edge_list(path)
    assert n == 4
    assert edges == [(0, 3), (1, 2)]
    with pytest.raises(InputError):
        read_edge_list(path, n=3)


def test_edge_list_reports_line_numbers(tmp_path):
    path = tmp_path / "bad.txt"
    path.write_text("# header\n0 1\n2 x\n", encoding="utf-8")
    with pytest.raises(InputError, match=":3:"):
        read_edge_list(path)
    path.write_text("4 4\n", encoding="utf-8")
    with pytest.raises(InputError, match=":1:"):
        read_edge_list(path)
