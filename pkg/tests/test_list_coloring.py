import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from src.cli import gen_edges, gen_lists
from src.graph_core import AdjacencyGraph, check_proper, prime_in_range
from src.list_coloring import (MAX_FAMILY, ColorUniverse, ListColorConfig, PartitionFamily, _max_multiplicity,
                               adaptive_stages, expected_list_pass_count, family_split, partition_cost,
                               refine_offline, run_list_coloring)
from src.stream_engine import EdgeToken, ListToken, MultiPassSource
from src.utils import ConfigError, InputError


def test_partition_cost():
    assert partition_cost(lambda c: c % 3, []) == 0
    assert partition_cost(lambda c: c % 3, [5]) == 0
    assert partition_cost(lambda c: c % 3, [0, 3, 6, 1]) == 2
    assert partition_cost(lambda c: 0, range(10)) == 9


@given(st.integers(2, 8).flatmap(
    lambda L: st.lists(st.lists(st.integers(0, 5), min_size=L, max_size=L), min_size=1, max_size=5)))
def test_max_multiplicity_matches_counting(rows):
    M = np.asarray(rows, dtype=np.int64)
    expect = [max(row.count(v) for v in row) for row in rows]
    assert _max_multiplicity(M).tolist() == expect


def test_family_members_and_costs():
    fam = PartitionFamily.for_universe(ColorUniverse(10), 4)
    assert fam.p == 11
    assert fam.size == 110
    assert fam.member(0) == (1, 0)
    assert fam.member(fam.size - 1) == (10, 10)
    S = np.array([0, 2, 3, 7, 9], dtype=np.int64)
    costs = fam.costs(0, fam.size, S)
    for i in (0, 17, 55, 109):
        assert costs[i] == partition_cost(fam.part_of(i), S.tolist())
        assert fam.parts(i, S).tolist() == [fam.part_of(i)(int(c)) for c in S]


def test_family_guard(monkeypatch):
    monkeypatch.setattr("src.list_coloring.MAX_FAMILY", 100)
    with pytest.raises(ConfigError):
        PartitionFamily.for_universe(ColorUniverse(50), 4)


@pytest.mark.parametrize("size", [1, 2, 15, 16, 17, 81, 110, 10_000])
def test_family_split_is_smallest_fourth_root(size):
    g = family_split(size)
    assert g ** 4 >= size
    assert g == 1 or (g - 1) ** 4 < size


@given(st.lists(st.integers(0, 50), min_size=1, max_size=300), st.integers(1, 6))
def test_refine_offline_is_no_worse_than_average(costs, g):
    costs = np.asarray(costs, dtype=np.int64)
    i = refine_offline(costs, g)
    assert 0 <= i < len(costs)
    assert costs[i] * len(costs) <= costs.sum()


def test_subaverage_partition_exists_for_small_universes():
    rng = np.random.default_rng(3)
    universe = ColorUniverse(13)
    for s in (2, 4, 8):
        fam = PartitionFamily.for_universe(universe, s)
        lists = [np.sort(rng.choice(13, size=int(rng.integers(2, 9)), replace=False)) for _ in range(6)]
        total = sum(fam.costs(0, fam.size, L) for L in lists)
        spread = sum(len(L) - 1 for L in lists)
        assert total.mean() <= spread / np.sqrt(s) + 1e-9
        best = refine_offline(total, family_split(fam.size))
        assert total[best] ** 2 * s <= spread ** 2


def test_adaptive_stage_counts():
    assert adaptive_stages(1, 3) == 0
    assert adaptive_stages(4, 1) == 4
    assert adaptive_stages(4, 2) == 2
    assert adaptive_stages(5, 3) == 2
    for w in range(2, 40):
        for k in range(1, 6):
            t = adaptive_stages(w, k)
            assert (1 << (t * k)) >= w * w
            assert t == 0 or (1 << ((t - 1) * k)) < w * w


def _lists_ok(res, lists):
    return all(res.coloring.chi[x] in lists[x] for x in range(len(res.coloring.chi)))


@pytest.mark.parametrize("n,delta,universe,seed", [(40, 4, 10, 1), (60, 6, 14, 2), (80, 5, 40, 3)])
def test_random_lists(capped_graph, n, delta, universe, seed):
    g = capped_graph(n, delta, seed)
    lists = gen_lists(n, g.edges, universe, seed)
    src = MultiPassSource.from_edges(n, g.edges, lists=lists)
    res = run_list_coloring(src, config=ListColorConfig(universe=universe))
    assert check_proper(g.edges, res.coloring) == []
    assert _lists_ok(res, lists)
    assert res.passes == expected_list_pass_count(res.epochs)
    assert res.width == max(len(L) for L in lists.values())
    for ep in res.epochs:
        assert 3 * ep.u_after <= 2 * ep.u_size
        assert ep.candidates <= 2 * ep.u_size
        assert ep.stages[-1].partition is None
        k = ep.k
        spread0 = ep.stages[0].spread_before
        for i, st_ in enumerate(ep.stages[:-1], start=1):
            assert st_.cost ** 2 * ep.s <= st_.spread_before ** 2
            assert st_.spread_after ** 2 * (1 << (i * k)) <= spread0 ** 2
        assert ep.stages[-1].phi_after <= 2 * ep.u_size + 1e-9


def test_standard_lists_give_delta_plus_one_coloring(capped_graph):
    n, delta = 50, 5
    g = capped_graph(n, delta, 9)
    lists = {x: tuple(range(delta + 1)) for x in range(n)}
    res = run_list_coloring(MultiPassSource.from_edges(n, g.edges, lists=lists), delta=delta)
    assert check_proper(g.edges, res.coloring) == []
    assert all(0 <= c <= delta for c in res.coloring.chi)
    assert res.universe.size == delta + 1


def test_lists_may_arrive_after_edges():
    n = 12
    edges = [(i, (i + 1) % n) for i in range(n)]
    toks = [EdgeToken(u, v) for u, v in edges]
    toks += [ListToken(x, (3 * x % 7, 3 * x % 7 + 7, 20 + x)) for x in range(n)]
    res = run_list_coloring(MultiPassSource(n, tokens=toks))
    g = AdjacencyGraph.from_edges(n, edges)
    assert check_proper(g.edges, res.coloring) == []
    for x in range(n):
        assert res.coloring.chi[x] in (3 * x % 7, 3 * x % 7 + 7, 20 + x)


def test_missing_list_is_an_input_error():
    src = MultiPassSource.from_edges(3, [(0, 1)], lists={0: (0, 1), 1: (0, 1)})
    with pytest.raises(InputError):
        run_list_coloring(src)


def test_short_list_is_an_input_error():
    src = MultiPassSource.from_edges(3, [(0, 1), (1, 2)], lists={0: (0, 1), 1: (0, 1), 2: (0, 1)})
    with pytest.raises(InputError):
        run_list_coloring(src)


def test_list_outside_universe_is_an_input_error():
    src = MultiPassSource.from_edges(2, [(0, 1)], lists={0: (0, 1), 1: (0, 9)})
    with pytest.raises(InputError):
        run_list_coloring(src, config=ListColorConfig(universe=5))


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 10_000))
def test_tiny_instances(seed):
    n = 16
    edges = gen_edges("gnp-capped", n, 4, seed)
    lists = gen_lists(n, edges, 12, seed)
    res = run_list_coloring(MultiPassSource.from_edges(n, edges, lists=lists))
    assert check_proper(edges, res.coloring) == []
    assert all(res.coloring.chi[x] in lists[x] for x in range(n))


@pytest.mark.parametrize("n,delta,seed", [(60, 4, 11), pytest.param(100, 8, 12, marks=pytest.mark.slow)])
def test_sparse_universe_is_relabeled_onto_listed_colors(capped_graph, n, delta, seed):
    # a raw universe of n^2 colors needs a family beyond the default cap
    universe = n * n
    assert PartitionFamily(prime_in_range(universe, 2 * universe), 2).size > MAX_FAMILY
    g = capped_graph(n, delta, seed)
    lists = gen_lists(n, g.edges, universe, seed)
    res = run_list_coloring(MultiPassSource.from_edges(n, g.edges, lists=lists),
                            config=ListColorConfig(universe=universe))
    assert check_proper(g.edges, res.coloring) == []
    assert _lists_ok(res, lists)
    assert res.universe.size == universe
    listed = set().union(*lists.values())
    assert res.palette_size == len(listed) <= sum(len(L) for L in lists.values())
    assert res.meter.peak_by_category["palette"] == 2 * len(listed)
    assert res.passes == expected_list_pass_count(res.epochs)


def test_dense_universe_keeps_its_colors():
    n = 12
    edges = [(i, (i + 1) % n) for i in range(n)]
    lists = {x: (0, 1, 2) for x in range(n)}
    res = run_list_coloring(MultiPassSource.from_edges(n, edges, lists=lists))
    assert res.palette_size == 3
    assert set(res.coloring.chi) <= {0, 1, 2}
    assert check_proper(edges, res.coloring) == []
