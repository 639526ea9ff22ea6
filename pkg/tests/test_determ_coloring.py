from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from src.determ_coloring import (DetermConfig, PCCState, Subcube, avail_count, brute_force_potentials, build_gw,
                                 color_bits, compute_weights, epoch_k, expected_pass_count, hash_prime,
                                 potential, potential_vertex_form, run, slack_wrt, stage_count, stage_width,
                                 subcube_partition)
from src.graph_core import AdjacencyGraph, PartialColoring, check_proper, is_prime
from src.stream_engine import MultiPassSource, SpaceMeter
from src.utils import ConfigError, InputError, TheoryViolation

from .strategies import pcc_states


def test_bit_helpers():
    assert color_bits(7) == 3
    assert color_bits(8) == 4
    assert color_bits(0) == 0
    assert epoch_k(100, 100) == 1
    assert epoch_k(100, 30) == 2
    assert stage_count(7, 3) == 3
    assert [stage_width(7, 3, s) for s in (1, 2, 3)] == [3, 3, 1]
    with pytest.raises(ConfigError):
        stage_width(7, 3, 4)


@given(st.integers(1, 5000), st.data())
def test_epoch_k_keeps_counters_linear(n, data):
    u = data.draw(st.integers(1, n))
    k = epoch_k(n, u)
    assert u * (1 << k) <= 2 * n
    assert u * (1 << k) > n


def test_hash_prime_range():
    for n in (2, 10, 100, 1000):
        p = hash_prime(n)
        lg = max(np.log2(n), 1.0)
        assert is_prime(p)
        assert 8 * n * lg <= p <= 16 * n * lg


@given(st.integers(0, 40), st.integers(0, 5))
def test_avail_count_matches_enumeration(delta, f):
    modulus = 1 << f
    for residue in range(modulus):
        expect = sum(1 for c in range(delta + 1) if c % modulus == residue)
        assert avail_count(delta, residue, modulus) == expect


def test_subcube_partition_covers_parent():
    b, k = 5, 2
    root = Subcube(0, 0)
    kids = subcube_partition(root, 1, k, b)
    assert len(kids) == 4
    members = sorted(c for kid in kids for c in kid.members(b))
    assert members == list(range(1 << b))
    grand = subcube_partition(kids[1], 2, k, b)
    assert all(g.contains(c) for g in grand for c in g.members(b))
    assert all(kids[1].contains(c) for g in grand for c in g.members(b))
    with pytest.raises(ConfigError):
        subcube_partition(kids[1], 1, k, b)


def test_gw_intervals_cover_field():
    w = compute_weights(np.array([[1, 0, 3], [2, 2, 0]]))
    sampler = build_gw(w, 101, 64)
    for row in range(2):
        ends = sampler.thresholds(row)
        assert ends[-1] == 101
        assert np.all(sampler.lengths[row] >= 0)
    assert sampler.lengths[0, 1] == 0 and sampler.lengths[1, 2] == 0
    picks = sampler.lookup(np.zeros(101, dtype=np.int64), np.arange(101))
    assert set(picks.tolist()) == {0, 2}


def test_zero_slack_row_is_rejected():
    with pytest.raises(TheoryViolation):
        compute_weights(np.array([[0, 0]]))


def _run_graph(graph, **kw):
    return run(MultiPassSource.from_edges(graph.n, graph.edges), delta=kw.pop("delta", graph.max_degree()), **kw)


def test_clique_gets_delta_plus_one_colors():
    n = 8
    g = AdjacencyGraph.from_edges(n, [(u, v) for u in range(n) for v in range(u + 1, n)])
    res = _run_graph(g)
    assert check_proper(g.edges, res.coloring) == []
    assert res.colors_used == 8
    assert all(0 <= c <= 7 for c in res.coloring.chi)
    assert res.passes == expected_pass_count(res.epochs)


def test_path_uses_three_colors():
    g = AdjacencyGraph.from_edges(100, [(i, i + 1) for i in range(99)])
    res = _run_graph(g)
    assert check_proper(g.edges, res.coloring) == []
    assert set(res.coloring.chi) <= {0, 1, 2}
    assert len(res.epochs) >= 1


@pytest.mark.parametrize("n,delta,seed", [(120, 6, 1), (200, 12, 2), (300, 24, 3)])
def test_random_graphs_epoch_invariants(capped_graph, n, delta, seed):
    g = capped_graph(n, delta, seed)
    meter = SpaceMeter()
    res = _run_graph(g, delta=delta, meter=meter)
    assert check_proper(g.edges, res.coloring) == []
    assert all(0 <= c <= delta for c in res.coloring.chi)
    assert res.passes == expected_pass_count(res.epochs)
    for ep in res.epochs:
        assert 3 * ep.u_after <= 2 * ep.u_size
        assert ep.f_size <= ep.u_size
        assert ep.phi[0] <= ep.u_size + 1e-9
        assert ep.phi[-1] <= 2 * ep.u_size + 1e-9
        assert ep.u_size * (1 << ep.k) <= 2 * n
        assert all(s.counters <= 2 * n for s in ep.stages)
        eps = 1.0 / (8.0 * np.log2(n))
        for s in ep.stages:
            assert s.phi_after <= s.mean_phi * (1 + 1e-9) + 1e-12
            assert s.mean_phi <= (1 + eps) ** 2 * s.phi_before * (1 + 1e-9) + 1e-12
    assert res.final_uncolored * max(delta, 1) <= n
    assert meter.peak_words > 0


def test_discovering_delta_costs_one_pass(capped_graph):
    g = capped_graph(80, 5, 4)
    src = MultiPassSource.from_edges(g.n, g.edges)
    res = run(src)
    assert res.discovered_delta
    assert res.delta == g.max_degree()
    assert res.passes == expected_pass_count(res.epochs, discovered_delta=True)


def test_degree_cap_is_enforced(capped_graph):
    g = capped_graph(60, 6, 5)
    with pytest.raises(InputError):
        run(MultiPassSource.from_edges(g.n, g.edges), delta=g.max_degree() - 1)


def test_small_graph_skips_epochs():
    g = AdjacencyGraph.from_edges(10, [(0, 1), (2, 3)])
    res = _run_graph(g)
    assert res.epochs == [] and res.p is None
    assert res.passes == 1
    assert check_proper(g.edges, res.coloring) == []


def test_output_is_deterministic(capped_graph):
    g = capped_graph(150, 10, 6)
    a = _run_graph(g, delta=10)
    b = _run_graph(g, delta=10)
    assert a.coloring.chi == b.coloring.chi
    assert a.passes == b.passes


@pytest.mark.parametrize("n,delta,seed", [(12, 4, 11), (14, 5, 12), (16, 6, 13)])
def test_selected_hash_against_brute_force(capped_graph, n, delta, seed):
    g = capped_graph(n, delta, seed)
    res = _run_graph(g, delta=delta, config=DetermConfig(keep_samplers=True))
    checked = 0
    for ep in res.epochs:
        for s in ep.stages:
            cell = s.cell
            row = np.full(n, -1, dtype=np.int64)
            U = [x for x in range(n) if cell[x] >= 0]
            row[U] = np.arange(len(U))
            phi = brute_force_potentials(s.sampler, cell, row, g.edges)
            assert phi[s.a, s.b] == pytest.approx(s.phi_after, rel=1e-9, abs=1e-9)
            assert phi.mean() == pytest.approx(s.mean_phi, rel=1e-9, abs=1e-12)
            assert phi[s.a].sum() == pytest.approx(phi.sum(axis=1).min(), rel=1e-9, abs=1e-12)
            checked += 1
    assert checked > 0


def test_slack_counts_list_colors_minus_blocked_neighbours():
    coloring = PartialColoring.from_colors([None, 0, 2, 5, None])
    assert slack_wrt(0, range(4), coloring, [1, 2, 3, 4], range(7)) == 2
    assert slack_wrt(0, {0, 2}, coloring, [1, 2], {0, 1, 2}) == 0
    assert slack_wrt(0, {5, 6}, coloring, [3], {6}) == 0


def test_potential_forms_agree(capped_graph):
    g = capped_graph(40, 4, 8)
    coloring = PartialColoring.empty(g.n)
    for x in range(0, g.n, 5):
        coloring.assign(x, 0)
    pcc = PCCState.start(coloring, b=color_bits(4), k=1, delta=4)
    inside = [(u, v) for u, v in g.edges if coloring.chi[u] is None and coloring.chi[v] is None]
    assert potential(pcc, g.edges) == pytest.approx(2 * len(inside) / 5)
    assert potential(pcc, g.edges) == pytest.approx(potential_vertex_form(pcc, g.edges))
    assert potential(pcc, g.edges) <= len(pcc.U)


def _only(pcc, patterns):
    """The state restricted to the vertices whose subcube is in `patterns`."""
    row = pcc.row.copy()
    for i, x in enumerate(pcc.U):
        if int(pcc.pattern[i]) not in patterns:
            row[x] = -1
    return replace(pcc, row=row)


@settings(max_examples=60, deadline=None)
@given(pcc_states(), st.data())
def test_potential_is_subadditive_over_disjoint_subcubes(state, data):
    pcc, edges = state
    classes = sorted(set(pcc.pattern.tolist()))
    groups = data.draw(st.lists(st.sampled_from(classes), unique=True)) if classes else []
    union = potential(_only(pcc, set(groups)), edges)
    parts = sum(potential(_only(pcc, {c}), edges) for c in groups)
    assert union <= parts + 1e-9
    assert potential(pcc, edges) <= sum(potential(_only(pcc, {c}), edges) for c in classes) + 1e-9


@settings(max_examples=60, deadline=None)
@given(pcc_states(max_fixed=2), st.data())
def test_refining_subcubes_never_raises_potential(state, data):
    pcc, edges = state
    extra = np.asarray(data.draw(st.lists(st.integers(0, 1), min_size=len(pcc.U), max_size=len(pcc.U))),
                       dtype=np.int64)
    finer = replace(pcc, pattern=2 * pcc.pattern + extra, fixed=pcc.fixed + 1)
    assert potential(finer, edges) <= potential(pcc, edges) + 1e-9
