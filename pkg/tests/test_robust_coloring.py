import math

import numpy as np
import pytest

from src.adversary_harness import ConflictSeeker, GameConfig, ObliviousRandom, run_game
from src.graph_core import check_proper
from src.robust_coloring import (PaletteLayout, RobustColorer, RobustConfig, palette_bound,
                                 palette_target)
from src.utils import ConfigError, InputError


def test_base_parameters():
    c = RobustConfig(n=256, delta=64)
    assert (c.buffer_cap, c.epochs, c.slow_range) == (256, 64, 4096)
    assert (c.fast_threshold, c.levels, c.fast_range) == (8, 8, 512)
    assert c.block_capacity == 8 + 5 * 8 + 1
    assert not c.fallback
    assert palette_bound(c) == (4096 + 8 * 512) * 49


def test_tradeoff_parameters():
    c = RobustConfig(n=256, delta=64, beta=0.5)
    assert (c.buffer_cap, c.slow_range, c.levels, c.fast_threshold) == (2048, 64, 3, 23)
    assert (c.epochs, c.fast_range) == (8, 23)
    assert palette_bound(c) == (64 + 3 * 23) * 64
    third = RobustConfig(n=256, delta=64, beta=1 / 3)
    assert (third.buffer_cap, third.epochs, third.slow_range) == (1024, 16, 256)
    assert (third.fast_threshold, third.levels, third.fast_range) == (16, 4, 64)
    assert palette_bound(third) == 512 * 57


def test_more_buffer_buys_fewer_colors():
    bounds = [palette_bound(RobustConfig(n=256, delta=64, beta=b)) for b in (0.0, 1 / 3, 0.5)]
    assert bounds == sorted(bounds, reverse=True)
    assert palette_target(RobustConfig(n=256, delta=64)) == pytest.approx(64 ** 2.5)


def test_low_degree_falls_back_to_exact_coloring():
    c = RobustConfig(n=1 << 16, delta=4)
    assert c.fallback
    assert palette_bound(c) == 5
    alg = RobustColorer(c)
    for u, v in [(0, 1), (1, 2), (2, 0), (2, 3)]:
        alg.process(u, v)
    out = alg.query()
    assert check_proper([(0, 1), (1, 2), (0, 2), (2, 3)], out) == []
    assert max(out) <= 4
    assert alg.stats()["fallback"]


def test_config_validation():
    with pytest.raises(ConfigError):
        RobustConfig(n=0, delta=4)
    with pytest.raises(ConfigError):
        RobustConfig(n=8, delta=0)
    with pytest.raises(ConfigError):
        RobustConfig(n=8, delta=4, beta=1.5)


def test_palette_layout_blocks_are_disjoint():
    c = RobustConfig(n=64, delta=16, c0=0.0)
    lay = PaletteLayout.for_config(c)
    slow_top = int(lay.slow_offset(c.slow_range - 1)) + lay.capacity
    fast_bottom = int(lay.fast_offset(1, 0))
    assert slow_top == fast_bottom
    assert int(lay.fast_offset(c.levels, c.fast_range - 1)) + lay.capacity == lay.total
    assert int(lay.fast_offset(2, 0)) - int(lay.fast_offset(1, 0)) == c.fast_range * lay.capacity


def _assert_storage_bounds(alg, stats):
    c = alg.config
    logn = math.log2(c.n)
    assert stats["max_deg_A_sum"] <= 5 * logn
    assert stats["max_deg_C_sum"] <= 5 * logn
    assert stats["peak_stored_edges"] <= 20 * c.n * logn
    assert stats["peak_stored_edges"] <= 20 * c.n * c.delta ** c.beta * logn


def _small(seed=0, beta=0.0):
    return RobustColorer(RobustConfig(n=64, delta=16, beta=beta, seed=seed, audit=True, c0=0.0))


def test_degree_cap_and_range_are_enforced():
    alg = _small()
    with pytest.raises(InputError):
        alg.process(0, 64)
    for v in range(1, 17):
        alg.process(0, v)
    with pytest.raises(InputError):
        alg.process(0, 17)


def test_rollover_clears_buffer():
    alg = _small()
    edges = [(i, (i + 1) % 64) for i in range(64)] + [(i, (i + 2) % 64) for i in range(8)]
    for u, v in edges:
        alg.process(u, v)
    assert alg.curr == 2
    assert len(alg.B) == 8
    out = alg.query()
    assert check_proper(edges, out) == []
    alg.coverage_check(edges)


@pytest.mark.parametrize("beta", [0.0, 0.5])
@pytest.mark.parametrize("adversary", ["oblivious", "conflict"])
def test_games_stay_proper_with_audit(beta, adversary):
    for seed in range(3):
        alg = _small(seed, beta)
        adv = ObliviousRandom(q=8, seed=seed) if adversary == "oblivious" else ConflictSeeker(q=8, seed=seed)
        res = run_game(alg, adv, GameConfig(n=64, delta=16, audit=True), seed=seed)
        assert res.violations == 0
        assert res.overflows == 0
        assert res.queries > 0
        assert res.inserts > 0
        assert all(r.max_out_degree <= alg.config.fast_threshold for r in alg.reports)
        assert not res.stats["soft_cap_exceeded"]
        _assert_storage_bounds(alg, res.stats)


def test_long_random_stream_is_covered():
    rng = np.random.default_rng(4)
    alg = _small(4)
    deg = np.zeros(64, dtype=np.int64)
    seen = set()
    edges = []
    for _ in range(20_000):
        if len(edges) >= 400:
            break
        u, v = sorted(rng.choice(64, size=2, replace=False).tolist())
        if (u, v) in seen or deg[u] >= 16 or deg[v] >= 16:
            continue
        seen.add((u, v))
        deg[u] += 1
        deg[v] += 1
        edges.append((u, v))
        alg.process(u, v)
    out = alg.query()
    assert check_proper(edges, out) == []
    alg.coverage_check(edges)
    assert alg.orientation_check() <= alg.config.fast_threshold
    stats = alg.stats()
    assert stats["stored_edges"] <= stats["peak_stored_edges"]
    _assert_storage_bounds(alg, stats)
    assert max(out) < palette_bound(alg.config)


def test_same_seed_same_outputs():
    edges = [(i, (i * 7 + 3) % 64) for i in range(64) if i != (i * 7 + 3) % 64]
    outs = []
    for _ in range(2):
        alg = _small(seed=11)
        for u, v in edges:
            alg.process(u, v)
        outs.append(alg.query())
    assert outs[0] == outs[1]


@pytest.mark.slow
@pytest.mark.parametrize("beta", [0.0, 1 / 3, 0.5])
@pytest.mark.parametrize("adversary", ["oblivious", "conflict"])
def test_campaign_at_full_scale(beta, adversary):
    n, delta = 256, 64
    for seed in range(3):
        alg = RobustColorer(RobustConfig(n=n, delta=delta, beta=beta, seed=seed, audit=True))
        assert not alg.config.fallback
        adv = ObliviousRandom(q=8, seed=seed) if adversary == "oblivious" else ConflictSeeker(q=8, seed=seed)
        res = run_game(alg, adv, GameConfig(n=n, delta=delta, audit=True), seed=seed)
        assert res.violations == 0 and res.overflows == 0
        assert res.stats["palette_reserved"] <= 16 * delta ** ((5 - 3 * beta) / 2)
        _assert_storage_bounds(alg, res.stats)
