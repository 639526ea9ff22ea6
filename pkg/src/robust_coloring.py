#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
Single-pass coloring that stays proper against an adaptive adversary.

State per stream (β is the space/colors tradeoff, β=0 is the base setting):
  B      buffer of the current epoch, capacity n*Δ^β
  h_i    block functions V -> [Δ^(2-2β)], one per epoch, with edge sets A_i
  g_l    block functions V -> [Δ^(3(1-β)/2)], one per level, with edge sets C_l
  d      degree counters over the whole stream
A query splits V into fast (deg_B > T) and slow vertices, colors every slow
h_curr-block on A_curr ∪ B greedily and every fast (level, g_level)-block on
C_level ∪ B by degeneracy, each block on its own reserved color range.
"""

from __future__ import annotations
import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .graph_core import (AdjacencyGraph, Edge, canonical_edge, degeneracy_plus_one_color, greedy_color)
from .hashing import KeyedBlockHash
from .stream_engine import COUNTERS, EDGES, HASH, SpaceMeter
from .utils import (ConfigError, InputError, PaletteOverflow, SoftError, TheoryViolation, ceil_pow,
                    env_float, env_int, get_logger, log2n)

log = get_logger("robust")

ROBUST_C2 = env_int("COLORSTREAM_ROBUST_C2", 5)
FALLBACK_C0 = env_float("COLORSTREAM_FALLBACK_C0", 1.0)
SOFTCAP_FACTOR = env_int("COLORSTREAM_SOFTCAP_FACTOR", 10)


@dataclass(frozen=True)
class RobustConfig:
    n: int
    delta: int
    beta: float = 0.0
    seed: int = 0
    audit: bool = False
    c2: int = ROBUST_C2
    c0: float = FALLBACK_C0

    def __post_init__(self):
        if self.n < 1:
            raise ConfigError(f"n must be >= 1, got {self.n}")
        if self.delta < 1:
            raise ConfigError(f"Δ must be >= 1, got {self.delta}")
        if not (0.0 <= self.beta <= 1.0):
            raise ConfigError(f"β must lie in [0, 1], got {self.beta}")

    @property
    def buffer_cap(self) -> int:
        return self.n * ceil_pow(self.delta, self.beta)

    @property
    def epochs(self) -> int:
        return ceil_pow(self.delta, 1 - self.beta)

    @property
    def slow_range(self) -> int:
        return ceil_pow(self.delta, 2 - 2 * self.beta)

    @property
    def fast_threshold(self) -> int:
        return ceil_pow(self.delta, (1 + self.beta) / 2)

    @property
    def levels(self) -> int:
        return ceil_pow(self.delta, (1 - self.beta) / 2)

    @property
    def fast_range(self) -> int:
        return ceil_pow(self.delta, 3 * (1 - self.beta) / 2)

    @property
    def block_capacity(self) -> int:
        """
        Local colors per block: T + c2*ceil(log2 n) + 1. No outer factor
        c1 = 3 is applied to (T + c2 log n); a block's greedy coloring needs
        at most T plus its A/C degree plus one colors.
        """
        return self.fast_threshold + self.c2 * math.ceil(log2n(self.n)) + 1

    @property
    def fallback(self) -> bool:
        return self.delta < self.c0 * log2n(self.n) ** 2


@dataclass(frozen=True)
class PaletteLayout:
    """Slow block c -> [c*cap, (c+1)*cap); fast block (l, c) after all slow ranges."""
    slow_range: int
    levels: int
    fast_range: int
    capacity: int

    @classmethod
    def for_config(cls, config: RobustConfig) -> "PaletteLayout":
        return cls(config.slow_range, config.levels, config.fast_range, config.block_capacity)

    def slow_offset(self, block) -> np.ndarray:
        return np.asarray(block, dtype=np.int64) * self.capacity

    def fast_offset(self, level, block) -> np.ndarray:
        level = np.asarray(level, dtype=np.int64)
        return (self.slow_range + (level - 1) * self.fast_range + np.asarray(block, dtype=np.int64)) * self.capacity

    @property
    def total(self) -> int:
        return (self.slow_range + self.levels * self.fast_range) * self.capacity


def palette_bound(config: RobustConfig) -> int:
    if config.fallback:
        return config.delta + 1
    return PaletteLayout.for_config(config).total


def palette_target(config: RobustConfig) -> float:
    """Δ^((5-3β)/2), the asymptotic palette size."""
    return float(config.delta) ** ((5 - 3 * config.beta) / 2)


def _block_local_colors(n: int, edges: Iterable[Edge], by_degeneracy: bool) -> list[int | None]:
    """Local colors of every vertex touched by `edges`, on the union of the (disjoint) blocks."""
    graph = AdjacencyGraph.from_edges(n, edges)
    coloring = degeneracy_plus_one_color(graph) if by_degeneracy else greedy_color(graph)
    return coloring.chi


@dataclass
class QueryReport:
    curr: int
    fast: int
    slow_edges: int
    fast_edges: int
    max_local_slow: int
    max_local_fast: int
    max_out_degree: int | None = None


class RobustColorer:
    """process(u, v) per inserted edge; query() returns a color for every vertex."""

    name = "robust"

    def __init__(self, config: RobustConfig, meter: SpaceMeter | None = None):
        self.config = config
        self.meter = meter or SpaceMeter()
        self.n = config.n
        self.delta = config.delta
        self.layout = PaletteLayout.for_config(config)
        self.time = 0
        self.curr = 1
        self.d = np.zeros(self.n, dtype=np.int64)
        self.deg_b = np.zeros(self.n, dtype=np.int64)
        self.B: list[Edge] = []
        self.meter.charge(COUNTERS, 2 * self.n)
        self.reports: list[QueryReport] = []
        self.soft_cap_exceeded = False
        self.soft_errors: list[SoftError] = []
        self.peak_stored = 0
        if config.fallback:
            self.graph_edges: list[Edge] = []
            log.info(f"fallback n={self.n} Δ={self.delta} c0={config.c0} (Δ < c0*log^2 n)")
            return
        rng = np.random.default_rng(config.seed)
        self._h = KeyedBlockHash(config.epochs, config.slow_range, rng)
        self._g = KeyedBlockHash(config.levels, config.fast_range, rng)
        # (n, count) so a vertex's values across all functions are one row
        self.h = self._h.table(self.n).T.copy()
        self.g = self._g.table(self.n).T.copy()
        self.meter.charge(HASH, config.epochs + config.levels)
        self.A: list[set[Edge]] = [set() for _ in range(config.epochs)]
        self.C: list[set[Edge]] = [set() for _ in range(config.levels)]
        self.deg_a_sum = np.zeros(self.n, dtype=np.int64)
        self.deg_c_sum = np.zeros(self.n, dtype=np.int64)
        # stream time at which d(v) last crossed into a new level
        self.level_entry = np.zeros(self.n, dtype=np.int64)
        log.info(f"n={self.n} Δ={self.delta} β={config.beta:g} buffer={config.buffer_cap} "
                 f"epochs={config.epochs} slow_range={config.slow_range} T={config.fast_threshold} "
                 f"levels={config.levels} fast_range={config.fast_range} cap={config.block_capacity}")

    # ------------------------------------------------------------ process

    def process(self, u: int, v: int) -> None:
        u, v = canonical_edge(int(u), int(v))
        if not (0 <= u and v < self.n):
            raise InputError(f"edge {{{u},{v}}} has an endpoint outside [0, {self.n})")
        if self.d[u] >= self.delta or self.d[v] >= self.delta:
            raise InputError(f"edge {{{u},{v}}} exceeds the degree cap Δ={self.delta}")
        self.time += 1
        if self.config.fallback:
            self.graph_edges.append((u, v))
            self.d[u] += 1
            self.d[v] += 1
            self.meter.charge(EDGES, 2)
            return
        if len(self.B) == self.config.buffer_cap:
            self._rollover()
        self.B.append((u, v))
        self.deg_b[u] += 1
        self.deg_b[v] += 1
        self.meter.charge(EDGES, 2)
        T = self.config.fast_threshold
        for z in (u, v):
            self.d[z] += 1
            if (self.d[z] - 1) % T == 0:
                self.level_entry[z] = self.time
        for i in np.flatnonzero(self.h[u, self.curr:] == self.h[v, self.curr:]) + self.curr:
            self.A[i].add((u, v))
            self.deg_a_sum[u] += 1
            self.deg_a_sum[v] += 1
            self.meter.charge(EDGES, 2)
        first = -(-int(max(self.d[u], self.d[v])) // T)      # C index l+1 is list slot l
        for i in np.flatnonzero(self.g[u, first:] == self.g[v, first:]) + first:
            self.C[i].add((u, v))
            self.deg_c_sum[u] += 1
            self.deg_c_sum[v] += 1
            self.meter.charge(EDGES, 2)
        stored = self.stored_edges
        self.peak_stored = max(self.peak_stored, stored)
        if not self.soft_cap_exceeded and stored > SOFTCAP_FACTOR * self.expected_storage():
            self.soft_cap_exceeded = True
            err = SoftError(f"stored {stored} edges at t={self.time}, above {SOFTCAP_FACTOR}x the expected "
                            f"{self.expected_storage():.0f}")
            self.soft_errors.append(err)
            log.warning(str(err))

    def _rollover(self) -> None:
        self.meter.charge(EDGES, -2 * len(self.B))
        self.B = []
        self.deg_b[:] = 0
        self.curr += 1
        if self.curr > self.config.epochs:
            raise InputError(f"stream outgrew {self.config.epochs} epochs of {self.config.buffer_cap} edges")
        log.debug(f"rollover curr={self.curr} t={self.time}")

    @property
    def stored_edges(self) -> int:
        if self.config.fallback:
            return len(self.graph_edges)
        return len(self.B) + sum(len(a) for a in self.A) + sum(len(c) for c in self.C)

    def expected_storage(self) -> float:
        c = self.config
        return c.buffer_cap + self.time * (c.epochs / c.slow_range + c.levels / c.fast_range)

    # ------------------------------------------------------------ query

    def _blocks(self):
        """(fast mask, level per vertex, slow block per vertex, fast block per vertex)."""
        T = self.config.fast_threshold
        fast = self.deg_b > T
        level = -(-self.d // T)
        slow_block = self.h[:, self.curr - 1]
        lvl_idx = np.clip(level - 1, 0, self.config.levels - 1)
        fast_block = self.g[np.arange(self.n), lvl_idx]
        return fast, level, slow_block, fast_block

    def _slow_edges(self, fast, slow_block) -> list[Edge]:
        out = []
        for u, v in self.A[self.curr - 1].union(self.B):
            if not fast[u] and not fast[v] and slow_block[u] == slow_block[v]:
                out.append((u, v))
        return out

    def _fast_edges(self, fast, level, fast_block) -> list[Edge]:
        out = []
        by_level: dict[int, set[Edge]] = {}
        for u, v in self.B:
            if fast[u] and fast[v] and level[u] == level[v] and fast_block[u] == fast_block[v]:
                by_level.setdefault(int(level[u]), set()).add((u, v))
        for l in range(1, self.config.levels + 1):
            rel = by_level.get(l, set())
            for u, v in self.C[l - 1]:
                if fast[u] and fast[v] and level[u] == l == level[v] and fast_block[u] == fast_block[v]:
                    rel.add((u, v))
            out.extend(rel)
        return out

    def query(self) -> list[int]:
        if self.config.fallback:
            graph = AdjacencyGraph.from_edges(self.n, self.graph_edges)
            return [int(c) for c in greedy_color(graph).chi]
        fast, level, slow_block, fast_block = self._blocks()
        slow_edges = self._slow_edges(fast, slow_block)
        fast_edges = self._fast_edges(fast, level, fast_block)
        self.meter.charge(EDGES, 2 * (len(slow_edges) + len(fast_edges)))
        slow_local = _block_local_colors(self.n, slow_edges, by_degeneracy=False)
        fast_local = _block_local_colors(self.n, fast_edges, by_degeneracy=True)
        self.meter.charge(EDGES, -2 * (len(slow_edges) + len(fast_edges)))

        local = np.asarray([fast_local[x] if fast[x] else slow_local[x] for x in range(self.n)], dtype=np.int64)
        cap = self.layout.capacity
        if local.size and int(local.max()) >= cap:
            x = int(np.argmax(local))
            zone = "fast" if fast[x] else "slow"
            raise PaletteOverflow(f"{zone} block of vertex {x} needs {int(local[x]) + 1} colors > capacity {cap}")
        colors = np.where(fast, self.layout.fast_offset(level, fast_block), self.layout.slow_offset(slow_block)) + local

        report = QueryReport(curr=self.curr, fast=int(fast.sum()), slow_edges=len(slow_edges),
                             fast_edges=len(fast_edges),
                             max_local_slow=int(local[~fast].max(initial=-1)) + 1,
                             max_local_fast=int(local[fast].max(initial=-1)) + 1)
        if self.config.audit:
            report.max_out_degree = self.orientation_check()
        self.reports.append(report)
        log.debug(f"query t={self.time} curr={self.curr} fast={report.fast} slow_edges={report.slow_edges} "
                  f"fast_edges={report.fast_edges} local=({report.max_local_slow},{report.max_local_fast})")
        return colors.tolist()

    # ------------------------------------------------------------ audits

    def coverage_check(self, edges: Iterable[Sequence[int]]) -> None:
        """Every edge of the full graph inside a slow or fast block is stored where the query looks."""
        if self.config.fallback:
            return
        fast, level, slow_block, fast_block = self._blocks()
        B = set(self.B)
        A = self.A[self.curr - 1]
        for raw in edges:
            e = canonical_edge(int(raw[0]), int(raw[1]))
            u, v = e
            if fast[u] != fast[v]:
                continue
            if not fast[u]:
                if slow_block[u] == slow_block[v] and e not in A and e not in B:
                    raise TheoryViolation(f"slow intra-block edge {e} missing from A_curr ∪ B")
            elif level[u] == level[v] and fast_block[u] == fast_block[v]:
                if e not in self.C[int(level[u]) - 1] and e not in B:
                    raise TheoryViolation(f"fast intra-block edge {e} missing from C_{int(level[u])} ∪ B")

    def orientation_check(self) -> int:
        """
        Orient the edges of B \\ C_l inside each fast block (l, c) toward the
        endpoint that entered level l later (ties: larger id). Returns the
        largest out-degree, which must not exceed T.
        """
        if self.config.fallback:
            return 0
        T = self.config.fast_threshold
        fast, level, _, fast_block = self._blocks()
        out = np.zeros(self.n, dtype=np.int64)
        for u, v in self.B:
            if not (fast[u] and fast[v] and level[u] == level[v] and fast_block[u] == fast_block[v]):
                continue
            if (u, v) in self.C[int(level[u]) - 1]:
                continue
            src = u if (self.level_entry[u], u) < (self.level_entry[v], v) else v
            out[src] += 1
        worst = int(out.max(initial=0))
        if worst > T:
            raise TheoryViolation(f"fast block orientation has out-degree {worst} > T={T}")
        return worst

    def stats(self) -> dict[str, int | float | bool]:
        c = self.config
        out: dict[str, int | float | bool] = {
            "fallback": c.fallback,
            "stored_edges": self.stored_edges,
            "peak_stored_edges": self.peak_stored if not c.fallback else len(self.graph_edges),
            "epoch": self.curr,
            "palette_reserved": palette_bound(c),
            "soft_cap_exceeded": self.soft_cap_exceeded,
        }
        if not c.fallback:
            out["max_deg_A_sum"] = int(self.deg_a_sum.max(initial=0))
            out["max_deg_C_sum"] = int(self.deg_c_sum.max(initial=0))
            out["seed_bits"] = self._h.seed_bits() + self._g.seed_bits()
            out["table_bits"] = self.n * (c.epochs * math.ceil(math.log2(max(c.slow_range, 2)))
                                          + c.levels * math.ceil(math.log2(max(c.fast_range, 2))))
        return out
