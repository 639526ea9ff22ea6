#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
Robust O(Δ^3)-coloring whose random seeds also fit in semi-streaming space.

Δ epochs of n edges each. For every epoch i and repetition j in [P] a 4-wise
independent h_{i,j}: V -> [ℓ^2] collects its monochromatic edges into D_{i,j}
until that set would pass 7n/Δ, at which point it is invalidated for good.
A query in epoch curr takes the first live D_{curr,j}, greedily colors
D_{curr,j} ∪ B with at most Δ+1 colors and pairs that color with h_{curr,j}.
"""

from __future__ import annotations
import math
from dataclasses import dataclass

import numpy as np

from .graph_core import AdjacencyGraph, Edge, canonical_edge, greedy_color
from .hashing import FourIndepBank
from .stream_engine import COUNTERS, EDGES, HASH, SpaceMeter
from .utils import ConfigError, InputError, QueryFail, TheoryViolation, get_logger, log2n

log = get_logger("lowrand")

# state-bit budget multiplier for n log^2 n + Δ log^2 n
AUDIT_BUDGET = 150


class _Invalidated:
    __slots__ = ()

    def __repr__(self) -> str:
        return "INVALIDATED"


INVALIDATED = _Invalidated()


@dataclass(frozen=True)
class LowRandConfig:
    n: int
    delta: int
    seed: int = 0
    audit: bool = False

    def __post_init__(self):
        if self.n < 1:
            raise ConfigError(f"n must be >= 1, got {self.n}")
        if self.delta < 1:
            raise ConfigError(f"Δ must be >= 1, got {self.delta}")

    @property
    def ell(self) -> int:
        """Largest power of two <= Δ."""
        return 1 << (self.delta.bit_length() - 1)

    @property
    def repetitions(self) -> int:
        return math.ceil(10 * log2n(self.n))

    @property
    def out_bits(self) -> int:
        return 2 * (self.ell.bit_length() - 1)

    @property
    def width(self) -> int:
        return max(1, math.ceil(math.log2(max(self.n, self.ell ** 2, 2))))

    @property
    def d_cap_floor(self) -> int:
        """Largest size a set can ever reach: floor(7n/Δ) + 1."""
        return 7 * self.n // self.delta + 1

    @property
    def color_space(self) -> int:
        return (self.delta + 1) * self.ell ** 2


@dataclass
class RandomnessAudit:
    hash_count: int
    width: int
    repetitions: int
    ell: int
    seed_bits: int
    stored_d_edges: int
    max_d_size: int
    live_sets: int
    invalidated_sets: int
    state_bits: int
    worst_case_bits: int
    budget_bits: int


class LowRandColorer:
    """process(u, v) per inserted edge; query() returns color χ*ℓ^2 + h(y) per vertex."""

    name = "lowrand"

    def __init__(self, config: LowRandConfig, meter: SpaceMeter | None = None):
        self.config = config
        self.meter = meter or SpaceMeter()
        self.n = config.n
        self.delta = config.delta
        self.P = config.repetitions
        rng = np.random.default_rng(config.seed)
        self.bank = FourIndepBank.sample(self.delta * self.P, config.width, config.out_bits, rng)
        self.meter.charge(HASH, 4 * len(self.bank))
        # flat slot (i-1)*P + (j-1) holds D_{i,j}
        self.D: list[set[Edge] | _Invalidated] = [set() for _ in range(self.delta * self.P)]
        self.B: list[Edge] = []
        self.curr = 1
        self.time = 0
        self.d = np.zeros(self.n, dtype=np.int64)
        self.meter.charge(COUNTERS, self.n)
        self.max_d_size = 0
        self.invalidations = 0
        self.query_fails = 0
        self._read_epochs: set[int] = set()
        log.info(f"n={self.n} Δ={self.delta} ℓ={config.ell} P={self.P} w={config.width} "
                 f"cap=7n/Δ={7 * self.n / self.delta:.1f} colors={config.color_space}")

    def process(self, u: int, v: int) -> None:
        u, v = canonical_edge(int(u), int(v))
        if not (0 <= u and v < self.n):
            raise InputError(f"edge {{{u},{v}}} has an endpoint outside [0, {self.n})")
        if self.d[u] >= self.delta or self.d[v] >= self.delta:
            raise InputError(f"edge {{{u},{v}}} exceeds the degree cap Δ={self.delta}")
        self.time += 1
        self.d[u] += 1
        self.d[v] += 1
        if len(self.B) == self.n:
            self.meter.charge(EDGES, -2 * len(self.B))
            self.B = []
            self.curr += 1
            if self.curr > self.delta:
                raise InputError(f"stream outgrew {self.delta} epochs of {self.n} edges")
        self.B.append((u, v))
        self.meter.charge(EDGES, 2)

        start = self.curr * self.P
        if start >= len(self.bank):
            return
        hu = self.bank.at(u, start)
        hv = self.bank.at(v, start)
        for slot in (np.flatnonzero(hu == hv) + start).tolist():
            self._record(slot, (u, v))

    def _record(self, slot: int, e: Edge) -> None:
        epoch = slot // self.P + 1
        if epoch <= self.curr or epoch in self._read_epochs:
            raise TheoryViolation(f"D set of epoch {epoch} written during epoch {self.curr}")
        D = self.D[slot]
        if D is INVALIDATED:
            return
        if len(D) * self.delta < 7 * self.n:
            D.add(e)
            self.meter.charge(EDGES, 2)
            self.max_d_size = max(self.max_d_size, len(D))
            if len(D) > self.config.d_cap_floor:
                raise TheoryViolation(f"|D|={len(D)} passed floor(7n/Δ)+1={self.config.d_cap_floor}")
        else:
            self.meter.charge(EDGES, -2 * len(D))
            self.D[slot] = INVALIDATED
            self.invalidations += 1
            log.debug(f"invalidate i={epoch} j={slot % self.P + 1} t={self.time}")

    def live_index(self) -> int | None:
        """Smallest j (0-based) with D_{curr,j} live."""
        base = (self.curr - 1) * self.P
        for j in range(self.P):
            if self.D[base + j] is not INVALIDATED:
                return j
        return None

    def query(self) -> list[int]:
        j = self.live_index()
        if j is None:
            self.query_fails += 1
            raise QueryFail(f"every D_{{{self.curr},j}} is invalidated (t={self.time})")
        slot = (self.curr - 1) * self.P + j
        self._read_epochs.add(self.curr)
        edges = self.D[slot].union(self.B)
        chi = greedy_color(AdjacencyGraph.from_edges(self.n, edges)).chi
        first = np.asarray(chi, dtype=np.int64)
        if first.size and int(first.max()) > self.delta:
            raise TheoryViolation(f"greedy used color {int(first.max())} > Δ={self.delta}")
        second = self.bank.member(slot)(np.arange(self.n))
        log.debug(f"query t={self.time} curr={self.curr} k={j + 1} |D|={len(self.D[slot])} |B|={len(self.B)}")
        return (first * self.config.ell ** 2 + second).tolist()

    def split_color(self, color: int) -> tuple[int, int]:
        """Encoded color -> (χ, h)."""
        return divmod(int(color), self.config.ell ** 2)

    def randomness_audit(self) -> RandomnessAudit:
        c = self.config
        L = math.ceil(log2n(self.n))
        live = [D for D in self.D if D is not INVALIDATED]
        stored = sum(len(D) for D in live)
        seed_bits = self.bank.seed_bits()
        if seed_bits != self.delta * self.P * 4 * c.width:
            raise TheoryViolation(f"seed bits {seed_bits} != Δ*P*4w")
        state_bits = seed_bits + 2 * L * (stored + len(self.B)) + self.n * L
        worst = seed_bits + 2 * L * ((7 * self.n + self.delta) * self.P + self.n) + self.n * L
        budget = AUDIT_BUDGET * (self.n + self.delta) * L * L
        if worst > budget:
            raise TheoryViolation(f"worst-case state {worst} bits exceeds {AUDIT_BUDGET}(n+Δ)log^2 n={budget}")
        return RandomnessAudit(hash_count=len(self.bank), width=c.width, repetitions=self.P, ell=c.ell,
                               seed_bits=seed_bits, stored_d_edges=stored, max_d_size=self.max_d_size,
                               live_sets=len(live), invalidated_sets=len(self.D) - len(live),
                               state_bits=state_bits, worst_case_bits=worst, budget_bits=budget)

    def stats(self) -> dict[str, int | float | bool]:
        stored = len(self.B) + sum(len(D) for D in self.D if D is not INVALIDATED)
        return {
            "stored_edges": stored,
            "epoch": self.curr,
            "palette_reserved": self.config.color_space,
            "seed_bits": self.bank.seed_bits(),
            "max_d_size": self.max_d_size,
            "invalidations": self.invalidations,
            "query_fails": self.query_fails,
        }
