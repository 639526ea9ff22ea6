#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
Deterministic multipass (Δ+1)-coloring.

Colors are b-bit values in [0, Δ] (b = ceil(log2(Δ+1))). Each uncolored vertex
x carries a proposed subcube P_x = {c : c mod 2^f == pattern_x}; a stage fixes
the next k bits of every P_x at once, with the choice of bits derived from a
Carter-Wegman hash h selected by potential minimisation:

  pass 1  slack counters used_{x,j}, conflict degrees, current potential
  pass 2  part sums  sum_b Phi(h_{a,b})  for every a       (p accumulators)
  pass 3  Phi(h_{a*,b}) for every b                        (p accumulators)

An epoch runs ceil(b/k) stages, one settling pass (collect conflicting edges F,
commit an independent set of (U, F)), and shrinks U to at most 2/3 of its size.
Epochs repeat while |U| > n/Δ; one collection pass and greedy finish the job.

The selection machinery (GwSampler, select_hash, settle_epoch, EdgePasses) is
shared with the list colorer.
"""

from __future__ import annotations
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Iterable, Iterator, Sequence

import numpy as np

from .graph_core import (AdjacencyGraph, PartialColoring, UNCOLORED, canonical_edge,
                         find_independent_set, greedy_color, prime_in_range)
from .hashing import CWHashFamily
from .stream_engine import (ACCUMULATORS, COUNTERS, EDGES, HASH, STATE, EdgeToken,
                            MultiPassSource, SpaceMeter, StreamToken)
from .utils import (AccountingError, ConfigError, InputError, TheoryViolation,
                    get_logger, log2n)

log = get_logger("determ")

# fraction of U that may survive an epoch
ALPHA = Fraction(2, 3)

_REL_TOL = 1e-9


def color_bits(delta: int) -> int:
    """ceil(log2(Δ+1))."""
    return max(delta, 0).bit_length()


def epoch_k(n: int, u_size: int) -> int:
    """1 + floor(log2(n/|U|)), so that |U| * 2^k <= 2n."""
    return (n // u_size).bit_length()


def stage_count(b: int, k: int) -> int:
    return -(-b // k)


def stage_width(b: int, k: int, stage: int) -> int:
    stages = stage_count(b, k)
    if not (1 <= stage <= stages):
        raise ConfigError(f"stage {stage} outside [1, {stages}]")
    return k if stage < stages else b - k * (stages - 1)


def hash_prime(n: int) -> int:
    lg = log2n(n)
    return prime_in_range(max(2, math.ceil(8 * n * lg)), math.floor(16 * n * lg))


# ---------------------------------------------------------------- subcubes

@dataclass(frozen=True)
class Subcube:
    """Colors whose low `fixed_count` bits equal `pattern`."""
    fixed_count: int
    pattern: int

    def contains(self, color: int) -> bool:
        return color & ((1 << self.fixed_count) - 1) == self.pattern

    def size(self, b: int) -> int:
        return 1 << (b - self.fixed_count)

    def members(self, b: int) -> list[int]:
        step = 1 << self.fixed_count
        return list(range(self.pattern, 1 << b, step))

    def child(self, width: int, j: int) -> "Subcube":
        return Subcube(self.fixed_count + width, self.pattern + (j << self.fixed_count))


def subcube_partition(P: Subcube, stage: int, k: int, b: int) -> list[Subcube]:
    if P.fixed_count != (stage - 1) * k:
        raise ConfigError(f"stage {stage} expects {(stage - 1) * k} fixed bits, subcube has {P.fixed_count}")
    width = stage_width(b, k, stage)
    return [P.child(width, j) for j in range(1 << width)]


def avail_count(delta: int, residue: int, modulus: int) -> int:
    """|{c in [0, Δ] : c ≡ residue (mod modulus)}| for 0 <= residue < modulus."""
    return 0 if residue > delta else (delta - residue) // modulus + 1


def slack_wrt(x: int, T: Iterable[int], coloring: PartialColoring,
              neighbors: Sequence[int], L_x: Iterable[int]) -> int:
    """max(0, |T ∩ L_x| - #colored neighbours of x whose color lies in T)."""
    T = set(T)
    used = sum(1 for y in neighbors if coloring.chi[y] is not UNCOLORED and coloring.chi[y] in T)
    return max(0, len(T & set(L_x)) - used)


# ---------------------------------------------------------------- state

@dataclass
class PCCState:
    """
    Partially committed coloring: proper partial coloring, proposed subcubes of
    equal fixed_count for every x in U, and current slacks s_x.
    """
    coloring: PartialColoring
    U: list[int]
    row: np.ndarray          # (n,) position of x in U, -1 if colored
    pattern: np.ndarray      # (|U|,)
    slack: np.ndarray        # (|U|,)
    fixed: int
    b: int
    k: int
    delta: int
    stage: int = 0
    last_phi: float | None = None

    @classmethod
    def start(cls, coloring: PartialColoring, b: int, k: int, delta: int) -> "PCCState":
        U = sorted(coloring.uncolored)
        row = np.full(coloring.n, -1, dtype=np.int64)
        row[U] = np.arange(len(U))
        return cls(coloring=coloring, U=U, row=row,
                   pattern=np.zeros(len(U), dtype=np.int64),
                   slack=np.full(len(U), delta + 1, dtype=np.int64),
                   fixed=0, b=b, k=k, delta=delta)

    def subcube(self, x: int) -> Subcube:
        return Subcube(self.fixed, int(self.pattern[self.row[x]]))

    def cell(self) -> list[int]:
        """Per-vertex subcube id (pattern) or -1; equal ids mean equal P_x."""
        out = [-1] * self.coloring.n
        for i, x in enumerate(self.U):
            out[x] = int(self.pattern[i])
        return out


@dataclass
class SlackCounters:
    used: np.ndarray    # (|U|, 2^w)
    avail: np.ndarray   # (|U|, 2^w)
    dconf: np.ndarray   # (|U|,)

    def children_slack(self) -> np.ndarray:
        return np.maximum(0, self.avail - self.used)

    def current_slack(self) -> np.ndarray:
        return np.maximum(0, self.avail.sum(axis=1) - self.used.sum(axis=1))


def potential(pcc: PCCState, edges: Iterable[Sequence[int]]) -> float:
    """Edge-sum form: sum over edges inside U with P_x = P_y of 1/s_x + 1/s_y."""
    phi = 0.0
    for raw in edges:
        u, v = int(raw[0]), int(raw[1])
        ru, rv = pcc.row[u], pcc.row[v]
        if ru < 0 or rv < 0 or pcc.pattern[ru] != pcc.pattern[rv]:
            continue
        su, sv = pcc.slack[ru], pcc.slack[rv]
        if su == 0 or sv == 0:
            raise TheoryViolation(f"zero slack on conflicting edge {{{u},{v}}}")
        phi += 1.0 / su + 1.0 / sv
    return phi


def potential_vertex_form(pcc: PCCState, edges: Iterable[Sequence[int]]) -> float:
    """sum over x in U of dconf(x)/s_x."""
    dconf = np.zeros(len(pcc.U), dtype=np.int64)
    for raw in edges:
        ru, rv = pcc.row[int(raw[0])], pcc.row[int(raw[1])]
        if ru >= 0 and rv >= 0 and pcc.pattern[ru] == pcc.pattern[rv]:
            dconf[ru] += 1
            dconf[rv] += 1
    if np.any((dconf > 0) & (pcc.slack == 0)):
        raise TheoryViolation("zero slack on a vertex with conflicting neighbours")
    nz = dconf > 0
    return float((dconf[nz] / pcc.slack[nz]).sum())


def compute_weights(children_slack: np.ndarray) -> np.ndarray:
    """Row-normalised child slacks."""
    children_slack = np.asarray(children_slack, dtype=np.float64)
    if children_slack.ndim == 1:
        children_slack = children_slack[None, :]
    totals = children_slack.sum(axis=1)
    if np.any(totals <= 0):
        bad = int(np.flatnonzero(totals <= 0)[0])
        raise TheoryViolation(f"all child slacks are zero for row {bad}")
    return children_slack / totals[:, None]


# ---------------------------------------------------------------- g_w

@dataclass
class GwSampler:
    """
    Per-row consecutive intervals of [0, p), one per label in ascending order.
    Row i maps r in [0, p) to the label whose interval holds r.
    """
    p: int
    labels: np.ndarray     # (R, J), -1 padding
    slacks: np.ndarray     # (R, J) float
    starts: np.ndarray     # (R, J)
    lengths: np.ndarray    # (R, J)
    uniform: bool
    _index: list[dict[int, int]] | None = field(default=None, repr=False)

    @property
    def rows(self) -> int:
        return self.labels.shape[0]

    def thresholds(self, row: int) -> np.ndarray:
        return self.starts[row] + self.lengths[row]

    def lookup(self, rows: np.ndarray, r: np.ndarray) -> np.ndarray:
        """Column index chosen for each (row, r)."""
        ends = self.starts[rows] + self.lengths[rows]
        return (ends <= np.asarray(r)[:, None]).sum(axis=1)

    def pair_terms(self, rx: np.ndarray, ry: np.ndarray):
        """
        For edge rows (rx[e], ry[e]) and every label both endpoints can draw:
        (edge index, A, La, B, Lb, cost) with cost = 1/s_x + 1/s_y.
        """
        if self.uniform:
            Lx, Ly = self.lengths[rx], self.lengths[ry]
            e, j = np.nonzero((Lx > 0) & (Ly > 0))
            A, La = self.starts[rx[e], j], Lx[e, j]
            B, Lb = self.starts[ry[e], j], Ly[e, j]
            c = 1.0 / self.slacks[rx[e], j] + 1.0 / self.slacks[ry[e], j]
            return e, A, La, B, Lb, c
        if self._index is None:
            self._index = [
                {int(lab): col for col, lab in enumerate(self.labels[i]) if lab >= 0 and self.lengths[i, col] > 0}
                for i in range(self.rows)
            ]
        es, cx, cy = [], [], []
        for e, (i, k) in enumerate(zip(rx.tolist(), ry.tolist())):
            di, dk = self._index[i], self._index[k]
            if len(dk) < len(di):
                for lab, col in dk.items():
                    if lab in di:
                        es.append(e); cx.append(di[lab]); cy.append(col)
            else:
                for lab, col in di.items():
                    if lab in dk:
                        es.append(e); cx.append(col); cy.append(dk[lab])
        e = np.asarray(es, dtype=np.int64)
        cx = np.asarray(cx, dtype=np.int64)
        cy = np.asarray(cy, dtype=np.int64)
        ex, ey = rx[e], ry[e]
        c = 1.0 / self.slacks[ex, cx] + 1.0 / self.slacks[ey, cy]
        return e, self.starts[ex, cx], self.lengths[ex, cx], self.starts[ey, cy], self.lengths[ey, cy], c


def build_gw(weights: np.ndarray, p: int, n: int, inflation: float | None = None,
             labels: np.ndarray | None = None, slacks: np.ndarray | None = None) -> GwSampler:
    """
    Allocate floor(p * w * (1 + 1/(8 log n))) consecutive entries per label in
    ascending label order, truncated once p entries are filled.
    """
    weights = np.asarray(weights, dtype=np.float64)
    if weights.ndim == 1:
        weights = weights[None, :]
    if inflation is None:
        inflation = 1.0 + 1.0 / (8.0 * log2n(n))
    alloc = np.floor(p * weights * inflation + 1e-9).astype(np.int64)
    alloc[weights <= 0] = 0
    ends = np.minimum(np.cumsum(alloc, axis=1), p)
    starts = np.concatenate([np.zeros((weights.shape[0], 1), dtype=np.int64), ends[:, :-1]], axis=1)
    lengths = ends - starts
    short = ends[:, -1] < p if weights.shape[1] else np.ones(weights.shape[0], dtype=bool)
    if np.any(short):
        row = int(np.flatnonzero(short)[0])
        raise ConfigError(f"g_w covers only {int(ends[row, -1])} of p={p} entries for row {row}; p too small")
    uniform = labels is None
    if labels is None:
        labels = np.broadcast_to(np.arange(weights.shape[1], dtype=np.int64), weights.shape).copy()
    if slacks is None:
        slacks = weights
    return GwSampler(p=p, labels=np.asarray(labels, dtype=np.int64),
                     slacks=np.asarray(slacks, dtype=np.float64),
                     starts=starts, lengths=lengths, uniform=uniform)


# ---------------------------------------------------------------- passes

class EdgePasses:
    """
    Pass access for one run. The first pass also enforces the degree cap Δ, so
    a bad stream fails before anything is committed.
    """

    def __init__(self, source: MultiPassSource, delta: int, meter: SpaceMeter, buffer_edges: int | None = None):
        self.source = source
        self.n = source.n
        self.delta = delta
        self.meter = meter
        self.buffer_edges = buffer_edges or max(1, self.n * math.ceil(log2n(self.n)))
        self._checked = False

    def tokens(self) -> Iterator[StreamToken]:
        deg = None if self._checked else [0] * self.n
        for tok in self.source.open_pass():
            if deg is not None and isinstance(tok, EdgeToken):
                for z in (tok.u, tok.v):
                    deg[z] += 1
                    if deg[z] > self.delta:
                        raise InputError(f"vertex {z} exceeds the degree cap Δ={self.delta}")
            yield tok
        self._checked = True

    def edges(self) -> Iterator[tuple[int, int]]:
        for tok in self.tokens():
            if isinstance(tok, EdgeToken):
                yield canonical_edge(tok.u, tok.v)

    def buffered(self, cell: Sequence[int], flush: Callable[[np.ndarray, np.ndarray], None]) -> None:
        """Stream the edges with cell[u] == cell[v] >= 0 through `flush` in bounded chunks."""
        us: list[int] = []
        vs: list[int] = []

        def drain():
            if not us:
                return
            self.meter.charge(EDGES, 2 * len(us))
            flush(np.asarray(us, dtype=np.int64), np.asarray(vs, dtype=np.int64))
            self.meter.charge(EDGES, -2 * len(us))
            us.clear()
            vs.clear()

        for u, v in self.edges():
            cu = cell[u]
            if cu >= 0 and cu == cell[v]:
                us.append(u)
                vs.append(v)
                if len(us) >= self.buffer_edges:
                    drain()
        drain()


@dataclass
class HashChoice:
    a: int
    b: int
    phi: float
    mean_phi: float
    part_sum: float


def _part_sums(passes: EdgePasses, cell: Sequence[int], row: np.ndarray, sampler: GwSampler) -> np.ndarray:
    """S[a] = sum over b of Phi(h_{a,b}); per edge the collision count depends on a only via a*(y-x)."""
    p = sampler.p
    S = np.zeros(p, dtype=np.float64)
    a_range = np.arange(p, dtype=np.int64)
    passes.meter.charge(ACCUMULATORS, 3 * p + 2)

    def flush(us: np.ndarray, vs: np.ndarray) -> None:
        e, A, La, B, Lb, c = sampler.pair_terms(row[us], row[vs])
        if len(e) == 0:
            return
        d = (vs - us)[e]
        base = B - A + p
        gap = Lb - La
        lo1 = base - La + 1
        hi1 = base + np.minimum(0, gap) + 1
        lo2 = base + np.maximum(0, gap) + 1
        hi2 = base + Lb + 1
        order = np.argsort(d, kind="stable")
        cuts = np.flatnonzero(np.diff(d[order])) + 1
        for grp in np.split(order, cuts):
            idx = np.concatenate([lo1[grp], hi1[grp], lo2[grp], hi2[grp]])
            w = np.concatenate([c[grp], -c[grp], -c[grp], c[grp]])
            tau = np.cumsum(np.cumsum(np.bincount(idx, weights=w, minlength=2 * p + 2)))
            G = tau[p:2 * p] + tau[:p]
            S[:] += G[(a_range * int(d[grp[0]])) % p]

    passes.buffered(cell, flush)
    passes.meter.charge(ACCUMULATORS, -(2 * p + 2))
    return S


def _offset_potentials(passes: EdgePasses, cell: Sequence[int], row: np.ndarray, sampler: GwSampler, a: int) -> np.ndarray:
    """Phi(h_{a,b}) for every b."""
    p = sampler.p
    diff = np.zeros(2 * p + 1, dtype=np.float64)
    passes.meter.charge(ACCUMULATORS, 2 * p + 1)

    def flush(us: np.ndarray, vs: np.ndarray) -> None:
        e, A, La, B, Lb, c = sampler.pair_terms(row[us], row[vs])
        if len(e) == 0:
            return
        s1 = (A - a * us[e]) % p
        s2 = (B - a * vs[e]) % p
        for shift in (-p, 0, p):
            lo = np.maximum(s1, s2 + shift)
            hi = np.minimum(s1 + La, s2 + shift + Lb)
            ok = hi > lo
            diff[:] += np.bincount(lo[ok], weights=c[ok], minlength=2 * p + 1)
            diff[:] -= np.bincount(hi[ok], weights=c[ok], minlength=2 * p + 1)

    passes.buffered(cell, flush)
    cs = np.cumsum(diff)[:2 * p]
    passes.meter.charge(ACCUMULATORS, -(2 * p + 1))
    return cs[:p] + cs[p:]


def select_hash(passes: EdgePasses, cell: Sequence[int], row: np.ndarray, sampler: GwSampler) -> HashChoice:
    """
    Two passes: pick the part (coefficient a) with the smallest summed
    potential, then the offset b minimising Phi inside it. Ties: lowest index.
    """
    p = sampler.p
    S = _part_sums(passes, cell, row, sampler)
    a = int(np.argmin(S))
    phis = _offset_potentials(passes, cell, row, sampler, a)
    b = int(np.argmin(phis))
    total = float(phis.sum())
    if abs(total - S[a]) > 1e-6 * max(1.0, abs(S[a])):
        raise TheoryViolation(f"part sum {S[a]:.9g} disagrees with its offset scan {total:.9g}")
    mean_phi = float(S.sum()) / (p * p)
    chosen = float(phis[b])
    if chosen > mean_phi * (1 + _REL_TOL) + 1e-12:
        raise TheoryViolation(f"selected Phi={chosen:.9g} above family mean {mean_phi:.9g}")
    passes.meter.charge(ACCUMULATORS, -p)
    return HashChoice(a=a, b=b, phi=chosen, mean_phi=mean_phi, part_sum=float(S[a]))


def settle_epoch(passes: EdgePasses, coloring: PartialColoring, U: Sequence[int],
                 row: np.ndarray, proposed: Sequence[int]) -> tuple[int, int]:
    """
    One pass: collect F (edges of U with equal proposals) and confirm no colored
    neighbour already holds x's proposal. Then commit an independent set of
    (U, F). Returns (|F|, |I|).
    """
    proposed = [int(c) for c in proposed]
    F: list[tuple[int, int]] = []
    for u, v in passes.edges():
        ru, rv = row[u], row[v]
        if ru >= 0 and rv >= 0:
            if proposed[ru] == proposed[rv]:
                F.append((int(ru), int(rv)))
                if len(F) > len(U):
                    raise TheoryViolation(f"|F| exceeds |U|={len(U)}")
        elif ru >= 0 or rv >= 0:
            x, r, y = (u, ru, v) if ru >= 0 else (v, rv, u)
            if coloring.chi[y] == proposed[r]:
                raise TheoryViolation(f"proposal {proposed[r]} of {x} already held by colored neighbour {y}")
    passes.meter.charge(EDGES, 2 * len(F))
    independent = find_independent_set(AdjacencyGraph.from_edges(len(U), F))
    for r in independent:
        coloring.assign(U[r], proposed[r])
    passes.meter.charge(EDGES, -2 * len(F))
    survivors = len(U) - len(independent)
    if 3 * survivors > 2 * len(U):
        raise TheoryViolation(f"epoch left {survivors} of {len(U)} vertices uncolored")
    return len(F), len(independent)


# ---------------------------------------------------------------- stages / epochs

@dataclass
class DetermConfig:
    delta: int | None = None
    edge_buffer: int | None = None
    keep_samplers: bool = False


@dataclass
class StageTrace:
    stage: int
    width: int
    a: int
    b: int
    phi_before: float
    phi_after: float
    mean_phi: float
    counters: int
    min_slack: int
    sampler: GwSampler | None = None
    cell: list[int] | None = None


@dataclass
class EpochTrace:
    epoch: int
    u_size: int
    k: int
    stages: list[StageTrace]
    f_size: int = 0
    i_size: int = 0
    u_after: int = 0

    @property
    def phi(self) -> list[float]:
        return [self.stages[0].phi_before] + [s.phi_after for s in self.stages] if self.stages else []


def _slack_pass(passes: EdgePasses, pcc: PCCState, width: int) -> tuple[SlackCounters, float]:
    f = pcc.fixed
    low = (1 << f) - 1
    mask = (1 << width) - 1
    R = len(pcc.U)
    used = [[0] * (1 << width) for _ in range(R)]
    dconf = [0] * R
    row = pcc.row.tolist()
    pattern = pcc.pattern.tolist()
    chi = pcc.coloring.chi
    for u, v in passes.edges():
        ru, rv = row[u], row[v]
        if ru >= 0 and rv >= 0:
            if pattern[ru] == pattern[rv]:
                dconf[ru] += 1
                dconf[rv] += 1
        elif ru >= 0:
            c = chi[v]
            if c & low == pattern[ru]:
                used[ru][(c >> f) & mask] += 1
        elif rv >= 0:
            c = chi[u]
            if c & low == pattern[rv]:
                used[rv][(c >> f) & mask] += 1
    residues = pcc.pattern[:, None] + (np.arange(1 << width, dtype=np.int64)[None, :] << f)
    modulus = 1 << (f + width)
    avail = np.where(residues <= pcc.delta, (pcc.delta - residues) // modulus + 1, 0)
    counters = SlackCounters(used=np.asarray(used, dtype=np.int64).reshape(R, 1 << width),
                             avail=avail, dconf=np.asarray(dconf, dtype=np.int64))
    s = counters.current_slack()
    conflicted = counters.dconf > 0
    if np.any(conflicted & (s == 0)):
        raise TheoryViolation("slack dropped to zero on a conflicting vertex")
    phi = float((counters.dconf[conflicted] / s[conflicted]).sum())
    return counters, phi


def run_stage(pcc: PCCState, passes: EdgePasses, p: int, keep_sampler: bool = False) -> StageTrace:
    """Passes 1-3 of one stage; every P_x gains `width` fixed bits."""
    stage = pcc.stage + 1
    width = stage_width(pcc.b, pcc.k, stage)
    n = pcc.coloring.n
    meter = passes.meter
    counters, phi_before = _slack_pass(passes, pcc, width)
    s_now = counters.current_slack()
    if stage > 1 and np.any(s_now != pcc.slack):
        raise TheoryViolation("pass-1 slack disagrees with the slack carried from the last stage")
    pcc.slack = s_now
    if pcc.last_phi is not None and abs(phi_before - pcc.last_phi) > 1e-6 * max(1.0, pcc.last_phi):
        raise TheoryViolation(f"vertex-sum Phi {phi_before:.9g} != edge-sum Phi {pcc.last_phi:.9g}")

    n_counters = len(pcc.U) << width
    if n_counters > 2 * n:
        raise AccountingError(f"slack counters {n_counters} exceed 2n={2 * n}")
    meter.charge(COUNTERS, n_counters)
    children = counters.children_slack()
    sampler = build_gw(compute_weights(children), p, n, slacks=children)
    meter.charge(HASH, 2 * n_counters + 2)

    cell = pcc.cell()
    choice = select_hash(passes, cell, pcc.row, sampler)
    eps = 1.0 / (8.0 * log2n(n))
    if choice.mean_phi > (1 + eps) ** 2 * phi_before * (1 + _REL_TOL) + 1e-12:
        raise TheoryViolation(f"family mean {choice.mean_phi:.9g} exceeds (1+eps)^2 * Phi={phi_before:.9g}")

    U = np.asarray(pcc.U, dtype=np.int64)
    rows = np.arange(len(U))
    r = CWHashFamily(p).evaluate(choice.a, choice.b, U)
    cols = sampler.lookup(rows, r)
    j = sampler.labels[rows, cols]
    pcc.pattern = pcc.pattern + (j << pcc.fixed)
    pcc.slack = children[rows, cols]
    pcc.fixed += width
    pcc.stage = stage
    pcc.last_phi = choice.phi
    if np.any(pcc.slack < 1):
        raise TheoryViolation("a vertex was steered into a child with zero slack")

    meter.release_all(COUNTERS)
    meter.release_all(HASH)
    trace = StageTrace(stage=stage, width=width, a=choice.a, b=choice.b,
                       phi_before=phi_before, phi_after=choice.phi, mean_phi=choice.mean_phi,
                       counters=n_counters, min_slack=int(pcc.slack.min()) if len(pcc.slack) else 0,
                       sampler=sampler if keep_sampler else None, cell=cell if keep_sampler else None)
    log.debug(f"stage={stage} width={width} a={choice.a} b={choice.b} "
              f"phi={phi_before:.4f}->{choice.phi:.4f} mean={choice.mean_phi:.4f}")
    return trace


def run_epoch(coloring: PartialColoring, passes: EdgePasses, p: int, epoch: int = 1,
              keep_samplers: bool = False) -> EpochTrace:
    """Shrinks coloring.uncolored in place to at most 2/3 of its size."""
    n = coloring.n
    delta = passes.delta
    b = color_bits(delta)
    u_size = len(coloring.uncolored)
    k = epoch_k(n, u_size)
    pcc = PCCState.start(coloring, b, k, delta)
    passes.meter.charge(STATE, 3 * u_size)
    trace = EpochTrace(epoch=epoch, u_size=u_size, k=k, stages=[])
    for _ in range(stage_count(b, k)):
        st = run_stage(pcc, passes, p, keep_sampler=keep_samplers)
        if not trace.stages and st.phi_before > u_size * (1 + _REL_TOL):
            raise TheoryViolation(f"initial Phi={st.phi_before:.6g} exceeds |U|={u_size}")
        trace.stages.append(st)
    if np.any(pcc.slack != 1):
        raise TheoryViolation("slack is not 1 after the last stage")
    if np.any(pcc.pattern > delta):
        raise TheoryViolation("final proposal outside [0, Δ]")
    phi_end = pcc.last_phi or 0.0
    if phi_end > 2 * u_size * (1 + _REL_TOL):
        raise TheoryViolation(f"final Phi={phi_end:.6g} exceeds 2|U|={2 * u_size}")
    trace.f_size, trace.i_size = settle_epoch(passes, coloring, pcc.U, pcc.row, pcc.pattern.tolist())
    if abs(2 * trace.f_size - phi_end) > 1e-6 * max(1.0, phi_end):
        raise TheoryViolation(f"settling pass found |F|={trace.f_size} but final Phi={phi_end:.6g}")
    trace.u_after = len(coloring.uncolored)
    passes.meter.release_all(STATE)
    passes.meter.charge(STATE, n)
    log.info(f"epoch={epoch} |U|={u_size} k={k} stages={len(trace.stages)} "
             f"|F|={trace.f_size} |I|={trace.i_size} |U'|={trace.u_after}")
    return trace


# ---------------------------------------------------------------- run

@dataclass
class DetermResult:
    coloring: PartialColoring
    delta: int
    p: int | None
    passes: int
    discovered_delta: bool
    epochs: list[EpochTrace]
    meter: SpaceMeter
    final_uncolored: int

    @property
    def colors_used(self) -> int:
        return len(self.coloring.colors_used())


def expected_pass_count(epochs: Sequence[EpochTrace], discovered_delta: bool = False) -> int:
    return 1 + sum(3 * len(t.stages) + 1 for t in epochs) + int(discovered_delta)


def collect_and_finish(passes: EdgePasses, coloring: PartialColoring,
                       lists: dict[int, Sequence[int]] | None = None) -> int:
    """One pass storing every edge touching U, then greedy completion. Returns |U|."""
    U = set(coloring.uncolored)
    kept: list[tuple[int, int]] = []
    for u, v in passes.edges():
        if u in U or v in U:
            kept.append((u, v))
    passes.meter.charge(EDGES, 2 * len(kept))
    graph = AdjacencyGraph.from_edges(coloring.n, kept)
    done = greedy_color(graph, order=sorted(U), lists=lists, initial=coloring)
    for x in U:
        coloring.assign(x, done.chi[x])
    passes.meter.charge(EDGES, -2 * len(kept))
    return len(U)


def run(source: MultiPassSource, n: int | None = None, delta: int | None = None,
        config: DetermConfig | None = None, meter: SpaceMeter | None = None) -> DetermResult:
    """Proper coloring with palette [0, Δ] from a Δ-bounded edge stream."""
    config = config or DetermConfig()
    meter = meter or SpaceMeter()
    n = source.n if n is None else n
    if n != source.n:
        raise ConfigError(f"n={n} does not match the stream's n={source.n}")
    start_passes = source.pass_count
    delta = delta if delta is not None else config.delta
    if delta is None:
        delta = source.max_degree
    discovered = delta is None
    if discovered:
        delta = source.discover_max_degree()
    passes = EdgePasses(source, delta, meter, config.edge_buffer)
    coloring = PartialColoring.empty(n)
    meter.charge(STATE, n)
    p = hash_prime(n) if len(coloring.uncolored) * max(delta, 1) > n else None
    log.info(f"n={n} Δ={delta} b={color_bits(delta)} p={p} discovered={discovered}")

    epochs: list[EpochTrace] = []
    while len(coloring.uncolored) * max(delta, 1) > n:
        epochs.append(run_epoch(coloring, passes, p, epoch=len(epochs) + 1,
                                keep_samplers=config.keep_samplers))
    final_u = collect_and_finish(passes, coloring)

    used = source.pass_count - start_passes
    expected = expected_pass_count(epochs, discovered)
    if used != expected:
        raise AccountingError(f"used {used} passes, closed form gives {expected}")
    log.info(f"done passes={used} epochs={len(epochs)} final_greedy={final_u} "
             f"colors={len(coloring.colors_used())} peak_words={meter.peak_words}")
    return DetermResult(coloring=coloring, delta=delta, p=p, passes=used, discovered_delta=discovered,
                        epochs=epochs, meter=meter, final_uncolored=final_u)


def brute_force_potentials(sampler: GwSampler, cell: Sequence[int], row: np.ndarray,
                           edges: Iterable[Sequence[int]]) -> np.ndarray:
    """Phi(h_{a,b}) for the whole family as a (p, p) array. Tiny instances only."""
    p = sampler.p
    rel = [canonical_edge(int(e[0]), int(e[1])) for e in edges]
    rel = [(u, v) for u, v in rel if cell[u] >= 0 and cell[u] == cell[v]]
    phi = np.zeros((p, p), dtype=np.float64)
    if not rel:
        return phi
    us = np.asarray([u for u, _ in rel], dtype=np.int64)
    vs = np.asarray([v for _, v in rel], dtype=np.int64)
    e, A, La, B, Lb, c = sampler.pair_terms(row[us], row[vs])
    a = np.arange(p, dtype=np.int64)[:, None]
    b = np.arange(p, dtype=np.int64)[None, :]
    for t in range(len(e)):
        hx = (a * int(us[e[t]]) + b) % p
        hy = (a * int(vs[e[t]]) + b) % p
        hit = (hx >= A[t]) & (hx < A[t] + La[t]) & (hy >= B[t]) & (hy < B[t] + Lb[t])
        phi += c[t] * hit
    return phi
