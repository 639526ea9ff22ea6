#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
(degree+1)-list-coloring over an arbitrary integer color universe.

Same epoch skeleton as the deterministic colorer, but the proposed sets P_x are
cut by partitions chosen adaptively from the family
    R_{a,b}: c -> ((a*c + b) mod p) mod s,   a in [1, p), b in [0, p)
instead of fixed bit blocks. Per adaptive stage:
    4 selection passes (|F|^(1/4)-way refinement of the flat (a, b) order)
    1 slack pass, 2 hash-selection passes
then one final stage on the remaining candidates L_x ∩ P_x (at most 2|U| in
total): candidate pass, availability-bit pass, 2 hash-selection passes.
"""

from __future__ import annotations
from dataclasses import dataclass, field
from typing import Callable, Iterable, Iterator, Sequence

import numpy as np

from .determ_coloring import (EdgePasses, GwSampler, HashChoice, build_gw, compute_weights,
                              epoch_k, hash_prime, select_hash, settle_epoch)
from .graph_core import AdjacencyGraph, PartialColoring, greedy_color, prime_in_range
from .stream_engine import (ACCUMULATORS, COUNTERS, EDGES, HASH, PALETTE, STATE, EdgeToken, ListToken,
                            MultiPassSource, SpaceMeter, StreamToken)
from .utils import (AccountingError, ConfigError, InputError, TheoryViolation,
                    env_int, get_logger, log2n)

log = get_logger("listcolor")

MAX_FAMILY = env_int("COLORSTREAM_MAX_FAMILY", 4_000_000)
_CHUNK = 1 << 15
_REL_TOL = 1e-9


@dataclass(frozen=True)
class ColorUniverse:
    size: int

    def contains(self, c: int) -> bool:
        return 0 <= c < self.size


def partition_cost(part_of: Callable[[int], int], S: Iterable[int]) -> int:
    """max over parts R of |S ∩ R| - 1; 0 for empty S."""
    counts: dict[int, int] = {}
    for c in S:
        j = part_of(c)
        counts[j] = counts.get(j, 0) + 1
    return max(counts.values()) - 1 if counts else 0


def _max_multiplicity(M: np.ndarray) -> np.ndarray:
    """Per row of M, the largest number of equal entries."""
    M = np.sort(M, axis=1)
    eq = (M[:, 1:] == M[:, :-1]).astype(np.int64)
    run = np.cumsum(eq, axis=1)
    reset = np.maximum.accumulate(np.where(eq == 0, run, 0), axis=1)
    return (run - reset).max(axis=1) + 1


@dataclass(frozen=True)
class PartitionFamily:
    p: int
    s: int

    @classmethod
    def for_universe(cls, universe: ColorUniverse, s: int) -> "PartitionFamily":
        lo = max(2, universe.size)
        fam = cls(prime_in_range(lo, 2 * lo), s)
        if fam.size > MAX_FAMILY:
            raise ConfigError(f"partition family of size {fam.size} exceeds COLORSTREAM_MAX_FAMILY={MAX_FAMILY}")
        return fam

    @property
    def size(self) -> int:
        return (self.p - 1) * self.p

    def member(self, index: int) -> tuple[int, int]:
        return 1 + index // self.p, index % self.p

    def part_of(self, index: int) -> Callable[[int], int]:
        a, b = self.member(index)
        return lambda c: ((a * c + b) % self.p) % self.s

    def parts(self, index: int, colors: np.ndarray) -> np.ndarray:
        a, b = self.member(index)
        return ((a * np.asarray(colors, dtype=np.int64) + b) % self.p) % self.s

    def costs(self, lo: int, hi: int, S: np.ndarray) -> np.ndarray:
        """partition_cost(R_i, S) for every member i in [lo, hi)."""
        idx = np.arange(lo, hi, dtype=np.int64)
        a = 1 + idx // self.p
        b = idx % self.p
        if len(S) < 2:
            return np.zeros(hi - lo, dtype=np.int64)
        M = ((a[:, None] * S[None, :] + b[:, None]) % self.p) % self.s
        return _max_multiplicity(M) - 1


def refine_offline(costs: np.ndarray, g: int) -> int:
    """
    The four-pass choice replayed on a full cost vector: three rounds of
    g-way contiguous splits keeping the group of least mean, then the
    cheapest member. Ties: lowest index.
    """
    lo, hi = 0, len(costs)
    for _ in range(3):
        size = -(-(hi - lo) // g)
        best = None
        for start in range(lo, hi, size):
            end = min(hi, start + size)
            tot = int(costs[start:end].sum())
            if best is None or tot * (best[2] - best[1]) < best[0] * (end - start):
                best = (tot, start, end)
        lo, hi = best[1], best[2]
    return lo + int(np.argmin(costs[lo:hi]))


def family_split(size: int) -> int:
    """Smallest g with g^4 >= size."""
    g = max(1, int(round(size ** 0.25)))
    while g ** 4 < size:
        g += 1
    while g > 1 and (g - 1) ** 4 >= size:
        g -= 1
    return g


# ---------------------------------------------------------------- state

@dataclass
class VertexListSketch:
    """Per x in U: |L_x ∩ P_x|, and in the final stage the candidates with their availability bits."""
    sizes: np.ndarray
    candidates: list[np.ndarray] | None = None
    bits: list[np.ndarray] | None = None


@dataclass
class _ListPCC:
    coloring: PartialColoring
    U: list[int]
    row: np.ndarray
    keys: list[tuple[int, ...]]          # P_x as the tuple of parts chosen so far
    chosen: list[tuple[int, int]]        # (a, b) of every chosen partition
    family: PartitionFamily
    slack: np.ndarray
    sketch: VertexListSketch
    last_phi: float | None = None
    _color_keys: dict[int, tuple[int, ...]] = field(default_factory=dict)

    def color_key(self, c: int) -> tuple[int, ...]:
        key = self._color_keys.get(c)
        if key is None:
            p, s = self.family.p, self.family.s
            key = tuple(((a * c + b) % p) % s for a, b in self.chosen)
            self._color_keys[c] = key
        return key

    def restricted(self, tok: ListToken) -> np.ndarray:
        """L_x ∩ P_x, ascending."""
        L = np.asarray(sorted(tok.colors), dtype=np.int64)
        key = self.keys[self.row[tok.x]]
        p, s = self.family.p, self.family.s
        mask = np.ones(len(L), dtype=bool)
        for (a, b), part in zip(self.chosen, key):
            mask &= ((a * L + b) % p) % s == part
        return L[mask]

    def cells(self) -> list[int]:
        ids: dict[tuple[int, ...], int] = {}
        out = [-1] * self.coloring.n
        for i, x in enumerate(self.U):
            out[x] = ids.setdefault(self.keys[i], len(ids))
        return out

    def choose(self, a: int, b: int) -> None:
        self.chosen.append((a, b))
        self._color_keys.clear()


@dataclass
class ListValidation:
    delta: int
    width: int           # W, longest list
    universe: ColorUniverse
    palette: np.ndarray  # distinct listed colors, ascending


def validate_lists(passes: EdgePasses, universe: ColorUniverse | None = None) -> ListValidation:
    """
    One pass: every vertex has one list, |L_x| >= deg(x)+1, colors inside the
    universe. Also collects the colors that occur in some list (at most
    sum_x |L_x| of them).
    """
    n = passes.n
    deg = [0] * n
    size = [-1] * n
    seen: set[int] = set()
    for tok in passes.tokens():
        if isinstance(tok, EdgeToken):
            deg[tok.u] += 1
            deg[tok.v] += 1
        else:
            size[tok.x] = len(tok.colors)
            if tok.colors:
                lo, hi = min(tok.colors), max(tok.colors)
                if lo < 0 or (universe is not None and hi >= universe.size):
                    raise InputError(f"list of vertex {tok.x} leaves the color universe")
                seen.update(tok.colors)
    for x in range(n):
        if size[x] < 0:
            raise InputError(f"vertex {x} has no list token")
        if size[x] < deg[x] + 1:
            raise InputError(f"vertex {x}: |L|={size[x]} < deg+1={deg[x] + 1}")
    palette = np.asarray(sorted(seen), dtype=np.int64)
    top = int(palette[-1]) if len(palette) else -1
    return ListValidation(delta=max(deg, default=0), width=max(size, default=0),
                          universe=universe or ColorUniverse(top + 1), palette=palette)


class RelabeledPasses(EdgePasses):
    """
    EdgePasses whose list tokens carry dense color ids: color palette[i] is
    replayed as i. Partition families are then sized by the colors in use,
    not by the declared universe.
    """

    def __init__(self, *args, **kwargs):
        super().__init__(*args, **kwargs)
        self.palette: np.ndarray | None = None
        self._dense: dict[int, int] = {}

    def relabel(self, palette: np.ndarray) -> None:
        self.palette = np.asarray(palette, dtype=np.int64)
        self._dense = {c: i for i, c in enumerate(self.palette.tolist())}
        self.meter.charge(PALETTE, 2 * len(self.palette))

    def tokens(self) -> Iterator[StreamToken]:
        for tok in super().tokens():
            if self.palette is not None and isinstance(tok, ListToken):
                tok = ListToken(tok.x, tuple(self._dense[c] for c in tok.colors))
            yield tok

    def original(self, chi: Sequence[int | None]) -> list[int | None]:
        if self.palette is None:
            return list(chi)
        return [None if c is None else int(self.palette[c]) for c in chi]


def adaptive_stages(width: int, k: int) -> int:
    """ceil(2 log2 W / k): smallest t with 2^(t k) >= W^2."""
    if width <= 1:
        return 0
    return -(-(width * width - 1).bit_length() // k)


# ---------------------------------------------------------------- passes

def _group_pass(passes: EdgePasses, st: _ListPCC, lo: int, hi: int, gsize: int) -> tuple[np.ndarray, np.ndarray, int]:
    """Group sums of sum_x a_R(L_x ∩ P_x) over [lo, hi) split into chunks of gsize; plus sum_x (|L_x ∩ P_x| - 1)."""
    ngroups = -(-(hi - lo) // gsize)
    sums = np.zeros(ngroups, dtype=np.float64)
    sizes = np.full(ngroups, gsize, dtype=np.int64)
    sizes[-1] = (hi - lo) - gsize * (ngroups - 1)
    passes.meter.charge(ACCUMULATORS, ngroups)
    D = 0
    seen = 0
    for tok in passes.tokens():
        if not isinstance(tok, ListToken) or st.row[tok.x] < 0:
            continue
        seen += 1
        S = st.restricted(tok)
        D += len(S) - 1
        if len(S) < 2:
            continue
        for c_lo in range(lo, hi, _CHUNK):
            c_hi = min(hi, c_lo + _CHUNK)
            costs = st.family.costs(c_lo, c_hi, S)
            gid = (np.arange(c_lo, c_hi) - lo) // gsize
            sums += np.bincount(gid, weights=costs, minlength=ngroups)
    if seen != len(st.U):
        raise InputError(f"{len(st.U) - seen} uncolored vertices have no list token")
    passes.meter.charge(ACCUMULATORS, -ngroups)
    return np.rint(sums).astype(np.int64), sizes, D


@dataclass
class PartitionChoice:
    index: int
    a: int
    b: int
    cost: int            # sum_x a_Q(L_x ∩ P_x)
    spread: int          # sum_x (|L_x ∩ P_x| - 1)


def select_partition(family: PartitionFamily, st: _ListPCC, passes: EdgePasses) -> PartitionChoice:
    """Four passes; the result is no worse than the family average."""
    g = family_split(family.size)
    lo, hi = 0, family.size
    spread = 0
    for _ in range(3):
        gsize = -(-(hi - lo) // g)
        sums, sizes, spread = _group_pass(passes, st, lo, hi, gsize)
        best = 0
        for i in range(1, len(sums)):
            if sums[i] * sizes[best] < sums[best] * sizes[i]:
                best = i
        lo, hi = lo + best * gsize, lo + best * gsize + int(sizes[best])
    totals, _, spread = _group_pass(passes, st, lo, hi, 1)
    i = int(np.argmin(totals))
    a, b = family.member(lo + i)
    return PartitionChoice(index=lo + i, a=a, b=b, cost=int(totals[i]), spread=spread)


def _slack_pass(passes: EdgePasses, st: _ListPCC, s: int):
    """used/avail per (x, part of the newest partition) plus conflict degrees."""
    R = len(st.U)
    used = np.zeros((R, s), dtype=np.int64)
    avail = np.zeros((R, s), dtype=np.int64)
    dconf = np.zeros(R, dtype=np.int64)
    row = st.row.tolist()
    cells = st.cells()
    chi = st.coloring.chi
    a, b = st.chosen[-1]
    p = st.family.p
    seen = 0
    for tok in passes.tokens():
        if isinstance(tok, ListToken):
            r = row[tok.x]
            if r >= 0:
                seen += 1
                S = st.restricted(tok)
                avail[r] = np.bincount(((a * S + b) % p) % s, minlength=s)
            continue
        u, v = tok.u, tok.v
        ru, rv = row[u], row[v]
        if ru >= 0 and rv >= 0:
            if cells[u] == cells[v]:
                dconf[ru] += 1
                dconf[rv] += 1
            continue
        if ru >= 0 or rv >= 0:
            r, c = (ru, chi[v]) if ru >= 0 else (rv, chi[u])
            key = st.color_key(c)
            if key[:-1] == st.keys[r]:
                used[r, key[-1]] += 1
    if seen != R:
        raise InputError(f"{R - seen} uncolored vertices have no list token")
    return used, avail, dconf


def _phi_vertex_form(dconf: np.ndarray, s_now: np.ndarray) -> float:
    hot = dconf > 0
    if np.any(hot & (s_now == 0)):
        raise TheoryViolation("slack dropped to zero on a conflicting vertex")
    return float((dconf[hot] / s_now[hot]).sum())


def _check_potential(st: _ListPCC, phi_before: float) -> None:
    if st.last_phi is not None and abs(phi_before - st.last_phi) > 1e-6 * max(1.0, st.last_phi):
        raise TheoryViolation(f"vertex-sum Phi {phi_before:.9g} != edge-sum Phi {st.last_phi:.9g}")


@dataclass
class ListStageTrace:
    stage: int
    partition: tuple[int, int] | None
    cost: int
    spread_before: int
    spread_after: int
    phi_before: float
    phi_after: float
    mean_phi: float


@dataclass
class ListEpochTrace:
    epoch: int
    u_size: int
    k: int
    s: int
    stages: list[ListStageTrace]
    candidates: int = 0
    f_size: int = 0
    i_size: int = 0
    u_after: int = 0


def _check_decay(spread: int, spread0: int, stage: int, k: int) -> None:
    """spread <= 2^(-stage*k/2) * spread0, in integers."""
    if spread * spread * (1 << (stage * k)) > spread0 * spread0:
        raise TheoryViolation(f"list spread {spread} did not decay by 2^(-{stage}k/2) from {spread0}")


def _pick(passes: EdgePasses, st: _ListPCC, sampler: GwSampler, phi_before: float) -> HashChoice:
    hc = select_hash(passes, st.cells(), st.row, sampler)
    eps = 1.0 / (8.0 * log2n(st.coloring.n))
    if hc.mean_phi > (1 + eps) ** 2 * phi_before * (1 + _REL_TOL) + 1e-12:
        raise TheoryViolation(f"family mean {hc.mean_phi:.9g} exceeds (1+eps)^2 * Phi={phi_before:.9g}")
    return hc


def _adaptive_stage(passes: EdgePasses, st: _ListPCC, p_hash: int, stage: int) -> ListStageTrace:
    n = st.coloring.n
    meter = passes.meter
    fam = st.family
    choice = select_partition(fam, st, passes)
    if choice.cost * choice.cost * fam.s > choice.spread * choice.spread:
        raise TheoryViolation(f"partition cost {choice.cost} above spread {choice.spread} / sqrt({fam.s})")
    st.choose(choice.a, choice.b)

    used, avail, dconf = _slack_pass(passes, st, fam.s)
    s_now = np.maximum(0, avail.sum(axis=1) - used.sum(axis=1))
    if stage > 1 and np.any(s_now != st.slack):
        raise TheoryViolation("pass slack disagrees with the slack carried from the last stage")
    st.slack = s_now
    phi_before = _phi_vertex_form(dconf, s_now)
    _check_potential(st, phi_before)

    n_counters = len(st.U) * fam.s
    if n_counters > 2 * n:
        raise AccountingError(f"slack counters {n_counters} exceed 2n={2 * n}")
    meter.charge(COUNTERS, n_counters)
    children = np.maximum(0, avail - used)
    sampler = build_gw(compute_weights(children), p_hash, n, slacks=children)
    meter.charge(HASH, 2 * n_counters + 2)
    hc = _pick(passes, st, sampler, phi_before)

    rows = np.arange(len(st.U))
    cols = sampler.lookup(rows, (hc.a * np.asarray(st.U, dtype=np.int64) + hc.b) % p_hash)
    st.keys = [st.keys[r] + (int(cols[r]),) for r in rows.tolist()]
    st.slack = children[rows, cols]
    st.sketch.sizes = avail[rows, cols]
    st.last_phi = hc.phi
    if np.any(st.slack < 1):
        raise TheoryViolation("a vertex was steered into a part with zero slack")
    meter.release_all(COUNTERS)
    meter.release_all(HASH)

    spread = int((st.sketch.sizes - 1).sum())
    log.debug(f"stage={stage} partition=({choice.a},{choice.b}) cost={choice.cost} "
              f"spread={choice.spread}->{spread} phi={phi_before:.4f}->{hc.phi:.4f}")
    return ListStageTrace(stage=stage, partition=(choice.a, choice.b), cost=choice.cost,
                          spread_before=choice.spread, spread_after=spread,
                          phi_before=phi_before, phi_after=hc.phi, mean_phi=hc.mean_phi)


def _final_stage(passes: EdgePasses, st: _ListPCC, p_hash: int, stage: int) -> tuple[ListStageTrace, list[int], int]:
    """Candidate pass, availability pass, then hash selection over candidate colors."""
    n = st.coloring.n
    meter = passes.meter
    R = len(st.U)

    cands: list[np.ndarray] = [np.zeros(0, dtype=np.int64)] * R
    total = 0
    for tok in passes.tokens():
        if isinstance(tok, ListToken) and st.row[tok.x] >= 0:
            K = st.restricted(tok)
            cands[st.row[tok.x]] = K
            total += len(K)
    if total > 2 * R:
        raise TheoryViolation(f"{total} final candidates exceed 2|U|={2 * R}")
    meter.charge(STATE, total)

    bits = [np.ones(len(K), dtype=np.int64) for K in cands]
    index = [{int(c): i for i, c in enumerate(K)} for K in cands]
    used_in_P = np.zeros(R, dtype=np.int64)
    dconf = np.zeros(R, dtype=np.int64)
    row = st.row.tolist()
    cells = st.cells()
    chi = st.coloring.chi
    for u, v in passes.edges():
        ru, rv = row[u], row[v]
        if ru >= 0 and rv >= 0:
            if cells[u] == cells[v]:
                dconf[ru] += 1
                dconf[rv] += 1
            continue
        if ru >= 0 or rv >= 0:
            r, c = (ru, chi[v]) if ru >= 0 else (rv, chi[u])
            if st.color_key(c) == st.keys[r]:
                used_in_P[r] += 1
                i = index[r].get(c)
                if i is not None:
                    bits[r][i] = 0
    meter.charge(STATE, total)
    st.sketch.candidates, st.sketch.bits = cands, bits
    sizes = np.asarray([len(K) for K in cands], dtype=np.int64)
    s_now = np.maximum(0, sizes - used_in_P)
    if st.last_phi is not None and np.any(s_now != st.slack):
        raise TheoryViolation("final-stage slack disagrees with the slack carried from the last stage")
    st.slack = s_now
    phi_before = _phi_vertex_form(dconf, s_now)
    _check_potential(st, phi_before)

    J = max(1, int(sizes.max(initial=0)))
    labels = np.full((R, J), -1, dtype=np.int64)
    slack = np.zeros((R, J), dtype=np.int64)
    for r in range(R):
        labels[r, :len(cands[r])] = cands[r]
        slack[r, :len(bits[r])] = bits[r]
    meter.charge(HASH, 2 * total + 2)
    sampler = build_gw(compute_weights(slack), p_hash, n, labels=labels, slacks=slack)
    hc = _pick(passes, st, sampler, phi_before)
    rows = np.arange(R)
    cols = sampler.lookup(rows, (hc.a * np.asarray(st.U, dtype=np.int64) + hc.b) % p_hash)
    if np.any(slack[rows, cols] != 1):
        raise TheoryViolation("final proposal is not available")
    proposed = labels[rows, cols].tolist()
    meter.release_all(HASH)
    meter.charge(STATE, -2 * total)
    trace = ListStageTrace(stage=stage, partition=None, cost=0, spread_before=int((sizes - 1).sum()),
                           spread_after=0, phi_before=phi_before, phi_after=hc.phi, mean_phi=hc.mean_phi)
    return trace, proposed, total


def run_list_epoch(coloring: PartialColoring, passes: EdgePasses, p_hash: int, width: int,
                   universe: ColorUniverse, epoch: int = 1) -> ListEpochTrace:
    """Shrinks coloring.uncolored in place to at most 2/3 of its size."""
    n = coloring.n
    U = sorted(coloring.uncolored)
    row = np.full(n, -1, dtype=np.int64)
    row[U] = np.arange(len(U))
    k = epoch_k(n, len(U))
    family = PartitionFamily.for_universe(universe, 1 << k)
    st = _ListPCC(coloring=coloring, U=U, row=row, keys=[()] * len(U), chosen=[], family=family,
                  slack=np.zeros(len(U), dtype=np.int64),
                  sketch=VertexListSketch(sizes=np.zeros(len(U), dtype=np.int64)))
    passes.meter.charge(STATE, 3 * len(U))
    trace = ListEpochTrace(epoch=epoch, u_size=len(U), k=k, s=family.s, stages=[])
    spread0 = 0
    for stage in range(1, adaptive_stages(width, k) + 1):
        st_trace = _adaptive_stage(passes, st, p_hash, stage)
        if stage == 1:
            spread0 = st_trace.spread_before
        _check_decay(st_trace.spread_after, spread0, stage, k)
        trace.stages.append(st_trace)
    final, proposed, trace.candidates = _final_stage(passes, st, p_hash, len(trace.stages) + 1)
    trace.stages.append(final)
    if trace.stages[0].phi_before > len(U) * (1 + _REL_TOL):
        raise TheoryViolation(f"initial Phi={trace.stages[0].phi_before:.6g} exceeds |U|={len(U)}")
    if final.phi_after > 2 * len(U) * (1 + _REL_TOL):
        raise TheoryViolation(f"final Phi={final.phi_after:.6g} exceeds 2|U|={2 * len(U)}")
    trace.f_size, trace.i_size = settle_epoch(passes, coloring, U, row, proposed)
    if abs(2 * trace.f_size - final.phi_after) > 1e-6 * max(1.0, final.phi_after):
        raise TheoryViolation(f"settling pass found |F|={trace.f_size} but final Phi={final.phi_after:.6g}")
    trace.u_after = len(coloring.uncolored)
    passes.meter.release_all(STATE)
    passes.meter.charge(STATE, n)
    log.info(f"epoch={epoch} |U|={len(U)} k={k} s={family.s} stages={len(trace.stages)} "
             f"candidates={trace.candidates} |F|={trace.f_size} |I|={trace.i_size} |U'|={trace.u_after}")
    return trace


# ---------------------------------------------------------------- run

@dataclass
class ListColorConfig:
    delta: int | None = None
    universe: int | None = None
    edge_buffer: int | None = None


@dataclass
class ListColorResult:
    coloring: PartialColoring
    delta: int
    width: int
    universe: ColorUniverse
    palette_size: int
    passes: int
    epochs: list[ListEpochTrace]
    meter: SpaceMeter
    final_uncolored: int

    @property
    def colors_used(self) -> int:
        return len(self.coloring.colors_used())


def expected_list_pass_count(epochs: Sequence[ListEpochTrace]) -> int:
    """validation + per epoch (7 per adaptive stage, 4 for the final stage, 1 settle) + collection."""
    return 2 + sum(7 * (len(t.stages) - 1) + 4 + 1 for t in epochs)


def _collect_and_finish(passes: EdgePasses, coloring: PartialColoring) -> int:
    U = set(coloring.uncolored)
    kept: list[tuple[int, int]] = []
    lists: dict[int, tuple[int, ...]] = {}
    for tok in passes.tokens():
        if isinstance(tok, ListToken):
            if tok.x in U:
                lists[tok.x] = tok.colors
        elif tok.u in U or tok.v in U:
            kept.append((tok.u, tok.v))
    missing = U - lists.keys()
    if missing:
        raise InputError(f"vertex {min(missing)} has no list token")
    words = 2 * len(kept) + sum(len(L) for L in lists.values())
    passes.meter.charge(EDGES, words)
    graph = AdjacencyGraph.from_edges(coloring.n, kept)
    done = greedy_color(graph, order=sorted(U), lists=lists, initial=coloring)
    for x in U:
        coloring.assign(x, done.chi[x])
    passes.meter.charge(EDGES, -words)
    return len(U)


def run_list_coloring(source: MultiPassSource, n: int | None = None, delta: int | None = None,
                      config: ListColorConfig | None = None, meter: SpaceMeter | None = None) -> ListColorResult:
    """
    Proper coloring with chi(x) in L_x from an interleaved edge/list stream.
    Colors are relabeled onto the listed palette for the run and mapped back
    before returning, so a sparse universe of size poly(n) costs no more than
    a dense one with the same lists.
    """
    config = config or ListColorConfig()
    meter = meter or SpaceMeter()
    n = source.n if n is None else n
    if n != source.n:
        raise ConfigError(f"n={n} does not match the stream's n={source.n}")
    start_passes = source.pass_count
    delta = delta if delta is not None else config.delta
    passes = RelabeledPasses(source, delta if delta is not None else max(n, 1), meter, config.edge_buffer)
    universe = ColorUniverse(config.universe) if config.universe is not None else None
    check = validate_lists(passes, universe)
    delta = check.delta if delta is None else delta
    passes.delta = delta
    passes.relabel(check.palette)
    dense = ColorUniverse(len(check.palette))
    coloring = PartialColoring.empty(n)
    meter.charge(STATE, n)
    p_hash = hash_prime(n) if n * max(delta, 1) > n else None
    log.info(f"n={n} Δ={delta} W={check.width} |C|={check.universe.size} palette={dense.size} p={p_hash}")

    epochs: list[ListEpochTrace] = []
    while len(coloring.uncolored) * max(delta, 1) > n:
        epochs.append(run_list_epoch(coloring, passes, p_hash, check.width, dense, epoch=len(epochs) + 1))
    final_u = _collect_and_finish(passes, coloring)
    coloring = PartialColoring.from_colors(passes.original(coloring.chi))

    used = source.pass_count - start_passes
    expected = expected_list_pass_count(epochs)
    if used != expected:
        raise AccountingError(f"used {used} passes, closed form gives {expected}")
    log.info(f"done passes={used} epochs={len(epochs)} final_greedy={final_u} "
             f"colors={len(coloring.colors_used())} peak_words={meter.peak_words}")
    return ListColorResult(coloring=coloring, delta=delta, width=check.width, universe=check.universe,
                           palette_size=dense.size, passes=used, epochs=epochs, meter=meter,
                           final_uncolored=final_u)
