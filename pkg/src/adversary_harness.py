#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
Adaptive-adversary games.

The adversary sees its own inserts and every query output, never seeds or
internal state. The harness is the referee: it keeps the whole graph, enforces
the degree cap Δ and the length cap nΔ/2, and checks each query output against
the exact graph built so far. Its memory is not charged to the algorithm.
"""

from __future__ import annotations
from dataclasses import dataclass, field
from itertools import combinations
from pathlib import Path
from typing import Callable, Protocol, Sequence, Union

import numpy as np

from .graph_core import AdjacencyGraph, Edge, canonical_edge, check_proper, greedy_color
from .hashing import KeyedBlockHash
from .lowrandom_robust import LowRandColorer, LowRandConfig
from .robust_coloring import RobustColorer, RobustConfig
from .stream_engine import EDGES, SpaceMeter, read_transcript, write_transcript
from .utils import (AdversaryDisqualified, PaletteOverflow, QueryFail, UsageError, get_logger)

log = get_logger("game")


@dataclass(frozen=True)
class Insert:
    u: int
    v: int


@dataclass(frozen=True)
class Query:
    pass


@dataclass(frozen=True)
class Stop:
    pass


AdversaryAction = Union[Insert, Query, Stop]


class StreamingColorer(Protocol):
    name: str
    meter: SpaceMeter

    def process(self, u: int, v: int) -> None: ...
    def query(self) -> list[int]: ...
    def stats(self) -> dict: ...


# ---------------------------------------------------------------- baseline

class NaiveBlockColorer:
    """
    One fixed f: V -> [Δ^2]; every f-monochromatic edge is kept forever and each
    f-block is greedily colored on its own palette of Δ+1 colors. Proper on any
    stream, but the outputs expose f, so an adaptive adversary can make it keep
    every edge it inserts.
    """

    name = "naive"

    def __init__(self, n: int, delta: int, seed: int = 0, meter: SpaceMeter | None = None):
        self.n = n
        self.delta = delta
        self.meter = meter or SpaceMeter()
        self.block_width = delta + 1
        rng = np.random.default_rng(seed)
        self._f = KeyedBlockHash(1, delta * delta, rng)
        self.f = self._f.table(n)[0]
        self.stored: list[Edge] = []
        self.peak_stored = 0

    def process(self, u: int, v: int) -> None:
        u, v = canonical_edge(int(u), int(v))
        if self.f[u] == self.f[v]:
            self.stored.append((u, v))
            self.meter.charge(EDGES, 2)
            self.peak_stored = max(self.peak_stored, len(self.stored))

    def query(self) -> list[int]:
        local = greedy_color(AdjacencyGraph.from_edges(self.n, self.stored)).chi
        return [int(self.f[x]) * self.block_width + int(local[x]) for x in range(self.n)]

    def stats(self) -> dict:
        return {"stored_edges": len(self.stored), "peak_stored_edges": self.peak_stored,
                "palette_reserved": self.delta * self.delta * self.block_width,
                "seed_bits": self._f.seed_bits()}


def make_algorithm(name: str, n: int, delta: int, seed: int = 0, beta: float = 0.0,
                   audit: bool = False) -> StreamingColorer:
    if name == "robust":
        return RobustColorer(RobustConfig(n=n, delta=delta, beta=beta, seed=seed, audit=audit))
    if name == "lowrand":
        return LowRandColorer(LowRandConfig(n=n, delta=delta, seed=seed, audit=audit))
    if name == "naive":
        return NaiveBlockColorer(n, delta, seed)
    raise UsageError(f"unknown streaming algorithm {name!r} (robust | lowrand | naive)")


# ---------------------------------------------------------------- adversaries

@dataclass
class GameView:
    """What an adversary may look at: its own graph and the last output it saw."""
    n: int
    delta: int
    max_inserts: int
    edges: set[Edge]
    degree: list[int]
    inserts: int = 0
    since_query: int = 0
    last_output: list[int] | None = None

    def open_vertices(self) -> list[int]:
        return [x for x in range(self.n) if self.degree[x] < self.delta]


def _random_non_edge(view: GameView, rng: np.random.Generator, tries: int = 64) -> Edge | None:
    free = view.open_vertices()
    if len(free) < 2:
        return None
    for _ in range(tries):
        i, j = rng.choice(len(free), size=2, replace=False)
        e = canonical_edge(free[int(i)], free[int(j)])
        if e not in view.edges:
            return e
    pool = [e for e in combinations(free, 2) if e not in view.edges]
    if not pool:
        return None
    return pool[int(rng.integers(len(pool)))]


class Adversary:
    name = "adversary"

    def next_action(self, view: GameView) -> AdversaryAction:
        raise NotImplementedError


class StopImmediately(Adversary):
    name = "stop"

    def next_action(self, view: GameView) -> AdversaryAction:
        return Stop()


class ObliviousRandom(Adversary):
    """Random legal inserts, a query every q of them; ignores outputs."""
    name = "oblivious"

    def __init__(self, q: int = 1, seed: int = 0):
        if q < 1:
            raise UsageError(f"query cadence must be >= 1, got {q}")
        self.q = q
        self.rng = np.random.default_rng(seed)

    def next_action(self, view: GameView) -> AdversaryAction:
        if view.since_query >= self.q:
            return Query()
        if view.inserts >= view.max_inserts:
            return Stop()
        e = _random_non_edge(view, self.rng)
        return Stop() if e is None else Insert(*e)


class ConflictSeeker(ObliviousRandom):
    """
    After each output, insert a non-edge whose endpoints got the same color
    (grouped by color // granularity) and still have degree budget; random
    legal insert when there is none. Query every q inserts.
    """
    name = "conflict"

    def __init__(self, q: int = 1, seed: int = 0, granularity: int = 1, max_pairs: int = 200_000):
        super().__init__(q, seed)
        if granularity < 1:
            raise UsageError(f"granularity must be >= 1, got {granularity}")
        self.granularity = granularity
        self.max_pairs = max_pairs

    def _mono_pairs(self, view: GameView) -> list[Edge]:
        groups: dict[int, list[int]] = {}
        for x in view.open_vertices():
            groups.setdefault(view.last_output[x] // self.granularity, []).append(x)
        pairs: list[Edge] = []
        for members in groups.values():
            for e in combinations(members, 2):
                if e not in view.edges:
                    pairs.append(e)
                    if len(pairs) >= self.max_pairs:
                        return pairs
        return pairs

    def next_action(self, view: GameView) -> AdversaryAction:
        if view.since_query >= self.q:
            return Query()
        if view.inserts >= view.max_inserts:
            return Stop()
        if view.last_output is not None:
            pairs = self._mono_pairs(view)
            if pairs:
                return Insert(*pairs[int(self.rng.integers(len(pairs)))])
        e = _random_non_edge(view, self.rng)
        return Stop() if e is None else Insert(*e)


class ReplayAdversary(Adversary):
    """Plays back an E/Q transcript, then stops."""
    name = "replay"

    def __init__(self, actions: Sequence[Edge | None]):
        self.actions = list(actions)
        self.pos = 0

    @classmethod
    def from_file(cls, path: str | Path) -> "ReplayAdversary":
        return cls(read_transcript(path))

    def next_action(self, view: GameView) -> AdversaryAction:
        if self.pos >= len(self.actions):
            return Stop()
        a = self.actions[self.pos]
        self.pos += 1
        return Query() if a is None else Insert(*a)


def make_adversary(name: str, seed: int = 0, q: int = 1, granularity: int = 1,
                   transcript: str | Path | None = None) -> Adversary:
    if name == "stop":
        return StopImmediately()
    if name == "oblivious":
        return ObliviousRandom(q=q, seed=seed)
    if name == "conflict":
        return ConflictSeeker(q=q, seed=seed, granularity=granularity)
    if name == "replay":
        if transcript is None:
            raise UsageError("replay adversary needs a transcript file")
        return ReplayAdversary.from_file(transcript)
    raise UsageError(f"unknown adversary {name!r} (stop | oblivious | conflict | replay)")


# ---------------------------------------------------------------- game

@dataclass(frozen=True)
class GameConfig:
    n: int
    delta: int
    max_inserts: int | None = None
    audit: bool = False

    @property
    def insert_cap(self) -> int:
        full = self.n * self.delta // 2
        return full if self.max_inserts is None else min(self.max_inserts, full)


@dataclass
class TranscriptEntry:
    action: AdversaryAction
    output: list[int] | None = None
    proper: bool | None = None
    error: str | None = None


@dataclass
class GameResult:
    algorithm: str
    adversary: str
    seed: int
    inserts: int = 0
    queries: int = 0
    violations: int = 0
    query_fails: int = 0
    overflows: int = 0
    palette_used: int = 0
    peak_space_words: int = 0
    peak_stored_edges: int = 0
    stats: dict = field(default_factory=dict)
    soft_errors: list[str] = field(default_factory=list)
    transcript: list[TranscriptEntry] = field(default_factory=list)

    def actions(self) -> list[Edge | None]:
        return [None if isinstance(t.action, Query) else (t.action.u, t.action.v)
                for t in self.transcript if not isinstance(t.action, Stop)]

    def write_transcript(self, path: str | Path) -> None:
        write_transcript(path, self.actions())


def _admit(view: GameView, a: Insert, cap: int) -> Edge:
    try:
        e = canonical_edge(int(a.u), int(a.v))
    except ValueError as ex:
        raise AdversaryDisqualified(str(ex)) from ex
    u, v = e
    if not (0 <= u and v < view.n):
        raise AdversaryDisqualified(f"insert {e} outside [0, {view.n})")
    if e in view.edges:
        raise AdversaryDisqualified(f"insert {e} repeats an edge")
    if view.degree[u] >= view.delta or view.degree[v] >= view.delta:
        raise AdversaryDisqualified(f"insert {e} breaks the degree cap Δ={view.delta}")
    if view.inserts >= cap:
        raise AdversaryDisqualified(f"insert {e} beyond the length cap {cap}")
    return e


def run_game(algorithm: StreamingColorer, adversary: Adversary, config: GameConfig,
             seed: int = 0, on_query: Callable[[GameView, list[int]], None] | None = None) -> GameResult:
    """Alternate adversary moves and algorithm answers until the adversary stops."""
    cap = config.insert_cap
    view = GameView(n=config.n, delta=config.delta, max_inserts=cap, edges=set(), degree=[0] * config.n)
    result = GameResult(algorithm=algorithm.name, adversary=adversary.name, seed=seed)
    while True:
        action = adversary.next_action(view)
        if isinstance(action, Stop):
            result.transcript.append(TranscriptEntry(action))
            break
        if isinstance(action, Insert):
            e = _admit(view, action, cap)
            algorithm.process(*e)
            view.edges.add(e)
            view.degree[e[0]] += 1
            view.degree[e[1]] += 1
            view.inserts += 1
            view.since_query += 1
            result.transcript.append(TranscriptEntry(Insert(*e)))
            continue
        entry = TranscriptEntry(action)
        result.queries += 1
        view.since_query = 0
        try:
            out = algorithm.query()
        except QueryFail as ex:
            result.query_fails += 1
            entry.error = str(ex)
        except PaletteOverflow as ex:
            result.overflows += 1
            entry.error = str(ex)
        else:
            bad = check_proper(view.edges, out)
            entry.output, entry.proper = out, not bad
            if bad:
                result.violations += 1
                log.warning(f"improper output at insert={view.inserts}: {len(bad)} bad edges, first={bad[0]}")
            if config.audit and hasattr(algorithm, "coverage_check"):
                algorithm.coverage_check(view.edges)
            result.palette_used = max(result.palette_used, len(set(out)))
            view.last_output = out
            if on_query is not None:
                on_query(view, out)
        result.transcript.append(entry)
    result.inserts = view.inserts
    result.stats = algorithm.stats()
    result.soft_errors = [str(e) for e in getattr(algorithm, "soft_errors", ())]
    result.peak_space_words = algorithm.meter.peak_words
    result.peak_stored_edges = int(result.stats.get("peak_stored_edges", result.stats.get("stored_edges", 0)))
    log.info(f"alg={result.algorithm} adv={result.adversary} seed={seed} inserts={result.inserts} "
             f"queries={result.queries} violations={result.violations} fails={result.query_fails} "
             f"overflows={result.overflows} palette={result.palette_used} peak_stored={result.peak_stored_edges} "
             f"soft_errors={len(result.soft_errors)}")
    return result


def trial_seeds(seed: int, trials: int) -> list[tuple[int, int]]:
    """(algorithm seed, adversary seed) per trial, derived from one campaign seed."""
    out = []
    for child in np.random.SeedSequence(seed).spawn(trials):
        a, b = child.generate_state(2)
        out.append((int(a), int(b)))
    return out


def run_campaign(algorithm: str, adversary: str, trials: int, seed: int, config: GameConfig,
                 beta: float = 0.0, q: int = 1, granularity: int = 1,
                 transcript: str | Path | None = None) -> list[GameResult]:
    results = []
    for t, (alg_seed, adv_seed) in enumerate(trial_seeds(seed, trials)):
        alg = make_algorithm(algorithm, config.n, config.delta, seed=alg_seed, beta=beta, audit=config.audit)
        adv = make_adversary(adversary, seed=adv_seed, q=q, granularity=granularity, transcript=transcript)
        res = run_game(alg, adv, config, seed=alg_seed)
        log.debug(f"trial={t + 1}/{trials} violations={res.violations}")
        results.append(res)
    return results
