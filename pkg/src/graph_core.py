#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
Offline graph primitives shared by the streaming colorers.

Everything here works on small, fully materialised graphs: the sets collected
at the end of an epoch, a query's block subgraph, the final uncolored
neighbourhood. Functions are pure over their inputs.

Edge-list text format: one edge per line "u v" (decimal, 0-based); lines
starting with '#' are ignored.
"""

from __future__ import annotations
import heapq
import math
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Hashable, Iterable, Mapping, Sequence

from .utils import ConfigError, InputError, TheoryViolation, UsageError

Edge = tuple[int, int]
UNCOLORED = None


def canonical_edge(u: int, v: int) -> Edge:
    if u == v:
        raise InputError(f"self-loop on vertex {u}")
    return (u, v) if u < v else (v, u)


@dataclass(frozen=True)
class AdjacencyGraph:
    """
    Simple undirected graph on vertices 0..n-1.
    edges: canonical (u < v), sorted, no duplicates
    adjacency: sorted neighbour tuples, symmetric
    """
    n: int
    edges: tuple[Edge, ...]
    adjacency: tuple[tuple[int, ...], ...]

    @property
    def m(self) -> int:
        return len(self.edges)

    def degree(self, x: int) -> int:
        return len(self.adjacency[x])

    def max_degree(self) -> int:
        return max((len(a) for a in self.adjacency), default=0)

    @classmethod
    def from_edges(cls, n: int, edges: Iterable[Sequence[int]], max_degree: int | None = None) -> "AdjacencyGraph":
        seen: set[Edge] = set()
        for raw in edges:
            u, v = int(raw[0]), int(raw[1])
            if not (0 <= u < n and 0 <= v < n):
                raise InputError(f"edge {{{u},{v}}} has an endpoint outside [0, {n})")
            seen.add(canonical_edge(u, v))
        adj: list[list[int]] = [[] for _ in range(n)]
        for u, v in seen:
            adj[u].append(v)
            adj[v].append(u)
        if max_degree is not None:
            for x, nbrs in enumerate(adj):
                if len(nbrs) > max_degree:
                    raise InputError(f"vertex {x} has degree {len(nbrs)} > Δ={max_degree}")
        return cls(n=n, edges=tuple(sorted(seen)), adjacency=tuple(tuple(sorted(a)) for a in adj))


@dataclass
class PartialColoring:
    """A tuple (U, chi): chi[x] is None exactly when x is in U."""
    chi: list[int | None]
    uncolored: set[int] = field(default_factory=set)

    @classmethod
    def empty(cls, n: int) -> "PartialColoring":
        return cls(chi=[UNCOLORED] * n, uncolored=set(range(n)))

    @classmethod
    def from_colors(cls, colors: Sequence[int | None]) -> "PartialColoring":
        chi = list(colors)
        return cls(chi=chi, uncolored={x for x, c in enumerate(chi) if c is UNCOLORED})

    @property
    def n(self) -> int:
        return len(self.chi)

    def assign(self, x: int, color: int) -> None:
        self.chi[x] = color
        self.uncolored.discard(x)

    def is_complete(self) -> bool:
        return not self.uncolored

    def colors_used(self) -> set[int]:
        return {c for c in self.chi if c is not UNCOLORED}

    def copy(self) -> "PartialColoring":
        return PartialColoring(chi=list(self.chi), uncolored=set(self.uncolored))


def _color_lookup(coloring) -> Sequence:
    return coloring.chi if isinstance(coloring, PartialColoring) else coloring


def check_proper(edges: Iterable[Sequence[int]], coloring: PartialColoring | Sequence[Hashable | None]) -> list[Edge]:
    """Edges whose endpoints are both colored with equal colors; [] iff proper."""
    chi = _color_lookup(coloring)
    n = len(chi)
    bad: list[Edge] = []
    for raw in edges:
        u, v = int(raw[0]), int(raw[1])
        if not (0 <= u < n and 0 <= v < n):
            raise InputError(f"edge {{{u},{v}}} has an endpoint outside [0, {n})")
        cu, cv = chi[u], chi[v]
        if cu is not UNCOLORED and cv is not UNCOLORED and cu == cv:
            bad.append(canonical_edge(u, v))
    return bad


def greedy_color(
    graph: AdjacencyGraph,
    order: Iterable[int] | None = None,
    lists: Mapping[int, Sequence[int]] | Sequence[Sequence[int]] | None = None,
    initial: PartialColoring | None = None,
) -> PartialColoring:
    """
    Colour vertices in `order`, each with the smallest colour of its list not
    used by an already coloured neighbour. Default list is [0, Δ].
    Vertices already coloured in `initial` keep their colour.
    """
    coloring = initial.copy() if initial is not None else PartialColoring.empty(graph.n)
    if order is None:
        order = sorted(coloring.uncolored)
    palette = range(graph.max_degree() + 1)
    for x in order:
        if coloring.chi[x] is not UNCOLORED:
            continue
        taken = {coloring.chi[y] for y in graph.adjacency[x]}
        candidates = sorted(lists[x]) if lists is not None else palette
        for c in candidates:
            if c not in taken:
                coloring.assign(x, c)
                break
        else:
            raise TheoryViolation(f"greedy: list of vertex {x} exhausted (|L|={len(candidates)}, deg={graph.degree(x)})")
    if coloring.uncolored:
        raise UsageError(f"greedy: order left {len(coloring.uncolored)} vertices uncolored")
    return coloring


def degeneracy_peel(graph: AdjacencyGraph) -> tuple[int, list[int]]:
    """Min-degree peeling (ties: smallest id). Each vertex has <= kappa later neighbours."""
    deg = [graph.degree(x) for x in range(graph.n)]
    heap = [(d, x) for x, d in enumerate(deg)]
    heapq.heapify(heap)
    removed = [False] * graph.n
    ordering: list[int] = []
    kappa = 0
    while heap:
        d, x = heapq.heappop(heap)
        if removed[x] or d != deg[x]:
            continue
        removed[x] = True
        ordering.append(x)
        kappa = max(kappa, d)
        for y in graph.adjacency[x]:
            if not removed[y]:
                deg[y] -= 1
                heapq.heappush(heap, (deg[y], y))
    return kappa, ordering


def degeneracy_orientation(graph: AdjacencyGraph, ordering: Sequence[int]) -> list[int]:
    """Out-degrees when every edge points from the earlier to the later vertex of `ordering`."""
    rank = {x: i for i, x in enumerate(ordering)}
    out = [0] * graph.n
    for u, v in graph.edges:
        out[u if rank[u] < rank[v] else v] += 1
    return out


def degeneracy_plus_one_color(graph: AdjacencyGraph) -> PartialColoring:
    _, ordering = degeneracy_peel(graph)
    return greedy_color(graph, order=reversed(ordering))


def independence_lower_bound(n: int, m: int) -> int:
    if n == 0:
        return 0
    return -(-n * n // (2 * m + n))


def psi(graph: AdjacencyGraph) -> Fraction:
    return sum((Fraction(1, graph.degree(x) + 1) for x in range(graph.n)), Fraction(0))


def find_independent_set(graph: AdjacencyGraph) -> set[int]:
    """
    Constructive Turán bound: repeatedly take the uncovered x minimising
    sum_{y in N[x]} 1/(deg_{G[U]}(y)+1), then drop N[x]. Ties go to the
    smallest id. Result has size >= psi(G) >= n^2/(2m+n).
    """
    alive = [True] * graph.n
    deg = [graph.degree(x) for x in range(graph.n)]
    version = [0] * graph.n

    def score(x: int) -> Fraction:
        s = Fraction(1, deg[x] + 1)
        for y in graph.adjacency[x]:
            if alive[y]:
                s += Fraction(1, deg[y] + 1)
        return s

    heap = [(score(x), x, 0) for x in range(graph.n)]
    heapq.heapify(heap)
    chosen: set[int] = set()
    while heap:
        _, x, ver = heapq.heappop(heap)
        if not alive[x] or ver != version[x]:
            continue
        chosen.add(x)
        closed = [x] + [y for y in graph.adjacency[x] if alive[y]]
        for y in closed:
            alive[y] = False
        touched: set[int] = set()
        for y in closed:
            for z in graph.adjacency[y]:
                if alive[z]:
                    deg[z] -= 1
                    touched.add(z)
        dirty = set(touched)
        for z in touched:
            dirty.update(w for w in graph.adjacency[z] if alive[w])
        for z in dirty:
            version[z] += 1
            heapq.heappush(heap, (score(z), z, version[z]))
    return chosen


def is_prime(q: int) -> bool:
    if q < 2:
        return False
    if q % 2 == 0:
        return q == 2
    for d in range(3, math.isqrt(q) + 1, 2):
        if q % d == 0:
            return False
    return True


def prime_in_range(lo: int, hi: int) -> int:
    """Smallest prime in [lo, hi] by trial division."""
    if lo < 2:
        raise ConfigError(f"prime_in_range: lo={lo} < 2")
    for q in range(lo, hi + 1):
        if is_prime(q):
            return q
    raise ConfigError(f"no prime in [{lo}, {hi}]")


def induced_subgraph(vertices: Sequence[int], edges: Iterable[Edge]) -> tuple[AdjacencyGraph, list[int]]:
    """Relabel `vertices` to 0..k-1 and keep the edges inside them. Returns (graph, local->global)."""
    index = {x: i for i, x in enumerate(vertices)}
    local = [(index[u], index[v]) for u, v in edges if u in index and v in index]
    return AdjacencyGraph.from_edges(len(vertices), local), list(vertices)


def read_edge_list(path: str | Path, n: int | None = None) -> tuple[int, list[Edge]]:
    edges: list[Edge] = []
    top = -1
    with open(path, "r", encoding="utf-8") as f:
        for lineno, raw in enumerate(f, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split()
            try:
                u, v = int(parts[0]), int(parts[1])
            except (IndexError, ValueError) as e:
                raise InputError(f"{path}:{lineno}: expected 'u v', got {line!r}") from e
            if u < 0 or v < 0:
                raise InputError(f"{path}:{lineno}: negative vertex id")
            try:
                edges.append(canonical_edge(u, v))
            except InputError as e:
                raise InputError(f"{path}:{lineno}: {e}") from e
            top = max(top, u, v)
    n = top + 1 if n is None else n
    if top >= n:
        raise InputError(f"{path}: vertex {top} outside [0, {n})")
    return n, edges


def write_edge_list(path: str | Path, edges: Iterable[Edge], header: str | None = None) -> None:
    lines = [f"# {header}"] if header else []
    lines += [f"{u} {v}" for u, v in edges]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")
