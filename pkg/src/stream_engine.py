#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
Multi-pass token streams, pass counting and space metering.

Token file format (one token per line, '#' comments allowed):
  E u v                 edge {u, v}
  L x k c1 c2 ... ck    list of vertex x
Transcript format (adversary games):
  E u v                 insert edge
  Q                     query
"""

from __future__ import annotations
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Iterator, Sequence, Union

from .graph_core import Edge, canonical_edge
from .utils import AccountingError, InputError, UsageError, get_logger

log = get_logger("stream")


@dataclass(frozen=True)
class EdgeToken:
    u: int
    v: int


@dataclass(frozen=True)
class ListToken:
    x: int
    colors: tuple[int, ...]


StreamToken = Union[EdgeToken, ListToken]


def token_line(tok: StreamToken) -> str:
    if isinstance(tok, EdgeToken):
        return f"E {tok.u} {tok.v}"
    return f"L {tok.x} {len(tok.colors)} " + " ".join(str(c) for c in tok.colors)


def parse_token_line(line: str, where: str = "") -> StreamToken | None:
    line = line.strip()
    if not line or line.startswith("#"):
        return None
    parts = line.split()
    try:
        if parts[0] == "E" and len(parts) == 3:
            u, v = int(parts[1]), int(parts[2])
            canonical_edge(u, v)
            return EdgeToken(u, v)
        if parts[0] == "L":
            x, k = int(parts[1]), int(parts[2])
            colors = tuple(int(c) for c in parts[3:])
            if len(colors) != k:
                raise InputError(f"{where}: list of {x} declares {k} colors, has {len(colors)}")
            if len(set(colors)) != k:
                raise InputError(f"{where}: list of {x} repeats a color")
            return ListToken(x, colors)
    except (IndexError, ValueError) as e:
        if isinstance(e, InputError):
            raise
        raise InputError(f"{where}: malformed token {line!r}") from e
    raise InputError(f"{where}: unknown token {line!r}")


def read_token_file(path: str | Path) -> list[StreamToken]:
    tokens: list[StreamToken] = []
    with open(path, "r", encoding="utf-8") as f:
        for lineno, raw in enumerate(f, start=1):
            tok = parse_token_line(raw, f"{path}:{lineno}")
            if tok is not None:
                tokens.append(tok)
    return tokens


def write_token_file(path: str | Path, tokens: Iterable[StreamToken], header: str | None = None) -> None:
    lines = [f"# {header}"] if header else []
    lines += [token_line(t) for t in tokens]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def _check_tokens(n: int, tokens: Sequence[StreamToken]) -> None:
    seen_lists: set[int] = set()
    seen_edges: set[Edge] = set()
    for tok in tokens:
        if isinstance(tok, EdgeToken):
            if not (0 <= tok.u < n and 0 <= tok.v < n):
                raise InputError(f"edge {{{tok.u},{tok.v}}} has an endpoint outside [0, {n})")
            e = canonical_edge(tok.u, tok.v)
            if e in seen_edges:
                raise InputError(f"edge {{{e[0]},{e[1]}}} appears twice in the stream")
            seen_edges.add(e)
        else:
            if not (0 <= tok.x < n):
                raise InputError(f"list token for vertex {tok.x} outside [0, {n})")
            if tok.x in seen_lists:
                raise InputError(f"vertex {tok.x} has more than one list token")
            seen_lists.add(tok.x)


class MultiPassSource:
    """
    Replayable token sequence. Algorithms read it only through open_pass();
    every call counts one pass, and passes may not nest.
    """

    def __init__(self, n: int, tokens: Sequence[StreamToken] | None = None,
                 path: str | Path | None = None, max_degree: int | None = None):
        if (tokens is None) == (path is None):
            raise UsageError("MultiPassSource needs exactly one of tokens / path")
        self.n = n
        self.max_degree = max_degree
        self.pass_count = 0
        self._tokens = tuple(tokens) if tokens is not None else None
        self._path = Path(path) if path is not None else None
        self._open = False
        if self._tokens is not None:
            _check_tokens(n, self._tokens)

    @classmethod
    def from_edges(cls, n: int, edges: Iterable[Sequence[int]],
                   lists: dict[int, Sequence[int]] | None = None,
                   max_degree: int | None = None) -> "MultiPassSource":
        tokens: list[StreamToken] = []
        if lists:
            tokens += [ListToken(x, tuple(lists[x])) for x in sorted(lists)]
        tokens += [EdgeToken(int(e[0]), int(e[1])) for e in edges]
        return cls(n, tokens=tokens, max_degree=max_degree)

    @classmethod
    def from_file(cls, path: str | Path, n: int | None = None,
                  max_degree: int | None = None) -> "MultiPassSource":
        tokens = read_token_file(path)
        if n is None:
            top = -1
            for t in tokens:
                top = max(top, t.u, t.v) if isinstance(t, EdgeToken) else max(top, t.x)
            n = top + 1
        _check_tokens(n, tokens)
        return cls(n, path=path, max_degree=max_degree)

    def _replay(self) -> Iterator[StreamToken]:
        if self._tokens is not None:
            yield from self._tokens
            return
        with open(self._path, "r", encoding="utf-8") as f:
            for lineno, raw in enumerate(f, start=1):
                tok = parse_token_line(raw, f"{self._path}:{lineno}")
                if tok is not None:
                    yield tok

    def open_pass(self) -> Iterator[StreamToken]:
        if self._open:
            raise UsageError("open_pass while another pass is open")
        self._open = True
        self.pass_count += 1
        log.debug(f"pass={self.pass_count} open")
        return self._pass_iter()

    def _pass_iter(self) -> Iterator[StreamToken]:
        try:
            yield from self._replay()
        finally:
            self._open = False

    def discover_max_degree(self) -> int:
        deg = [0] * self.n
        for tok in self.open_pass():
            if isinstance(tok, EdgeToken):
                deg[tok.u] += 1
                deg[tok.v] += 1
        self.max_degree = max(deg, default=0)
        return self.max_degree


def edges_of(tokens: Iterable[StreamToken]) -> Iterator[Edge]:
    for tok in tokens:
        if isinstance(tok, EdgeToken):
            yield canonical_edge(tok.u, tok.v)


EDGES = "edges"
COUNTERS = "counters"
HASH = "hash"
ACCUMULATORS = "accumulators"
STATE = "state"
PALETTE = "palette"


@dataclass
class SpaceMeter:
    """Word-level space accounting. peak_words is the running max of current_words."""
    current_words: int = 0
    peak_words: int = 0
    by_category: dict[str, int] = field(default_factory=dict)
    peak_by_category: dict[str, int] = field(default_factory=dict)

    def charge(self, category: str, delta_words: int) -> None:
        now = self.by_category.get(category, 0) + delta_words
        if now < 0:
            raise AccountingError(f"space category {category} would go negative ({now})")
        self.by_category[category] = now
        self.current_words += delta_words
        self.peak_words = max(self.peak_words, self.current_words)
        self.peak_by_category[category] = max(self.peak_by_category.get(category, 0), now)

    def release_all(self, category: str) -> None:
        held = self.by_category.get(category, 0)
        if held:
            self.charge(category, -held)

    def snapshot(self) -> dict[str, int]:
        snap = {"current_words": self.current_words, "peak_words": self.peak_words}
        for cat, peak in sorted(self.peak_by_category.items()):
            snap[f"peak_{cat}"] = peak
        return snap

    def bits(self, n: int) -> int:
        return self.peak_words * max(1, math.ceil(math.log2(max(n, 2))))


def read_transcript(path: str | Path) -> list[Edge | None]:
    """Transcript as a list of edges, None marking a query."""
    out: list[Edge | None] = []
    with open(path, "r", encoding="utf-8") as f:
        for lineno, raw in enumerate(f, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split()
            if parts == ["Q"]:
                out.append(None)
                continue
            if parts[0] != "E" or len(parts) != 3:
                raise InputError(f"{path}:{lineno}: expected 'E u v' or 'Q', got {line!r}")
            try:
                out.append(canonical_edge(int(parts[1]), int(parts[2])))
            except ValueError as e:
                raise InputError(f"{path}:{lineno}: {e}") from e
    return out


def write_transcript(path: str | Path, actions: Iterable[Edge | None]) -> None:
    lines = ["Q" if a is None else f"E {a[0]} {a[1]}" for a in actions]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")
