#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
colorstream command line.

  gen     write a Δ-bounded token stream (or an E/Q transcript)
  run     run one colorer on a stream file, write coloring + metrics
  game    adversary campaign against a streaming colorer
  verify  check a coloring file against a stream file
  audit   randomness audit of the low-randomness colorer

Exit codes: 0 all verifications passed, 1 usage, 2 bad input/config,
3 improper coloring, 4 internal invariant failed, 5 palette overflow,
6 query fail.
"""

from __future__ import annotations
import argparse
import pathlib
import sys
import time
from itertools import combinations
from typing import Sequence

import numpy as np

from . import determ_coloring, list_coloring
from .adversary_harness import GameConfig, ReplayAdversary, make_adversary, make_algorithm, run_campaign, run_game
from .graph_core import Edge, canonical_edge, check_proper
from .hashing import verify_four_independence
from .lowrandom_robust import LowRandColorer, LowRandConfig
from .metrics import RunMetrics, campaign_summary, campaign_table, write_campaign, write_metrics
from .robust_coloring import palette_bound, RobustConfig
from .stream_engine import (EdgeToken, ListToken, MultiPassSource, edges_of, read_token_file,
                            read_transcript, write_token_file, write_transcript)
from .utils import (OUT_BASE, ColorstreamError, InputError, QueryFail, UsageError, PaletteOverflow,
                    VerificationFailure, get_logger, set_verbose)

log = get_logger("cli")

GEN_KINDS = ("gnp-capped", "regular-ish", "clique", "path", "adversary-replay")
RUN_ALGORITHMS = ("determ", "listcolor", "robust", "lowrand")


# ---------------------------------------------------------------- generators

def _capped(n: int, delta: int, pairs: Sequence[Edge]) -> list[Edge]:
    deg = [0] * n
    out = []
    for u, v in pairs:
        if deg[u] < delta and deg[v] < delta:
            out.append((u, v))
            deg[u] += 1
            deg[v] += 1
    return out


def gen_edges(kind: str, n: int, delta: int | None, seed: int) -> list[Edge]:
    rng = np.random.default_rng(seed)
    if n < 1:
        raise UsageError(f"n must be >= 1, got {n}")
    if kind == "clique":
        if delta is not None and delta < n - 1:
            raise UsageError(f"a clique on {n} vertices needs Δ >= {n - 1}")
        return list(combinations(range(n), 2))
    if kind == "path":
        if delta is not None and delta < min(2, n - 1):
            raise UsageError(f"a path on {n} vertices needs Δ >= {min(2, n - 1)}")
        return [(i, i + 1) for i in range(n - 1)]
    if delta is None or delta < 1:
        raise UsageError(f"--delta >= 1 is required for kind={kind}")
    if kind == "gnp-capped":
        iu, iv = np.triu_indices(n, k=1)
        p = min(1.0, delta / max(n - 1, 1))
        keep = np.flatnonzero(rng.random(len(iu)) < p)
        keep = keep[rng.permutation(len(keep))]
        return sorted(_capped(n, delta, list(zip(iu[keep].tolist(), iv[keep].tolist()))))
    if kind == "regular-ish":
        seen: set[Edge] = set()
        pairs: list[Edge] = []
        for _ in range(delta):
            perm = rng.permutation(n).tolist()
            for a, b in zip(perm[0::2], perm[1::2]):
                e = canonical_edge(a, b)
                if e not in seen:
                    seen.add(e)
                    pairs.append(e)
        return sorted(_capped(n, delta, pairs))
    raise UsageError(f"unknown graph kind {kind!r} ({' | '.join(GEN_KINDS)})")


def gen_lists(n: int, edges: Sequence[Edge], universe: int, seed: int) -> dict[int, tuple[int, ...]]:
    """|L_x| = deg(x) + 1 distinct colors drawn from [0, universe)."""
    rng = np.random.default_rng(seed + 1)
    deg = [0] * n
    for u, v in edges:
        deg[u] += 1
        deg[v] += 1
    if universe < max(deg, default=0) + 1:
        raise UsageError(f"universe {universe} is smaller than Δ+1={max(deg, default=0) + 1}")
    return {x: tuple(sorted(int(c) for c in rng.choice(universe, size=deg[x] + 1, replace=False)))
            for x in range(n)}


# ---------------------------------------------------------------- coloring files

def write_coloring(path: pathlib.Path, chi: Sequence[int | None],
                   lists: dict[int, tuple[int, ...]] | None = None) -> None:
    lines = []
    for x, c in enumerate(chi):
        line = f"{x} {c}"
        if lists is not None:
            line += " ok" if c in lists.get(x, ()) else " bad"
        lines.append(line)
    pathlib.Path(path).parent.mkdir(parents=True, exist_ok=True)
    pathlib.Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def read_coloring(path: pathlib.Path) -> list[int | None]:
    chi: dict[int, int] = {}
    with open(path, "r", encoding="utf-8") as f:
        for lineno, raw in enumerate(f, start=1):
            parts = raw.split()
            if not parts or parts[0].startswith("#"):
                continue
            try:
                chi[int(parts[0])] = int(parts[1])
            except (IndexError, ValueError) as e:
                raise InputError(f"{path}:{lineno}: expected 'x c', got {raw.strip()!r}") from e
    n = max(chi, default=-1) + 1
    return [chi.get(x) for x in range(n)]


def verify_coloring(edges: Sequence[Edge], chi: Sequence[int | None],
                    lists: dict[int, tuple[int, ...]] | None = None, palette: int | None = None) -> None:
    missing = [x for x, c in enumerate(chi) if c is None]
    if missing:
        raise VerificationFailure(f"{len(missing)} vertices uncolored, first={missing[0]}")
    bad = check_proper(edges, chi)
    if bad:
        raise VerificationFailure(f"{len(bad)} monochromatic edges, first={bad[0]}")
    if lists is not None:
        off = [x for x, c in enumerate(chi) if c not in lists.get(x, ())]
        if off:
            raise VerificationFailure(f"{len(off)} vertices colored outside their list, first={off[0]}")
    if palette is not None:
        over = [x for x, c in enumerate(chi) if not (0 <= c < palette)]
        if over:
            raise VerificationFailure(f"vertex {over[0]} got color {chi[over[0]]} outside [0, {palette})")


# ---------------------------------------------------------------- commands

def cmd_gen(args) -> int:
    out = pathlib.Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    if args.kind == "adversary-replay":
        if args.delta is None:
            raise UsageError("--delta is required for kind=adversary-replay")
        adv = make_adversary("oblivious", seed=args.seed, q=args.q)
        alg = make_algorithm("naive", args.n, args.delta, seed=args.seed)
        res = run_game(alg, adv, GameConfig(n=args.n, delta=args.delta, max_inserts=args.max_inserts),
                       seed=args.seed)
        write_transcript(out, res.actions())
        print(f"[gen] kind={args.kind} n={args.n} Δ={args.delta} inserts={res.inserts} "
              f"queries={res.queries} -> {out}")
        return 0
    edges = gen_edges(args.kind, args.n, args.delta, args.seed)
    deg = [0] * args.n
    for u, v in edges:
        deg[u] += 1
        deg[v] += 1
    top = max(deg, default=0)
    cap = args.delta if args.delta is not None else top
    if top > cap:
        raise UsageError(f"generated max degree {top} > Δ={cap}")
    tokens = []
    if args.lists:
        lists = gen_lists(args.n, edges, args.universe or 2 * (top + 1), args.seed)
        tokens += [ListToken(x, lists[x]) for x in range(args.n)]
    tokens += [EdgeToken(u, v) for u, v in edges]
    write_token_file(out, tokens, header=f"kind={args.kind} n={args.n} delta={cap} seed={args.seed}")
    print(f"[gen] kind={args.kind} n={args.n} Δ={top} m={len(edges)} lists={bool(args.lists)} -> {out}")
    return 0


def _stream_n(path: pathlib.Path, n: int | None) -> int:
    if n is not None:
        return n
    top = -1
    for t in read_token_file(path):
        top = max(top, t.u, t.v) if isinstance(t, EdgeToken) else max(top, t.x)
    return top + 1


def _run_offline(args, metrics: RunMetrics) -> int:
    source = MultiPassSource.from_file(args.stream, n=args.n)
    tokens = read_token_file(args.stream)
    edges = sorted({e for e in edges_of(tokens)})
    lists = {t.x: t.colors for t in tokens if isinstance(t, ListToken)}
    if args.algorithm == "determ":
        res = determ_coloring.run(source, delta=args.delta)
        palette = res.delta + 1
        verify_lists = None
        metrics.extra.update(p=res.p, discovered_delta=res.discovered_delta, final_uncolored=res.final_uncolored)
    else:
        cfg = list_coloring.ListColorConfig(delta=args.delta, universe=args.universe)
        res = list_coloring.run_list_coloring(source, delta=args.delta, config=cfg)
        palette = None
        verify_lists = lists
        metrics.extra.update(universe=res.universe.size, palette_size=res.palette_size, list_width=res.width,
                             final_uncolored=res.final_uncolored)
    metrics.delta = res.delta
    metrics.passes = res.passes
    metrics.epochs = len(res.epochs)
    metrics.colors_reserved = palette if palette is not None else res.universe.size
    metrics.colors_used = res.colors_used
    metrics.peak_space_words = res.meter.peak_words
    for k, v in res.meter.snapshot().items():
        metrics.extra[k] = v
    chi = res.coloring.chi
    if args.out:
        write_coloring(pathlib.Path(args.out), chi, verify_lists)
    try:
        verify_coloring(edges, chi, verify_lists, palette)
    except VerificationFailure:
        metrics.violations = 1
        raise
    return 0


def _run_streaming(args, metrics: RunMetrics) -> int:
    path = pathlib.Path(args.stream)
    if args.transcript:
        actions = read_transcript(path)
    else:
        actions = list(dict.fromkeys(edges_of(read_token_file(path)))) + [None]
    n = args.n
    if n is None:
        n = 1 + max((max(a) for a in actions if a is not None), default=-1)
    delta = args.delta
    if delta is None:
        deg = [0] * n
        for a in actions:
            if a is not None:
                deg[a[0]] += 1
                deg[a[1]] += 1
        delta = max(1, max(deg, default=0))
    alg = make_algorithm(args.algorithm, n, delta, seed=args.seed, beta=args.beta, audit=args.audit)
    res = run_game(alg, ReplayAdversary(actions), GameConfig(n=n, delta=delta, audit=args.audit), seed=args.seed)
    metrics.n, metrics.delta = n, delta
    metrics.epochs = int(res.stats.get("epoch", 0))
    metrics.colors_reserved = int(res.stats.get("palette_reserved", 0))
    metrics.colors_used = res.palette_used
    metrics.peak_space_words = res.peak_space_words
    metrics.violations = res.violations
    metrics.query_fails = res.query_fails
    metrics.extra.update({k: v for k, v in res.stats.items() if k != "palette_reserved"})
    metrics.extra.update(queries=res.queries, inserts=res.inserts, overflows=res.overflows,
                         verdicts="".join("P" if t.proper else "F" for t in res.transcript if t.proper is not None))
    last = next((t.output for t in reversed(res.transcript) if t.output is not None), None)
    if args.out and last is not None:
        write_coloring(pathlib.Path(args.out), last)
    if res.violations:
        raise VerificationFailure(f"{res.violations} of {res.queries} query outputs were improper")
    if res.query_fails:
        raise QueryFail(f"{res.query_fails} queries found every D set invalidated")
    if res.overflows:
        raise PaletteOverflow(f"{res.overflows} queries overflowed a block palette")
    return 0


def cmd_run(args) -> int:
    if args.algorithm not in RUN_ALGORITHMS:
        raise UsageError(f"unknown algorithm {args.algorithm!r} ({' | '.join(RUN_ALGORITHMS)})")
    n = _stream_n(pathlib.Path(args.stream), args.n) if not args.transcript else args.n
    metrics = RunMetrics(algorithm=args.algorithm, n=n or 0, delta=args.delta or 0, beta=args.beta,
                         seeds=str(args.seed))
    t0 = time.perf_counter()
    try:
        if args.algorithm in ("determ", "listcolor"):
            if args.transcript:
                raise UsageError(f"{args.algorithm} reads a token stream, not a transcript")
            return _run_offline(args, metrics)
        return _run_streaming(args, metrics)
    finally:
        metrics.wall_time = time.perf_counter() - t0
        if args.metrics:
            write_metrics(pathlib.Path(args.metrics), metrics)
        print(f"[run] alg={metrics.algorithm} n={metrics.n} Δ={metrics.delta} passes={metrics.passes} "
              f"colors={metrics.colors_used}/{metrics.colors_reserved} peak_words={metrics.peak_space_words} "
              f"violations={metrics.violations}")


def cmd_game(args) -> int:
    if args.seed is None:
        raise UsageError("game needs --seed")
    config = GameConfig(n=args.n, delta=args.delta, max_inserts=args.max_inserts, audit=args.audit)
    results = run_campaign(args.algorithm, args.adversary, args.trials, args.seed, config, beta=args.beta,
                           q=args.q, granularity=args.granularity, transcript=args.transcript)
    df = campaign_table(results)
    summary = campaign_summary(df)
    summary.update(n=args.n, delta=args.delta, beta=args.beta, q=args.q, seed=args.seed,
                   granularity=args.granularity)
    if args.algorithm == "robust":
        summary["palette_bound"] = palette_bound(RobustConfig(n=args.n, delta=args.delta, beta=args.beta))
    out = pathlib.Path(args.out) if args.out else OUT_BASE / "latest"
    write_campaign(out, df, summary, params=dict(seed=args.seed, n=args.n, delta=args.delta, beta=args.beta,
                                                q=args.q))
    if args.save_transcripts:
        for i, r in enumerate(results, start=1):
            r.write_transcript(out / f"transcript_{i:03d}.txt")
    print(f"[game] alg={args.algorithm} adv={args.adversary} trials={args.trials} "
          f"violations={summary['violations']} fails={summary['query_fails']} overflows={summary['overflows']} "
          f"max_stored={summary.get('max_peak_stored_edges', 0)} -> {out}")
    if summary["violations"]:
        return VerificationFailure.exit_code
    if summary["query_fails"]:
        return QueryFail.exit_code
    if summary["overflows"]:
        return PaletteOverflow.exit_code
    return 0


def cmd_verify(args) -> int:
    tokens = read_token_file(args.stream)
    edges = list(edges_of(tokens))
    lists = {t.x: t.colors for t in tokens if isinstance(t, ListToken)} or None
    chi = read_coloring(pathlib.Path(args.coloring))
    n = _stream_n(pathlib.Path(args.stream), args.n)
    if len(chi) < n:
        chi = list(chi) + [None] * (n - len(chi))
    palette = args.delta + 1 if args.delta is not None else None
    verify_coloring(edges, chi, lists if args.lists else None, palette)
    print(f"[verify] ok n={n} m={len(edges)} colors={len(set(chi))}")
    return 0


def cmd_audit(args) -> int:
    colorer = LowRandColorer(LowRandConfig(n=args.n, delta=args.delta, seed=args.seed))
    rep = colorer.randomness_audit()
    metrics = RunMetrics(algorithm="lowrand", n=args.n, delta=args.delta, seeds=str(args.seed),
                         colors_reserved=colorer.config.color_space, extra=dict(vars(rep)))
    if args.exhaustive_width:
        ok = verify_four_independence(args.exhaustive_width, args.exhaustive_bits)
        metrics.extra["four_independent"] = ok
        if not ok:
            raise VerificationFailure(f"4-independence fails at width={args.exhaustive_width}")
    if args.metrics:
        write_metrics(pathlib.Path(args.metrics), metrics)
    print(f"[audit] n={args.n} Δ={args.delta} hashes={rep.hash_count} w={rep.width} "
          f"seed_bits={rep.seed_bits} worst_case_bits={rep.worst_case_bits} budget={rep.budget_bits}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="colorstream", description="Streaming graph coloring toolkit")
    ap.add_argument("-v", "--verbose", action="store_true", help="DEBUG logging")
    sub = ap.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen", help="write a Δ-bounded stream file")
    g.add_argument("--kind", choices=GEN_KINDS, required=True)
    g.add_argument("--n", type=int, required=True)
    g.add_argument("--delta", type=int)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--lists", action="store_true", help="prepend random (deg+1)-lists")
    g.add_argument("--universe", type=int, help="list color universe size (default 2(Δ+1))")
    g.add_argument("--q", type=int, default=1, help="query cadence for adversary-replay")
    g.add_argument("--max-inserts", type=int)
    g.add_argument("--out", required=True)
    g.set_defaults(func=cmd_gen)

    r = sub.add_parser("run", help="run one colorer on a stream file")
    r.add_argument("algorithm", choices=RUN_ALGORITHMS)
    r.add_argument("stream")
    r.add_argument("--n", type=int)
    r.add_argument("--delta", type=int)
    r.add_argument("--beta", type=float, default=0.0)
    r.add_argument("--seed", type=int, default=0)
    r.add_argument("--universe", type=int)
    r.add_argument("--transcript", action="store_true", help="stream is an E/Q transcript")
    r.add_argument("--audit", action="store_true", help="coverage/orientation checks at every query")
    r.add_argument("--out", help="coloring file")
    r.add_argument("--metrics", help="key=value metrics file (JSON mirror next to it)")
    r.set_defaults(func=cmd_run)

    c = sub.add_parser("game", help="adversary campaign")
    c.add_argument("--algorithm", choices=("robust", "lowrand", "naive"), required=True)
    c.add_argument("--adversary", choices=("stop", "oblivious", "conflict", "replay"), required=True)
    c.add_argument("--trials", type=int, default=1)
    c.add_argument("--seed", type=int)
    c.add_argument("--n", type=int, required=True)
    c.add_argument("--delta", type=int, required=True)
    c.add_argument("--beta", type=float, default=0.0)
    c.add_argument("--q", type=int, default=1)
    c.add_argument("--granularity", type=int, default=1, help="conflict seeker groups colors by c // granularity")
    c.add_argument("--max-inserts", type=int)
    c.add_argument("--transcript", help="transcript file for the replay adversary")
    c.add_argument("--audit", action="store_true")
    c.add_argument("--save-transcripts", action="store_true")
    c.add_argument("--out", help="campaign directory (default reports/latest)")
    c.set_defaults(func=cmd_game)

    v = sub.add_parser("verify", help="check a coloring file")
    v.add_argument("stream")
    v.add_argument("coloring")
    v.add_argument("--n", type=int)
    v.add_argument("--delta", type=int, help="also require colors in [0, Δ]")
    v.add_argument("--lists", action="store_true", help="also require χ(x) in L_x")
    v.set_defaults(func=cmd_verify)

    a = sub.add_parser("audit", help="seed-bit audit of the low-randomness colorer")
    a.add_argument("--n", type=int, required=True)
    a.add_argument("--delta", type=int, required=True)
    a.add_argument("--seed", type=int, default=0)
    a.add_argument("--exhaustive-width", type=int, default=0)
    a.add_argument("--exhaustive-bits", type=int, default=2)
    a.add_argument("--metrics")
    a.set_defaults(func=cmd_audit)
    return ap


def main(argv: Sequence[str] | None = None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    set_verbose(args.verbose)
    try:
        return args.func(args)
    except ColorstreamError as e:
        log.error(f"{type(e).__name__}: {e}")
        return e.exit_code


if __name__ == "__main__":
    sys.exit(main())
