#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
Run metrics and campaign tables.

A RunMetrics record is written twice: a flat `key=value` file (sorted keys,
one per line) and a JSON mirror. Campaigns become a per-trial pandas table
saved as CSV next to a markdown summary.
"""

from __future__ import annotations
import pathlib
from dataclasses import asdict, dataclass, field
from typing import Iterable

import pandas as pd

from .utils import get_logger, write_json, write_text

log = get_logger("metrics")


@dataclass
class RunMetrics:
    algorithm: str
    n: int
    delta: int
    beta: float = 0.0
    passes: int = 0
    epochs: int = 0
    colors_reserved: int = 0
    colors_used: int = 0
    peak_space_words: int = 0
    violations: int = 0
    query_fails: int = 0
    wall_time: float = 0.0
    seeds: str = ""
    extra: dict = field(default_factory=dict)

    def flat(self) -> dict[str, object]:
        out = {k: v for k, v in asdict(self).items() if k != "extra"}
        out["wall_time"] = round(self.wall_time, 3)
        for k, v in self.extra.items():
            out[k] = v
        return dict(sorted(out.items()))


def _fmt(v: object) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return f"{v:.6g}"
    return str(v)


def flat_lines(record: dict[str, object]) -> str:
    return "\n".join(f"{k}={_fmt(record[k])}" for k in sorted(record)) + "\n"


def write_metrics(path: pathlib.Path, metrics: RunMetrics) -> None:
    """path gets the key=value form, path.with_suffix('.json') the mirror."""
    path = pathlib.Path(path)
    record = metrics.flat()
    write_text(path, flat_lines(record))
    write_json(path.with_suffix(".json"), record)
    log.info(f"wrote {path} keys={len(record)}")


def read_metrics(path: pathlib.Path) -> dict[str, str]:
    out = {}
    for line in pathlib.Path(path).read_text(encoding="utf-8").splitlines():
        if "=" in line:
            k, v = line.split("=", 1)
            out[k] = v
    return out


# ---------------------------------------------------------------- campaigns

TRIAL_COLUMNS = ["trial", "algorithm", "adversary", "seed", "inserts", "queries", "violations",
                 "query_fails", "overflows", "palette_used", "palette_reserved", "peak_space_words",
                 "peak_stored_edges", "max_deg_A_sum", "max_deg_C_sum", "max_d_size", "soft_cap_exceeded",
                 "soft_errors"]


def campaign_table(results: Iterable) -> pd.DataFrame:
    rows = []
    for i, r in enumerate(results, start=1):
        rows.append({
            "trial": i,
            "algorithm": r.algorithm,
            "adversary": r.adversary,
            "seed": r.seed,
            "inserts": r.inserts,
            "queries": r.queries,
            "violations": r.violations,
            "query_fails": r.query_fails,
            "overflows": r.overflows,
            "palette_used": r.palette_used,
            "palette_reserved": r.stats.get("palette_reserved", 0),
            "peak_space_words": r.peak_space_words,
            "peak_stored_edges": r.peak_stored_edges,
            "max_deg_A_sum": r.stats.get("max_deg_A_sum", 0),
            "max_deg_C_sum": r.stats.get("max_deg_C_sum", 0),
            "max_d_size": r.stats.get("max_d_size", 0),
            "soft_cap_exceeded": bool(r.stats.get("soft_cap_exceeded", False)),
            "soft_errors": len(r.soft_errors),
        })
    return pd.DataFrame(rows, columns=TRIAL_COLUMNS)


def campaign_summary(df: pd.DataFrame) -> dict[str, object]:
    if df.empty:
        return {"trials": 0, "violations": 0, "query_fails": 0, "overflows": 0}
    return {
        "trials": int(len(df)),
        "algorithm": str(df["algorithm"].iloc[0]),
        "adversary": str(df["adversary"].iloc[0]),
        "violations": int(df["violations"].sum()),
        "games_with_violations": int((df["violations"] > 0).sum()),
        "query_fails": int(df["query_fails"].sum()),
        "overflows": int(df["overflows"].sum()),
        "queries": int(df["queries"].sum()),
        "max_palette_used": int(df["palette_used"].max()),
        "palette_reserved": int(df["palette_reserved"].max()),
        "max_peak_stored_edges": int(df["peak_stored_edges"].max()),
        "median_peak_stored_edges": float(df["peak_stored_edges"].median()),
        "max_peak_space_words": int(df["peak_space_words"].max()),
        "max_deg_A_sum": int(df["max_deg_A_sum"].max()),
        "max_deg_C_sum": int(df["max_deg_C_sum"].max()),
        "soft_cap_runs": int(df["soft_cap_exceeded"].sum()),
        "soft_errors": int(df["soft_errors"].sum()),
    }


def summary_markdown(summary: dict[str, object], df: pd.DataFrame, title: str) -> str:
    lines = [f"# Summary: {title}", ""]
    for k in sorted(summary):
        lines.append(f"- **{k}**: {_fmt(summary[k])}")
    bad = df[df["violations"] > 0] if not df.empty else df
    if len(bad):
        lines += ["", "## Trials with improper outputs", ""]
        for _, r in bad.iterrows():
            lines.append(f"- trial {int(r['trial'])} seed={int(r['seed'])} violations={int(r['violations'])}")
    return "\n".join(lines) + "\n"


def campaign_title(summary: dict[str, object], params: dict[str, object] | None = None) -> str:
    """Seed and parameters only, so equal campaigns write equal files."""
    head = f"{summary.get('algorithm', '-')} vs {summary.get('adversary', '-')}"
    rest = " ".join(f"{k}={_fmt(v)}" for k, v in sorted((params or {}).items()))
    return f"{head} {rest}".strip()


def write_campaign(out_dir: pathlib.Path, df: pd.DataFrame, summary: dict[str, object],
                   params: dict[str, object] | None = None) -> pathlib.Path:
    """trials.csv, summary.md and summary.txt (flat) under out_dir."""
    out_dir = pathlib.Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    df.to_csv(out_dir / "trials.csv", index=False)
    write_text(out_dir / "summary.md", summary_markdown(summary, df, campaign_title(summary, params)))
    write_text(out_dir / "summary.txt", flat_lines(summary))
    write_json(out_dir / "summary.json", summary)
    log.info(f"wrote {out_dir} trials={len(df)} violations={summary.get('violations', 0)}")
    return out_dir
