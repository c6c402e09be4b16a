"""Report emission: aggregate CSV, per-experiment JSON, and figures.

The summary CSV is the canonical machine-readable output: one aggregate row
per experiment plus one row per case (id suffixed '#case-i'), all numbers at
12 significant digits so reruns diff cleanly.  Figures render each recorded
sweep (value against eps with the target line) as a PNG next to the CSV.
"""

from __future__ import annotations

import json
import math
import os
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

from .experiments import ExperimentResult


def fmt(x) -> str:
    if x is None:
        return ""
    x = float(x)
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return f"{x:.12g}"


SUMMARY_COLUMNS = ("id", "theorem", "target", "limit", "rel_err", "rate", "verdict")


def summary_rows(results: list[ExperimentResult]) -> list[tuple[str, ...]]:
    rows = [SUMMARY_COLUMNS]
    for res in sorted(results, key=lambda r: r.id):
        head = res.primary_case()
        rows.append((
            res.id, res.theorem,
            fmt(head.target) if head else "",
            fmt(head.limit) if head else "",
            fmt(head.rel_err) if head else "",
            fmt(head.rate) if head and head.rate is not None else "",
            "PASS" if res.passed else "FAIL",
        ))
        for i, case in enumerate(res.cases):
            rows.append((
                f"{res.id}#case-{i}", case.case, fmt(case.target), fmt(case.limit),
                fmt(case.rel_err), fmt(case.rate) if case.rate is not None else "",
                "PASS" if case.passed else "FAIL",
            ))
    return rows


def write_summary_csv(results: list[ExperimentResult], path: Path) -> None:
    lines = [",".join('"%s"' % col.replace('"', '""') if ("," in col or '"' in col) else col
                      for col in row)
             for row in summary_rows(results)]
    path.write_text("\n".join(lines) + "\n")


def write_experiment_json(res: ExperimentResult, path: Path) -> None:
    path.write_text(json.dumps(res.to_dict(), indent=2, sort_keys=True) + "\n")


def render_figures(res: ExperimentResult, out_dir: Path) -> list[Path]:
    """One PNG per experiment: all recorded sweeps on a log-eps axis."""
    if not res.sweeps:
        return []
    fig, ax = plt.subplots(figsize=(6.4, 4.2))
    for sweep in res.sweeps:
        eps = sweep["eps"]
        vals = sweep["values"]
        finite = [(e, v) for e, v in zip(eps, vals) if v is not None and math.isfinite(v)]
        if not finite:
            continue
        xs, ys = zip(*finite)
        ax.plot(xs, ys, marker="o", markersize=3, linewidth=1, label=sweep["name"][:42])
        if sweep.get("target") is not None and math.isfinite(sweep["target"]):
            ax.axhline(sweep["target"], color="gray", linewidth=0.6, linestyle=":")
    ax.set_xscale("log")
    ax.set_xlabel("eps")
    ax.set_ylabel("functional value")
    ax.set_title(f"{res.id}: sweeps vs targets (dotted)")
    if len(res.sweeps) <= 10:
        ax.legend(fontsize=7, loc="best")
    fig.tight_layout()
    path = out_dir / f"{res.id}.png"
    fig.savefig(path, dpi=110)
    plt.close(fig)
    return [path]


def emit_reports(results: list[ExperimentResult], out_dir: str, figures: bool = True) -> Path:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    write_summary_csv(results, out / "summary.csv")
    for res in results:
        write_experiment_json(res, out / f"{res.id}.json")
        if figures:
            render_figures(res, out)
    return out / "summary.csv"
