"""Command-line front end: experiment selection, execution, report emission.

    kfunlab list
    kfunlab run --suite bbm --n 1 --p 2
    kfunlab run --experiment c_alpha --out reports

Exit status: 0 when every selected experiment passes, 1 on failures (the
failing ids are listed), 2 on configuration errors (unknown ids are rejected
before any computation).  Config files use simple "key = value" lines with
optional [experiment-id] sections; command-line flags override file values.
"""

from __future__ import annotations

import argparse
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

from .experiments import (EXPERIMENTS, ConfigError, RunConfig, catalog,
                          run_experiment, suite_ids)
from .report import emit_reports, fmt


def _parse_config_file(path: str) -> dict:
    values: dict[str, str] = {}
    section = None
    for raw in Path(path).read_text().splitlines():
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("[") and line.endswith("]"):
            section = line[1:-1].strip()
            continue
        if "=" not in line:
            raise ConfigError(f"bad config line: {raw!r}")
        key, val = (part.strip() for part in line.split("=", 1))
        scoped = f"{section}.{key}" if section else key
        values[scoped] = val
    return values


def _float_tuple(text: str) -> tuple[float, ...]:
    return tuple(float(tok) for tok in text.replace(",", " ").split())


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="kfunlab",
        description="Numerical verification of K-functional inequality sharpenings and their limit formulas.")
    sub = parser.add_subparsers(dest="command", required=True)

    lst = sub.add_parser("list", help="print the experiment catalog")

    run = sub.add_parser("run", help="run experiments and write reports")
    run.add_argument("--suite", action="append", default=[],
                     help="suite name (bbm, ms, ponce, gauss, jn, mixed, semigroup, interp, all)")
    run.add_argument("--experiment", action="append", default=[], help="experiment id")
    run.add_argument("--config", help="key=value config file; flags override")
    run.add_argument("--n", type=int, choices=(1, 2), default=None, help="dimension")
    run.add_argument("--p", type=float, default=None)
    run.add_argument("--k", type=int, default=None)
    run.add_argument("--alpha", type=float, default=None)
    run.add_argument("--family", default=None,
                     help='weight family, e.g. "power:0.25", "scaled:alpha=2:eps=0.1", "log:eps=1e-3"')
    run.add_argument("--eps-grid", default=None, help="space/comma separated eps values")
    run.add_argument("--resolution", type=int, default=None, help="grid cells override")
    run.add_argument("--oracle", action="store_true",
                     help="enable brute-force cube / symbol oracles")
    run.add_argument("--corpus", default=None, help="comma-separated corpus ids")
    run.add_argument("--out", default="reports", help="output directory")
    run.add_argument("--seed", type=int, default=0, help="seed for Monte-Carlo oracles")
    run.add_argument("--jobs", type=int, default=1, help="concurrent experiment jobs")
    run.add_argument("--figures", dest="figures", action="store_true", default=True)
    run.add_argument("--no-figures", dest="figures", action="store_false",
                     help="skip PNG rendering; CSV/JSON only")
    return parser


def _resolve_ids(args) -> list[str]:
    ids: list[str] = []
    for suite in args.suite:
        ids.extend(suite_ids(suite))
    for eid in args.experiment:
        if eid not in EXPERIMENTS:
            raise ConfigError(f"unknown experiment {eid!r}")
        ids.append(eid)
    if not ids:
        ids = list(EXPERIMENTS)
    seen, ordered = set(), []
    for eid in ids:
        if eid not in seen:
            seen.add(eid)
            ordered.append(eid)
    return ordered


def _config_from_args(args, file_values: dict) -> RunConfig:
    def pick(key: str, cast, flag_value):
        if flag_value is not None:
            return flag_value
        if key in file_values:
            return cast(file_values[key])
        return None

    eps = args.eps_grid
    if eps is None and "eps_grid" in file_values:
        eps = file_values["eps_grid"]
    return RunConfig(
        n=pick("n", int, args.n) or 1,
        p=pick("p", float, args.p),
        k=pick("k", int, args.k),
        alpha=pick("alpha", float, args.alpha),
        family=pick("family", str, args.family),
        eps_grid=_float_tuple(eps) if eps else None,
        resolution=pick("resolution", int, args.resolution),
        oracle=bool(args.oracle or file_values.get("oracle", "").lower() in ("1", "true", "yes")),
        corpus_filter=tuple(args.corpus.split(",")) if args.corpus else None,
        out_dir=args.out,
        seed=pick("seed", int, args.seed if args.seed != 0 else None) or 0,
        figures=args.figures,
        jobs=pick("jobs", int, args.jobs if args.jobs != 1 else None) or 1,
    )


def run_ids(ids: list[str], config: RunConfig):
    """Execute experiments (concurrently when jobs > 1) and merge by id."""
    if config.jobs > 1:
        with ThreadPoolExecutor(max_workers=config.jobs) as pool:
            results = list(pool.map(lambda eid: run_experiment(eid, config), ids))
    else:
        results = [run_experiment(eid, config) for eid in ids]
    return sorted(results, key=lambda r: r.id)


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)

    if args.command == "list":
        for eid, theorem in catalog():
            print(f"{eid:18s} {theorem}")
        return 0

    try:
        file_values = _parse_config_file(args.config) if args.config else {}
        config = _config_from_args(args, file_values)
        ids = _resolve_ids(args)
    except (ConfigError, ValueError, OSError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2

    results = run_ids(ids, config)
    summary = emit_reports(results, config.out_dir, figures=config.figures)

    failing = [r.id for r in results if not r.passed]
    for res in results:
        head = res.primary_case()
        status = "PASS" if res.passed else "FAIL"
        detail = ""
        if head is not None:
            detail = f" target={fmt(head.target)} limit={fmt(head.limit)} rel_err={fmt(head.rel_err)}"
        print(f"{status} {res.id}{detail}")
    print(f"summary written to {summary}")
    if failing:
        print("failing experiments: " + ", ".join(failing), file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
