"""Command line interface: ``run``, ``reproduce`` and ``enumerate-check``."""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import math
import sys
import time
from dataclasses import replace
from importlib import resources
from pathlib import Path

from . import mc
from .config import RunConfig, load_config, parse_config
from .errors import ACSError

log = logging.getLogger("acstrace")

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_PARTIAL = 3
EXIT_CHECK_FAILED = 4
TABLES = ("1", "2", "4")


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return "" if math.isnan(value) else repr(round(value, 10))
    return str(value)


def format_rows(rows: list[dict], fmt: str = "csv") -> str:
    """Render summary rows deterministically (LF line endings, '.' decimals)."""
    if fmt == "json":
        clean = [{k: (None if isinstance(v, float) and math.isnan(v) else v) for k, v in r.items()} for r in rows]
        return json.dumps(clean, indent=1) + "\n"
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(mc.McSummary.CSV_COLUMNS)
    for r in rows:
        writer.writerow([_fmt(r[c]) for c in mc.McSummary.CSV_COLUMNS])
    return buf.getvalue()


def preset(table: str) -> dict:
    """The bundled configuration document for a reproduction table."""
    return json.loads(resources.files("acstrace").joinpath("presets", f"table{table}.json").read_text())


def select_block(cfg: RunConfig, block: str | None) -> RunConfig:
    if block is None:
        return cfg
    chosen = tuple(sc for sc in cfg.scenarios if sc.id.split("/")[0] == block)
    if not chosen:
        names = sorted({sc.id.split("/")[0] for sc in cfg.scenarios})
        raise ACSError(f"unknown block {block!r}; choose from {', '.join(names)}")
    return replace(cfg, scenarios=chosen)


def override(cfg: RunConfig, replicates: int | None, seed: int | None) -> RunConfig:
    scen = tuple(
        replace(
            sc,
            replicates=sc.replicates if replicates is None else replicates,
            seed=sc.seed if seed is None else seed,
        )
        for sc in cfg.scenarios
    )
    for sc in scen:
        sc.validate()
    return replace(cfg, scenarios=scen)


def execute(cfg: RunConfig, out: str | None, fmt: str, workers: int | None) -> int:
    """Run every scenario, write the rows, and flag partial results on failure."""
    rows: list[dict] = []
    failures: list[dict] = []
    for sc in cfg.scenarios:
        start = time.perf_counter()
        try:
            summary = mc.run_scenario(sc, workers)
        except Exception as exc:  # keep going; the run is reported as partial
            log.error("scenario %s failed: %s", sc.id, exc)
            failures.append({"scenario_id": sc.id, "error": f"{type(exc).__name__}: {exc}"})
            continue
        log.info("%s done in %.1fs", sc.id, time.perf_counter() - start)
        rows.extend(summary.rows())
    text = format_rows(rows, fmt)
    if out is None:
        sys.stdout.write(text)
    else:
        Path(out).write_text(text, newline="")
    if failures:
        marker = {"partial": True, "completed_rows": len(rows), "failures": failures}
        if out is not None:
            Path(f"{out}.partial").write_text(json.dumps(marker, indent=1) + "\n")
        print(f"PARTIAL RESULTS: {len(failures)} scenario(s) failed", file=sys.stderr)
        return EXIT_PARTIAL
    return EXIT_OK


def cmd_run(args) -> int:
    cfg = load_config(args.config)
    cfg = override(cfg, args.replicates, args.seed)
    return execute(cfg, args.out or cfg.output_path, args.format or cfg.output_format, args.workers)


def cmd_reproduce(args) -> int:
    cfg = select_block(parse_config(preset(args.table)), args.block)
    cfg = override(cfg, args.replicates, args.seed)
    return execute(cfg, args.out, args.format or "csv", args.workers)


def cmd_enumerate_check(args) -> int:
    from .oracle import run_suite

    checks = run_suite(n_populations=args.populations, seed=args.seed, log=print)
    failed = [c for c in checks if not c.ok]
    print(f"{len(checks) - len(failed)}/{len(checks)} checks passed")
    return EXIT_CHECK_FAILED if failed else EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="acstrace", description="Adaptive network tracing simulations.")
    parser.add_argument("-v", "--verbose", action="count", default=0, help="more logging (repeatable)")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--replicates", type=int, help="override the replicate count of every scenario")
        p.add_argument("--seed", type=int, help="override the master seed of every scenario")
        p.add_argument("--out", help="output file (default: standard output)")
        p.add_argument("--format", choices=("csv", "json"))
        p.add_argument("--workers", type=int, help=f"worker processes (default: ${mc.WORKERS_ENV} or 1)")

    p = sub.add_parser("run", help="run the scenarios of a JSON configuration")
    p.add_argument("config")
    common(p)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("reproduce", help="run a bundled reproduction preset")
    p.add_argument("--table", required=True, choices=TABLES)
    p.add_argument("--block", help="restrict to one block, e.g. srs-m1000")
    common(p)
    p.set_defaults(func=cmd_reproduce)

    p = sub.add_parser("enumerate-check", help="exhaustive-enumeration checks on toy populations")
    p.add_argument("--populations", type=int, default=24)
    p.add_argument("--seed", type=int, default=20200)
    p.set_defaults(func=cmd_enumerate_check)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    level = (logging.WARNING, logging.INFO, logging.DEBUG)[min(args.verbose, 2)]
    logging.basicConfig(level=level, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except ACSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
