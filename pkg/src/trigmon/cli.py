"""Command-line front end.

    trigmon run SCENARIO [--seed S] [--out FILE] [--csv FILE] [--event-log FILE]
    trigmon sweep SWEEP [--out FILE] [--csv FILE] [--parallel P]
    trigmon validate FILE

Metrics are written as JSON lines, one record per scenario run. Exit status is
0 on success, 1 for configuration errors and 2 for runtime failures.
``TRIGMON_PARALLEL`` sets the default sweep parallelism.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from typing import Any, Dict, List, Optional, Sequence

from .config import expand_sweep, is_sweep, load_document, scenario_from_dict, scenario_to_dict, sweep_from_dict
from .errors import ConfigError
from .sim import METRIC_FIELDS, run_scenario

EXIT_OK, EXIT_CONFIG, EXIT_RUNTIME = 0, 1, 2


def make_record(cell_index: int, seed: int, axes: Dict[str, Any], config: Dict[str, Any], report) -> Dict[str, Any]:
    return {
        "cell_index": cell_index,
        "seed": seed,
        "axes": axes,
        "config": config,
        "metrics": report.to_dict(),
    }


def dumps_record(record) -> str:
    return json.dumps(record, sort_keys=True, separators=(",", ":"))


def _flatten(prefix: str, value, out: Dict[str, Any]):
    if isinstance(value, dict):
        for k in sorted(value):
            _flatten(f"{prefix}.{k}", value[k], out)
    elif isinstance(value, list):
        out[prefix] = json.dumps(value, separators=(",", ":"))
    else:
        out[prefix] = value


def csv_rows(records: Sequence[Dict[str, Any]]) -> str:
    """Flat table: ``cell_index, seed``, sorted ``config.*`` leaves, then
    ``metrics.*`` in report field order. Lists are JSON-encoded cells."""
    rows = []
    for rec in records:
        row: Dict[str, Any] = {"cell_index": rec["cell_index"], "seed": rec["seed"]}
        cfg: Dict[str, Any] = {}
        _flatten("config", rec["config"], cfg)
        row.update(sorted(cfg.items()))
        for name in METRIC_FIELDS:
            v = rec["metrics"][name]
            row[f"metrics.{name}"] = json.dumps(v, separators=(",", ":")) if isinstance(v, list) else v
        rows.append(row)
    buf = io.StringIO()
    columns: List[str] = []
    for row in rows:
        columns.extend(c for c in row if c not in columns)
    writer = csv.DictWriter(buf, fieldnames=columns, lineterminator="\n")
    writer.writeheader()
    writer.writerows(rows)
    return buf.getvalue()


def _run_cell(cell) -> str:
    report = run_scenario(scenario_from_dict(cell.config))
    return dumps_record(make_record(cell.index, cell.seed, cell.axes, cell.config, report))


def run_sweep_lines(spec, parallel: int = 1) -> List[str]:
    cells = expand_sweep(spec)
    if parallel <= 1 or len(cells) <= 1:
        return [_run_cell(c) for c in cells]
    with ProcessPoolExecutor(max_workers=parallel) as pool:
        return list(pool.map(_run_cell, cells))


def _write(path: Optional[str], text: str):
    if path is None or path == "-":
        sys.stdout.write(text)
    else:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)


def _default_parallel() -> int:
    try:
        return max(1, int(os.environ.get("TRIGMON_PARALLEL", "1")))
    except ValueError:
        return 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="trigmon", description="Change-triggered distributed monitoring simulator")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run one scenario")
    run.add_argument("scenario")
    run.add_argument("--seed", type=int, default=None)
    run.add_argument("--out", default=None)
    run.add_argument("--csv", default=None, help="also write a flat CSV table")
    run.add_argument("--event-log", default=None, help="write one JSON line per message")

    sweep = sub.add_parser("sweep", help="run a parameter sweep")
    sweep.add_argument("sweep")
    sweep.add_argument("--out", default=None)
    sweep.add_argument("--csv", default=None)
    sweep.add_argument("--parallel", type=int, default=None)

    val = sub.add_parser("validate", help="check a scenario or sweep file")
    val.add_argument("file")
    return parser


def _cmd_run(args) -> int:
    doc = load_document(args.scenario)
    if args.seed is not None:
        doc = {**doc, "seed": args.seed}
    cfg = scenario_from_dict(doc)
    report, log, _ = run_scenario(cfg, return_log=True)
    record = make_record(0, cfg.seed, {}, scenario_to_dict(cfg), report)
    _write(args.out, dumps_record(record) + "\n")
    if args.csv:
        _write(args.csv, csv_rows([record]))
    if args.event_log:
        _write(args.event_log, "".join(line + "\n" for line in log.event_log_lines()))
    return EXIT_OK


def _cmd_sweep(args) -> int:
    spec = sweep_from_dict(load_document(args.sweep))
    parallel = args.parallel if args.parallel is not None else _default_parallel()
    lines = run_sweep_lines(spec, parallel)
    _write(args.out, "".join(line + "\n" for line in lines))
    if args.csv:
        _write(args.csv, csv_rows([json.loads(line) for line in lines]))
    return EXIT_OK


def _cmd_validate(args) -> int:
    doc = load_document(args.file)
    if is_sweep(doc):
        spec = sweep_from_dict(doc)
        print(f"ok: sweep with {len(expand_sweep(spec))} cells")
    else:
        scenario_from_dict(doc)
        print("ok: scenario")
    return EXIT_OK


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    handler = {"run": _cmd_run, "sweep": _cmd_sweep, "validate": _cmd_validate}[args.command]
    try:
        return handler(args)
    except ConfigError as exc:
        where = ", ".join(exc.fields)
        print(f"config error [{where}]: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except Exception as exc:  # noqa: BLE001 - any simulation failure maps to exit 2
        print(f"runtime error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


run_cli = main
