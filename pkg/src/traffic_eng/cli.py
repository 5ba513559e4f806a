"""Command line: ``run`` an experiment grid, ``analyze`` a dataset, ``export`` analysis tables.

Exit status 0 on success, 1 on bad input (config, arguments, unpairable
data), 2 on runtime failure.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import io
import json
import logging
import sys
from pathlib import Path

from .analysis import ANALYSES, EmptySelection, MissingPairs, run_analysis
from .experiment import (
    ParseError,
    ValidationError,
    load_dataset,
    parse_config,
    run_all,
    summarize,
    write_dataset,
)

EXIT_OK, EXIT_INPUT, EXIT_RUNTIME = 0, 1, 2
FORMATS = ("csv", "json")

log = logging.getLogger("traffic_eng")


class _InputError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise _InputError(message)


def _build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="traffic_eng", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    run = sub.add_parser("run", help="expand and solve every instance of a config")
    run.add_argument("--config", required=True, type=Path)
    run.add_argument("--out", required=True, type=Path)
    run.add_argument("--workers", type=int, default=1)
    run.add_argument("--seed", type=int, default=None, help="override master_seed")

    an = sub.add_parser("analyze", help="print an analysis table as CSV")
    an.add_argument("analysis")
    an.add_argument("--dataset", required=True, type=Path)
    an.add_argument("--objective", default="LB")
    an.add_argument("--k-lo", type=int, default=3)
    an.add_argument("--k-hi", type=int, default=7)

    ex = sub.add_parser("export", help="write an analysis table to a file")
    ex.add_argument("--dataset", required=True, type=Path)
    ex.add_argument("--analysis", required=True)
    ex.add_argument("--format", required=True)
    ex.add_argument("--out", required=True, type=Path)
    ex.add_argument("--objective", default="LB")
    ex.add_argument("--k-lo", type=int, default=3)
    ex.add_argument("--k-hi", type=int, default=7)
    return p


def cmd_run(config_path: Path, output_dir: Path, workers: int = 1, seed: int | None = None) -> int:
    try:
        cfg = parse_config(config_path)
        if seed is not None:
            cfg = dataclasses.replace(cfg, master_seed=seed)
        if workers < 1:
            raise ValidationError("--workers must be >= 1")
    except (ParseError, ValidationError, OSError) as exc:
        print(f"error: {config_path}: {exc}", file=sys.stderr)
        return EXIT_INPUT
    try:
        log.info("running %d instances with %d worker(s)", cfg.instance_count, workers)
        dataset = run_all(cfg, workers)
        paths = write_dataset(dataset, output_dir)
    except Exception as exc:  # noqa: BLE001 - any failure here is a runtime failure
        print(f"error: run failed: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    print(f"wrote {len(dataset)} records to {paths['jsonl']} ({summarize(dataset)})")
    return EXIT_OK


def _rows(dataset_path: Path, analysis: str, objective: str, k_lo: int, k_hi: int) -> list[dict]:
    if analysis not in ANALYSES:
        raise _InputError(f"unknown analysis {analysis!r}; choose from {', '.join(ANALYSES)}")
    try:
        records = load_dataset(dataset_path).records
    except (OSError, ValueError) as exc:
        raise _InputError(f"cannot read dataset {dataset_path}: {exc}") from None
    try:
        return run_analysis(analysis, records, objective, k_lo, k_hi)
    except (MissingPairs, EmptySelection) as exc:
        raise _InputError(str(exc)) from None


def rows_to_csv(rows: list[dict]) -> str:
    buf = io.StringIO()
    if rows:
        writer = csv.DictWriter(buf, fieldnames=list(rows[0]), lineterminator="\n")
        writer.writeheader()
        writer.writerows(rows)
    return buf.getvalue()


def cmd_analyze(dataset: Path, analysis: str, objective: str = "LB", k_lo: int = 3, k_hi: int = 7) -> int:
    sys.stdout.write(rows_to_csv(_rows(dataset, analysis, objective, k_lo, k_hi)))
    return EXIT_OK


def cmd_export(dataset: Path, analysis: str, fmt: str, out_path: Path,
               objective: str = "LB", k_lo: int = 3, k_hi: int = 7) -> int:
    if fmt not in FORMATS:
        raise _InputError(f"unknown format {fmt!r}; choose from {', '.join(FORMATS)}")
    rows = _rows(dataset, analysis, objective, k_lo, k_hi)
    text = rows_to_csv(rows) if fmt == "csv" else json.dumps(rows, indent=2) + "\n"
    try:
        out_path.parent.mkdir(parents=True, exist_ok=True)
        out_path.write_text(text)
    except OSError as exc:
        print(f"error: cannot write {out_path}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    return EXIT_OK


def main(argv: list[str] | None = None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(message)s")
    try:
        args = _build_parser().parse_args(argv)
        if args.command == "run":
            return cmd_run(args.config, args.out, args.workers, args.seed)
        if args.command == "analyze":
            return cmd_analyze(args.dataset, args.analysis, args.objective, args.k_lo, args.k_hi)
        return cmd_export(args.dataset, args.analysis, args.format, args.out, args.objective, args.k_lo, args.k_hi)
    except _InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except SystemExit as exc:  # --help
        return int(exc.code or 0)


if __name__ == "__main__":
    sys.exit(main())
