"""Command-line entry point.

Exit codes: 0 success, 1 usage or configuration error, 2 data error,
3 numeric failure inside a sampler.  Errors are printed to stderr as a JSON
record naming the failing module.
"""
from __future__ import annotations

import argparse
import sys
from dataclasses import replace
from typing import Optional, Sequence

from .config import RunConfig, load_config, to_ini
from .errors import PPMError, UsageError
from .io import dumps_report, load_returns
from .jobs import COMMANDS, run_job


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message, module="cli")


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(
        prog="ppmvar",
        description="Bayesian Value-at-Risk with product partition models.",
        epilog="Config sections and keys: see `ppmvar --print-config` for every key with its default.",
    )
    p.add_argument("--command", choices=COMMANDS, help="job to run")
    p.add_argument("--input", help="delimited text file with a header row")
    p.add_argument("--format", choices=("prices", "returns"), default="returns",
                   help="prices are turned into log returns (default: returns)")
    p.add_argument("--column", help="value column (default: Adj Close / Close or return)")
    p.add_argument("--date-column", help="ISO-8601 date column (default: Date if present)")
    p.add_argument("--config", help="INI config file")
    p.add_argument("--seed", type=int, help="override [mcmc] seed")
    p.add_argument("--horizon", type=int, help="override [run] horizon_days")
    p.add_argument("--output", help="directory for report and tables; report goes to stdout if omitted")
    p.add_argument("--print-config", action="store_true", help="print the effective config and exit")
    return p


def _config(args) -> RunConfig:
    cfg = load_config(args.config) if args.config else RunConfig()
    if args.seed is not None:
        if args.seed < 0:
            raise UsageError("seed must be nonnegative", module="cli")
        cfg = cfg.with_seed(args.seed)
    if args.horizon is not None:
        cfg = replace(cfg, run=replace(cfg.run, horizon_days=args.horizon))
    return cfg


def main(argv: Optional[Sequence[str]] = None) -> int:
    try:
        args = build_parser().parse_args(argv)
        cfg = _config(args)
        if args.print_config:
            sys.stdout.write(to_ini(cfg))
            return 0
        if not args.command or not args.input:
            raise UsageError("--command and --input are required", module="cli")
        series = load_returns(args.input, args.format, args.column, args.date_column)
        result = run_job(cfg, args.command, series, args.output)
        if args.output is None:
            sys.stdout.write(dumps_report(result.report))
        return 0
    except PPMError as exc:
        sys.stderr.write(dumps_report(exc.record()))
        return exc.exit_code


if __name__ == "__main__":
    sys.exit(main())
