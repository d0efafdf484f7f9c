"""`sweep`: Monte Carlo sweep from a JSON SweepSpec into sweep.csv and summary.json."""
from __future__ import annotations

import argparse
import logging
from pathlib import Path

from robust_thresh.services.harness import emit_report, emit_traces, load_sweep_spec, run_sweep
from robust_thresh.utils.formatters import format_sweep_result

log = logging.getLogger(__name__)

CSV_FILE = "sweep.csv"


def register(subparsers: argparse._SubParsersAction) -> None:
    p = subparsers.add_parser("sweep", help="run a Monte Carlo sweep over one axis")
    p.add_argument("--config", required=True, help="sweep.json with a serialized SweepSpec")
    p.add_argument("--out-dir", required=True)
    p.add_argument("--keep-traces", action="store_true", help="write trace_{axis}_{trial}.json per trial")
    p.set_defaults(handler=run)


def run(args: argparse.Namespace) -> int:
    spec = load_sweep_spec(args.config)
    out_dir = Path(args.out_dir)
    result = run_sweep(spec, keep_traces=args.keep_traces)
    emit_report(result, out_dir / CSV_FILE)
    if args.keep_traces:
        written = emit_traces(result, out_dir)
        log.info("Wrote %d trace files to %s", written, out_dir)
    print(format_sweep_result(result))
    return 0
