"""Entry point: `python -m robust_thresh.main gen|fit|verify|sweep`."""
from __future__ import annotations

import argparse
import logging
import sys

from robust_thresh.config import PACKAGE_VERSION, settings
from robust_thresh.errors import RobustThreshError
from robust_thresh.handlers import fit, gen, sweep, verify


def setup_logging() -> None:
    level = logging.DEBUG if settings.debug else logging.INFO
    logging.basicConfig(
        level=level,
        format="%(asctime)s | %(levelname)-7s | %(name)s | %(message)s",
        stream=sys.stdout,
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="robust-thresh",
        description="Robust regression by iterative hard thresholding under strong contamination.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {PACKAGE_VERSION}")
    parser.add_argument("--debug", action="store_true", help="log every iteration")
    parser.add_argument("--workers", type=int, default=None, help="thread pool size")
    subparsers = parser.add_subparsers(dest="command", required=True)
    for handler in (gen, fit, verify, sweep):
        handler.register(subparsers)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    if args.debug:
        settings.debug = True
    if args.workers is not None:
        settings.workers = max(1, args.workers)
    setup_logging()
    log = logging.getLogger(__name__)

    try:
        return args.handler(args)
    except RobustThreshError as e:
        log.error("%s failed: %s", args.command, e)
        print(e.user_message(), file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
