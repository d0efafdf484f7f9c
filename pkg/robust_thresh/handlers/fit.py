"""`fit`: run one estimator on a dataset directory and write report.json."""
from __future__ import annotations

import argparse
import json
import logging
from pathlib import Path

from robust_thresh.errors import FitConfigError, ReportIOError
from robust_thresh.models.activation import ActivationSpec
from robust_thresh.models.fit import FitConfig, FitReport, InitSpec
from robust_thresh.services.dataset_io import load_dataset
from robust_thresh.services.estimators import fit_linear_it, fit_neuron_it, fit_ols, fit_torrent_fc
from robust_thresh.utils.formatters import format_fit_report

log = logging.getLogger(__name__)

ALGOS = ("linear_it", "neuron_it", "torrent_fc", "ols")


def register(subparsers: argparse._SubParsersAction) -> None:
    p = subparsers.add_parser("fit", help="fit a robust estimator to a dataset directory")
    p.add_argument("--data", required=True, help="dataset directory written by gen")
    p.add_argument("--algo", default="linear_it", choices=ALGOS)
    p.add_argument("--activation", default=None, help="defaults to the activation stored with the data")
    p.add_argument("--eps-alg", type=float, default=0.1)
    p.add_argument("--eta", default="auto", help="auto or a positive step size")
    p.add_argument("--max-iters", default="auto", help="auto or an iteration cap")
    p.add_argument("--restarts", type=int, default=None)
    p.add_argument("--init", default="zero", help="zero|random_ball[:ALPHA]")
    p.add_argument("--radius-ref", default="ols", help="ols|truth|VALUE")
    p.add_argument("--target-tol", type=float, default=None)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=None, help="report.json path")
    p.set_defaults(handler=run)


def _auto_or(raw: str, cast: type) -> float | int | str:
    return "auto" if raw == "auto" else cast(raw)


def _radius_ref(raw: str) -> str | float:
    return raw if raw in ("ols", "truth") else float(raw)


def build_config(args: argparse.Namespace) -> FitConfig:
    try:
        return FitConfig(
            eps_alg=args.eps_alg,
            eta=_auto_or(args.eta, float),
            max_iters=_auto_or(args.max_iters, int),
            target_tol=args.target_tol,
            init=InitSpec.parse(args.init),
            seed=args.seed,
            restarts=args.restarts,
            radius_ref=_radius_ref(args.radius_ref),
        )
    except ValueError as e:
        raise FitConfigError("fit", "invalid fit options", e) from e


def write_report(report: FitReport, path: str | Path) -> None:
    out = Path(path)
    try:
        out.parent.mkdir(parents=True, exist_ok=True)
        out.write_text(json.dumps(report.to_dict(), indent=2, sort_keys=True) + "\n", encoding="utf-8")
    except OSError as e:
        raise ReportIOError(str(out), e) from e


def run(args: argparse.Namespace) -> int:
    cfg = build_config(args)
    ds = load_dataset(args.data)
    try:
        act = ActivationSpec.parse(args.activation or ds.meta.activation)
    except ValueError as e:
        raise FitConfigError("fit", f"unknown activation {args.activation!r}", e) from e

    if args.algo == "neuron_it":
        report = fit_neuron_it(ds, act, cfg)
    elif args.algo == "torrent_fc":
        report = fit_torrent_fc(ds, cfg)
    elif args.algo == "ols":
        report = fit_ols(ds, cfg)
    else:
        if not act.is_linear:
            log.warning("linear_it ignores activation %s; use --algo neuron_it", act.label)
        report = fit_linear_it(ds, cfg)

    if args.out:
        write_report(report, args.out)
    print(format_fit_report(report))
    return 0
