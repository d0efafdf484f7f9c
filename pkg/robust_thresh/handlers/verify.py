"""`verify`: run one concentration-lab check and write lab.json."""
from __future__ import annotations

import argparse
import json
import logging
import math
from pathlib import Path
from typing import Any

from robust_thresh.errors import LabParameterError, ReportIOError
from robust_thresh.models.lab import LabReport
from robust_thresh.models.synth import GeneratorSpec
from robust_thresh.services.concentration_lab import LEMMAS, run_lemma
from robust_thresh.services.synth import resolve_sigma
from robust_thresh.utils.formatters import format_lab_report

log = logging.getLogger(__name__)

# which keyword each check uses for its Monte Carlo count
TRIAL_PARAM = {
    "chi2_subset": "trials",
    "subset_eigs": "trials",
    "halfspace": "mc_samples",
    "scaled_gauss": "trials",
    "key_step": "instances",
    "helpers": "instances",
    "chi2_tail": "trials",
    "random_init": "trials",
    "hypercontractivity": "samples",
    "halfspace_scaling": "repeats",
}

DEFAULTS: dict[str, dict[str, Any]] = {
    "chi2_subset": {"n": 10_000, "eps": 0.1, "nu": 1.0, "trials": 100},
    "subset_eigs": {"n": 5000, "d": 20, "eps": 0.1, "sigma_matrix": None, "trials": 5},
    "halfspace": {"theta": math.pi / 6, "mc_samples": 1_000_000},
    "scaled_gauss": {"k": 3, "n": 20, "m": 20, "l": 3, "nu": 1.0, "trials": 1000},
    "key_step": {},
    "helpers": {},
    "chi2_tail": {"n": 100, "nu": 1.0, "x": 2.0, "trials": 10_000},
    "random_init": {"d": 10},
    "hypercontractivity": {"d": 10},
    "halfspace_scaling": {"theta": math.pi / 6},
}


def register(subparsers: argparse._SubParsersAction) -> None:
    p = subparsers.add_parser("verify", help="empirically check a concentration bound")
    p.add_argument("--lemma", required=True, choices=list(LEMMAS))
    p.add_argument("--params", default="", help="key=value,... passed to the check")
    p.add_argument("--trials", type=int, default=None)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=None, help="lab.json path")
    p.set_defaults(handler=run)


def _scalar(raw: str) -> Any:
    for cast in (int, float):
        try:
            return cast(raw)
        except ValueError:
            continue
    if raw.lower() in ("none", "null"):
        return None
    return raw


def parse_params(raw: str) -> dict[str, Any]:
    """``n=100,eps=0.1,sample_sizes=1000;4000``; ``;`` separates list items."""
    params: dict[str, Any] = {}
    for item in filter(None, (part.strip() for part in raw.split(","))):
        key, sep, value = item.partition("=")
        if not sep or not key:
            raise LabParameterError("verify", f"expected key=value, got {item!r}")
        key = key.strip().replace("-", "_")
        value = value.strip()
        params[key] = tuple(_scalar(v) for v in value.split(";")) if ";" in value else _scalar(value)
    return params


def lemma_kwargs(lemma: str, params: dict[str, Any], trials: int | None, seed: int) -> dict[str, Any]:
    kwargs = {**DEFAULTS[lemma], **params, "seed": seed}
    if trials is not None:
        kwargs[TRIAL_PARAM[lemma]] = trials
    sigma = kwargs.pop("sigma", None)
    if lemma == "subset_eigs" and sigma is not None:
        try:
            kwargs["sigma_matrix"] = resolve_sigma(GeneratorSpec(d=int(kwargs["d"]), sigma=str(sigma)))
        except ValueError as e:
            raise LabParameterError("verify", f"bad sigma {sigma!r}", e) from e
    elif sigma is not None:
        raise LabParameterError("verify", f"{lemma} takes no sigma parameter")
    return kwargs


def write_lab_report(report: LabReport, path: str | Path) -> None:
    out = Path(path)
    try:
        out.parent.mkdir(parents=True, exist_ok=True)
        payload = report.model_dump(mode="json", by_alias=True)
        out.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    except OSError as e:
        raise ReportIOError(str(out), e) from e


def run(args: argparse.Namespace) -> int:
    kwargs = lemma_kwargs(args.lemma, parse_params(args.params), args.trials, args.seed)
    log.info("Running %s with %s", args.lemma, {k: v for k, v in kwargs.items() if k != "sigma_matrix"})
    report = run_lemma(args.lemma, **kwargs)
    if args.out:
        write_lab_report(report, args.out)
    print(format_lab_report(report))
    return 0 if report.all_passed else 2
