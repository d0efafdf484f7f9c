"""`gen`: draw a clean dataset, corrupt it and write the dataset directory."""
from __future__ import annotations

import argparse
import logging

from robust_thresh.errors import GeneratorError
from robust_thresh.models.activation import ActivationSpec
from robust_thresh.models.synth import AdversarySpec, CovariateLaw, GeneratorSpec
from robust_thresh.services.dataset_io import save_dataset
from robust_thresh.services.synth import corrupt, generate_clean
from robust_thresh.utils.formatters import format_dataset_summary

log = logging.getLogger(__name__)


def register(subparsers: argparse._SubParsersAction) -> None:
    p = subparsers.add_parser("gen", help="generate a contaminated synthetic dataset")
    p.add_argument("--out", required=True, help="output dataset directory")
    p.add_argument("--d", type=int, default=10)
    p.add_argument("--n", type=int, default=1000)
    p.add_argument("--k", type=int, default=1)
    p.add_argument("--eps", type=float, default=0.0, help="true corruption fraction")
    p.add_argument("--nu", type=float, default=0.0, help="label noise standard deviation")
    p.add_argument("--adversary", default="none", help="none|flip:F|additive:M|oracle[:neg|random]|leverage[:mode]|covlabel:B")
    p.add_argument("--sigma", default="identity", help="identity|diag_geo:KAPPA")
    p.add_argument("--activation", default="linear")
    p.add_argument("--law", default="gaussian", choices=[law.value for law in CovariateLaw])
    p.add_argument("--w-radius", type=float, default=1.0)
    p.add_argument("--clip-covariates", type=float, default=None)
    p.add_argument("--bound", type=float, default=None, help="norm of injected covariates for covlabel")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(handler=run)


def run(args: argparse.Namespace) -> int:
    try:
        act = ActivationSpec.parse(args.activation)
        g = GeneratorSpec(
            d=args.d,
            n=args.n,
            k=args.k,
            sigma=args.sigma,
            covariate_law=CovariateLaw(args.law),
            nu=args.nu,
            w_radius=args.w_radius,
            seed=args.seed,
            clip_covariates=args.clip_covariates,
        )
        adv = AdversarySpec.parse(args.adversary, eps_true=args.eps, seed=args.seed)
        if args.bound is not None:
            adv = adv.model_copy(update={"bound": args.bound})
    except ValueError as e:
        raise GeneratorError("gen", "invalid generator options", e) from e

    ds = corrupt(generate_clean(g, act), adv)
    out = save_dataset(ds, args.out)
    print(format_dataset_summary(ds, str(out)))
    return 0
