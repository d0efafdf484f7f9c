"""Monte Carlo sweeps: generate, corrupt, fit, compare against baselines, summarize.

Trials fan out to a thread pool; results are reduced in (axis index, trial)
order so the emitted files depend only on the SweepSpec.
"""
from __future__ import annotations

import csv
import json
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Any

import numpy as np
from pydantic import ValidationError

from robust_thresh.config import settings
from robust_thresh.errors import DatasetFormatError, ReportIOError, RobustThreshError, SweepTrialError
from robust_thresh.models.dataset import Dataset
from robust_thresh.models.fit import FitReport
from robust_thresh.models.sweep import (
    CSV_COLUMNS,
    AxisKind,
    ScalingFit,
    ScalingModel,
    SweepResult,
    SweepRow,
    SweepSpec,
    TrialOutcome,
)
from robust_thresh.models.synth import AdversarySpec, GeneratorSpec
from robust_thresh.services.estimators import fit_linear_it, fit_neuron_it, fit_torrent_fc, ols_full_solve
from robust_thresh.services.synth import corrupt, generate_clean

log = logging.getLogger(__name__)

SUMMARY_FILE = "summary.json"


def load_sweep_spec(path: str | Path) -> SweepSpec:
    try:
        return SweepSpec.model_validate_json(Path(path).read_text(encoding="utf-8"))
    except (OSError, ValidationError) as e:
        raise DatasetFormatError("sweep", f"cannot read sweep config {path}", e) from e


def _point(spec: SweepSpec, value: float) -> tuple[GeneratorSpec, AdversarySpec, float]:
    """Generator, adversary and eps_alg for one axis value."""
    gen, adv = spec.base_generator, spec.base_adversary
    kind = spec.sweep_axis.kind
    if kind is AxisKind.EPS:
        adv = adv.model_copy(update={"eps_true": value})
    elif kind is AxisKind.NU:
        gen = gen.model_copy(update={"nu": value})
    elif kind is AxisKind.KAPPA:
        gen = gen.model_copy(update={"sigma": f"diag_geo:{float(value)!r}"})
    else:
        gen = gen.model_copy(update={"n": int(value)})

    if spec.eps_alg_ratio is not None:
        eps_alg = min(spec.eps_alg_ratio * adv.eps_true, 0.499)
    elif kind is AxisKind.EPS:
        eps_alg = adv.eps_true
    else:
        eps_alg = spec.base_fit.eps_alg
    return gen, adv, eps_alg


def _trial_seeds(spec: SweepSpec, axis_index: int, trial: int) -> tuple[int, int, int]:
    state = np.random.SeedSequence([spec.seed, axis_index, trial]).generate_state(3, np.uint32)
    return int(state[0]), int(state[1]), int(state[2])


def _fit(spec: SweepSpec, ds: Dataset, cfg: Any) -> FitReport:
    algo = spec.estimator
    if algo == "torrent_fc":
        return fit_torrent_fc(ds, cfg)
    if algo == "neuron_it":
        return fit_neuron_it(ds, spec.activation, cfg)
    return fit_linear_it(ds, cfg)


def _inliers_only(ds: Dataset) -> Dataset:
    keep = np.flatnonzero(ds.inlier_mask)
    return Dataset.build(ds.covariates[:, keep], ds.targets[:, keep], None, ds.meta.model_copy(update={"eps": 0.0}))


def run_trial(spec: SweepSpec, axis_index: int, trial: int, keep_report: bool = False) -> TrialOutcome:
    value = spec.sweep_axis.values[axis_index]
    gen, adv, eps_alg = _point(spec, value)
    gen_seed, adv_seed, fit_seed = _trial_seeds(spec, axis_index, trial)
    try:
        clean = generate_clean(gen.model_copy(update={"seed": gen_seed}), spec.activation)
        ds = corrupt(clean, adv.model_copy(update={"seed": adv_seed}))
        cfg = spec.base_fit.model_copy(update={"eps_alg": eps_alg, "seed": fit_seed})
        report = _fit(spec, ds, cfg)
        truth = ds.w_true
        ols_error = ols_full_solve(ds, "all").error_to(truth)
        if spec.activation.is_linear:
            oracle_error = ols_full_solve(ds, "true_inliers").error_to(truth)
        else:
            oracle_cfg = cfg.model_copy(update={"eps_alg": 0.0})
            oracle_error = _fit(spec, _inliers_only(ds), oracle_cfg).estimate.error_to(truth)
    except RobustThreshError as e:
        raise SweepTrialError(value, trial, e) from e

    tp, _ = report.retained.composition(ds.inlier_mask) if report.retained is not None else (None, None)
    return TrialOutcome(
        axis_index=axis_index,
        trial=trial,
        error=report.estimate.error_to(truth),
        iterations=report.iterations,
        converged=report.converged,
        inliers_retained=tp,
        retained_size=report.retained.size if report.retained is not None else ds.n_samples,
        ols_error=ols_error,
        oracle_error=oracle_error,
        report=report if keep_report else None,
    )


def _row(value: float, outcomes: list[TrialOutcome], n_samples: int) -> SweepRow:
    errors = np.array([o.error for o in outcomes])
    lo, hi = np.percentile(errors, [25.0, 75.0])
    precisions = [o.inliers_retained / o.retained_size for o in outcomes if o.inliers_retained is not None]
    fractions = [o.inliers_retained / n_samples for o in outcomes if o.converged and o.inliers_retained is not None]
    return SweepRow(
        axis_value=value,
        median_error=float(np.median(errors)),
        iqr_lo=float(lo),
        iqr_hi=float(hi),
        mean_iterations=float(np.mean([o.iterations for o in outcomes])),
        inlier_precision=float(np.mean(precisions)) if precisions else math.nan,
        baseline_ols_error=float(np.median([o.ols_error for o in outcomes])),
        oracle_error=float(np.median([o.oracle_error for o in outcomes])),
        trials=len(outcomes),
        converged_trials=sum(1 for o in outcomes if o.converged),
        min_inlier_fraction=min(fractions) if fractions else math.nan,
    )


def scaling_shape(model: ScalingModel, eps: float) -> float:
    if eps <= 0.0:
        return 0.0
    base = eps * math.log(1.0 / eps)
    return base if model is ScalingModel.EPS_LOG else math.sqrt(base)


def fit_scaling(spec: SweepSpec, rows: list[SweepRow]) -> ScalingFit:
    """Least squares in log space for error = C * nu * f(eps)."""
    model = ScalingModel.EPS_LOG if spec.activation.is_linear else ScalingModel.SQRT_EPS_LOG
    log_err, log_f = [], []
    for row in rows:
        gen, adv, _ = _point(spec, row.axis_value)
        f = gen.nu * scaling_shape(model, adv.eps_true)
        if f > 0.0 and row.median_error > 0.0:
            log_err.append(math.log(row.median_error))
            log_f.append(math.log(f))
    if not log_err:
        return ScalingFit(model=model, constant=math.nan, r_squared=0.0, points_used=0)
    le, lf = np.array(log_err), np.array(log_f)
    log_c = float(np.mean(le - lf))
    ss_res = float(np.sum((le - log_c - lf) ** 2))
    ss_tot = float(np.sum((le - le.mean()) ** 2))
    r2 = (1.0 if ss_res == 0.0 else 0.0) if ss_tot == 0.0 else 1.0 - ss_res / ss_tot
    return ScalingFit(model=model, constant=math.exp(log_c), r_squared=min(1.0, max(0.0, r2)), points_used=len(le))


def run_sweep(spec: SweepSpec, keep_traces: bool = False) -> SweepResult:
    values = spec.sweep_axis.values
    jobs = [(a, t) for a in range(len(values)) for t in range(spec.trials_per_point)]
    log.info(
        "Sweep over %s=%s with %d trials per point (%s, act=%s)",
        spec.sweep_axis.kind.value, values, spec.trials_per_point, spec.estimator, spec.activation.label,
    )
    with ThreadPoolExecutor(max_workers=settings.workers) as pool:
        outcomes = list(pool.map(lambda job: run_trial(spec, job[0], job[1], keep_traces), jobs))

    rows: list[SweepRow] = []
    for a, value in enumerate(values):
        mine = [o for o in outcomes if o.axis_index == a]
        n_samples = _point(spec, value)[0].n
        rows.append(_row(value, mine, n_samples))
        log.info("  %s=%g: median error %.4g (ols %.4g, oracle %.4g)", spec.sweep_axis.kind.value, value,
                 rows[-1].median_error, rows[-1].baseline_ols_error, rows[-1].oracle_error)
    return SweepResult(
        rows=rows,
        fitted_scaling=fit_scaling(spec, rows),
        axis=spec.sweep_axis.kind,
        estimator=spec.estimator,
        outcomes=outcomes,
    )


def _num(v: float) -> str:
    return format(v, ".17g")


def _json_num(v: float) -> float | None:
    return v if math.isfinite(v) else None


def summary_dict(res: SweepResult) -> dict[str, Any]:
    fit = res.fitted_scaling
    return {
        "axis": res.axis.value,
        "estimator": res.estimator,
        "fitted_scaling": {
            "model": fit.model.value,
            "constant": _json_num(fit.constant),
            "r_squared": fit.r_squared,
            "points_used": fit.points_used,
        },
        "rows": [
            {
                "axis_value": r.axis_value,
                "median_error": _json_num(r.median_error),
                "iqr_error": _json_num(r.iqr_error),
                "mean_iterations": r.mean_iterations,
                "inlier_precision": _json_num(r.inlier_precision),
                "baseline_ols_error": _json_num(r.baseline_ols_error),
                "oracle_error": _json_num(r.oracle_error),
                "trials": r.trials,
                "converged_trials": r.converged_trials,
                "min_inlier_fraction": _json_num(r.min_inlier_fraction),
            }
            for r in res.rows
        ],
    }


def emit_report(res: SweepResult, path: str | Path) -> None:
    """Write the CSV at ``path`` and summary.json next to it; overwrites."""
    csv_path = Path(path)
    summary_path = csv_path.with_name(SUMMARY_FILE)
    try:
        csv_path.parent.mkdir(parents=True, exist_ok=True)
        with csv_path.open("w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(CSV_COLUMNS)
            for row in res.rows:
                writer.writerow([_num(v) for v in row.csv_values])
        summary_path.write_text(json.dumps(summary_dict(res), indent=2, sort_keys=True) + "\n", encoding="utf-8")
    except OSError as e:
        raise ReportIOError(str(csv_path), e) from e
    log.info("Wrote %d sweep rows to %s", len(res.rows), csv_path)


def emit_traces(res: SweepResult, out_dir: str | Path) -> int:
    out = Path(out_dir)
    written = 0
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as e:
        raise ReportIOError(str(out), e) from e
    for o in res.outcomes:
        if o.report is None:
            continue
        path = out / f"trace_{o.axis_index}_{o.trial}.json"
        try:
            path.write_text(json.dumps(o.report.to_dict(), indent=2, sort_keys=True) + "\n", encoding="utf-8")
        except OSError as e:
            raise ReportIOError(str(path), e) from e
        written += 1
    return written
