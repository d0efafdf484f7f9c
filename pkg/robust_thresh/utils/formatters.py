"""Plain-text CLI summaries: dataset headers, fit traces, lab verdicts, sweep tables."""
from __future__ import annotations

import math

from robust_thresh.models.dataset import Dataset
from robust_thresh.models.fit import FitReport
from robust_thresh.models.lab import LabReport
from robust_thresh.models.sweep import SweepResult


def progress_bar(current: float, maximum: float, length: int = 20) -> str:
    if maximum <= 0 or not math.isfinite(current):
        return "." * length
    ratio = max(0.0, min(1.0, current / maximum))
    filled = round(ratio * length)
    return "#" * filled + "." * (length - filled)


def _g(v: float | None, digits: int = 4) -> str:
    if v is None or (isinstance(v, float) and math.isnan(v)):
        return "-"
    return f"{v:.{digits}g}"


def format_dataset_summary(ds: Dataset, path: str = "") -> str:
    meta = ds.meta
    outliers = 0 if ds.inlier_mask is None else int((~ds.inlier_mask).sum())
    lines = [
        f"Dataset {path}".rstrip(),
        f"  d={ds.dim}  N={ds.n_samples}  K={ds.n_outputs}  sigma={meta.sigma_desc}  law={meta.law}",
        f"  nu={_g(meta.nu)}  eps={_g(meta.eps)}  adversary={meta.adversary}  corrupted={outliers}",
        f"  activation={meta.activation}  B={_g(meta.B)}  seed={meta.seed}",
    ]
    return "\n".join(lines)


def format_fit_report(report: FitReport, tail: int = 5) -> str:
    plan = report.step_plan
    status = "converged" if report.converged else "stopped at t_max"
    lines = [f"{report.algo} ({report.activation}): {status} after {report.iterations} iterations"]
    if plan is not None:
        lines.append(f"  eta={_g(plan.eta)} [{plan.eta_rule}]  t_max={plan.t_max}  radius_ref={_g(plan.radius_ref)}")
        if plan.spectrum is not None:
            s = plan.spectrum
            lines.append(f"  spectrum: lambda_min={_g(s.lambda_min)} lambda_max={_g(s.lambda_max)} kappa={_g(s.kappa)}")
    if len(report.restart_losses) > 1:
        losses = ", ".join(_g(v) for v in report.restart_losses)
        lines.append(f"  restarts: [{losses}] -> #{report.restart_index}")
    lines.append(f"  final loss={_g(report.final_loss, 6)}  error={_g(report.final_error, 6)}")
    if report.trace:
        lines.append("  iter  loss_on_retained  param_change  tp/fp")
        for r in report.trace[-tail:]:
            comp = "-" if r.retained_true_positives is None else f"{r.retained_true_positives}/{r.retained_false_positives}"
            lines.append(f"  {r.iter:>4}  {_g(r.loss_on_retained, 8):>16}  {_g(r.param_change, 4):>12}  {comp}")
    return "\n".join(lines)


def format_lab_report(report: LabReport) -> str:
    verdict = "PASS" if report.passed else "FAIL"
    sign = "<=" if report.bound_kind == "upper" else ">="
    lines = [
        f"{report.lemma_id}: {verdict}  stat={_g(report.empirical_stat, 6)} {sign} bound={_g(report.paper_bound, 6)}"
        f"  ({report.trials} trials)",
    ]
    if report.oracle_stat is not None:
        lines.append(f"  oracle={_g(report.oracle_stat, 6)}")
    for c in report.checks:
        s = "<=" if c.kind == "upper" else ">="
        lines.append(f"  {c.name}: {'ok' if c.passed else 'violated'}  {_g(c.stat, 6)} {s} {_g(c.bound, 6)}")
    return "\n".join(lines)


def format_sweep_result(res: SweepResult) -> str:
    fit = res.fitted_scaling
    header = f"{res.axis.value:>10}  {'median':>10}  {'iqr':>10}  {'ols':>10}  {'oracle':>10}  {'iters':>6}  precision"
    lines = [f"Sweep over {res.axis.value} ({res.estimator})", header]
    for r in res.rows:
        lines.append(
            f"{r.axis_value:>10.4g}  {_g(r.median_error):>10}  {_g(r.iqr_error):>10}  {_g(r.baseline_ols_error):>10}"
            f"  {_g(r.oracle_error):>10}  {r.mean_iterations:>6.1f}  {progress_bar(r.inlier_precision, 1.0)}"
            f" {_g(r.inlier_precision, 3)}"
        )
    lines.append(
        f"Scaling {fit.model.value}: C={_g(fit.constant)}  r^2={_g(fit.r_squared, 3)}  ({fit.points_used} points)"
    )
    return "\n".join(lines)
