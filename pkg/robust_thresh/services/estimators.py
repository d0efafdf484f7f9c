"""Iterative hard-thresholding gradient descent, plus the least-squares baselines.

Linear regression and single-neuron fits share one loop: evaluate
per-sample losses, keep the ceil((1 - eps_alg) N) smallest, take a gradient
step on the kept samples. With a linear activation both entry points run
exactly the same arithmetic.
"""
from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from typing import Literal

import numpy as np
import scipy.linalg

from robust_thresh.config import settings
from robust_thresh.errors import (
    DivergenceError,
    FitConfigError,
    SingularCovarianceError,
    SingularSystemError,
)
from robust_thresh.models.activation import LINEAR, ActivationKind, ActivationSpec
from robust_thresh.models.dataset import Dataset, retained_count
from robust_thresh.models.fit import FitConfig, FitReport, InitKind, IterationRecord, StepPlan
from robust_thresh.models.params import ModelParams, SpectrumInfo
from robust_thresh.models.retained import RetainedSet
from robust_thresh.services.activations import act_deriv, act_value
from robust_thresh.services.thresholding import hard_threshold, per_sample_losses
from robust_thresh.utils.rng import Purpose, generator, uniform_ball

log = logging.getLogger(__name__)

Subset = RetainedSet | Literal["all", "true_inliers"]


def _check_eps(cfg: FitConfig, operation: str) -> None:
    if not 0.0 <= cfg.eps_alg < 0.5:
        raise FitConfigError(operation, f"eps_alg must lie in [0, 0.5), got {cfg.eps_alg}")


def gradient_on_subset(
    params: ModelParams,
    act: ActivationSpec,
    ds: Dataset,
    s: RetainedSet,
    eps_alg: float,
    iteration: int = 0,
) -> np.ndarray:
    """Gradient of R(W; S) = (1 / ((1 - eps) N)) * sum_{i in S} ||sigma(W x_i) - y_i||^2."""
    if s.size == 0:
        raise FitConfigError("gradient_on_subset", "retained set is empty")
    xs = ds.covariates[:, s.indices]
    ys = ds.targets[:, s.indices]
    z = params.weights @ xs
    with np.errstate(over="ignore", invalid="ignore"):
        if act.is_linear:
            r = z - ys
        else:
            r = (np.asarray(act_value(act, z)) - ys) * np.asarray(act_deriv(act, z))
        grad = (2.0 / ((1.0 - eps_alg) * ds.n_samples)) * (r @ xs.T)
    if not np.all(np.isfinite(grad)):
        raise DivergenceError("gradient_on_subset", iteration, what="gradient")
    return grad


def ols_full_solve(ds: Dataset, subset: Subset = "all") -> ModelParams:
    """Least-squares minimizer on a subset via the normal equations.

    Singularity is decided on the eigenvalues of X_S X_S^T, threshold
    singular_tol * lambda_max.
    """
    if isinstance(subset, RetainedSet):
        idx = subset.indices
    elif subset == "true_inliers":
        if ds.inlier_mask is None:
            raise FitConfigError("ols_full_solve", "dataset has no inlier mask")
        idx = np.flatnonzero(ds.inlier_mask)
    else:
        idx = np.arange(ds.n_samples)
    if idx.shape[0] == 0:
        raise SingularSystemError("ols_full_solve", "subset is empty")

    xs = ds.covariates[:, idx]
    gram = xs @ xs.T
    evals = scipy.linalg.eigvalsh(gram)
    if evals[-1] <= 0.0 or evals[0] <= settings.singular_tol * evals[-1]:
        raise SingularSystemError(
            "ols_full_solve",
            f"X_S X_S^T is rank deficient (eigenvalues {evals[0]:.3g} .. {evals[-1]:.3g}, |S|={idx.shape[0]})",
        )
    rhs = xs @ ds.targets[:, idx].T
    w = scipy.linalg.solve(gram, rhs, assume_a="pos").T
    return ModelParams.of(w)


def _reference_weights(ds: Dataset, cfg: FitConfig) -> np.ndarray:
    ref = cfg.radius_ref
    if ref == "truth":
        if ds.w_true is None:
            raise FitConfigError("plan_steps", "radius_ref=truth needs a dataset with known w_true")
        return np.asarray(ds.w_true)
    w = ols_full_solve(ds, "all").weights
    if ref == "ols":
        return w
    norm = float(np.linalg.norm(w))
    if norm == 0.0:
        return w
    return w * (float(ref) / norm)


def _resolve_radius(ds: Dataset, cfg: FitConfig, w_ref: np.ndarray | None = None) -> float:
    if cfg.radius_ref not in ("ols", "truth"):
        return float(cfg.radius_ref)
    return float(np.linalg.norm(_reference_weights(ds, cfg) if w_ref is None else w_ref))


def _covariates(ds: Dataset, retained: RetainedSet | None) -> np.ndarray:
    return ds.covariates if retained is None else ds.covariates[:, retained.indices]


def _spectrum(ds: Dataset, cfg: FitConfig, retained: RetainedSet | None) -> SpectrumInfo:
    if isinstance(cfg.spectrum, SpectrumInfo):
        return cfg.spectrum
    x = _covariates(ds, retained)
    second_moment = (x @ x.T) / x.shape[1]
    evals = scipy.linalg.eigvalsh(second_moment)
    lo, hi = float(evals[0]), float(evals[-1])
    if lo <= settings.singular_tol:
        raise SingularCovarianceError("plan_steps", lo)
    return SpectrumInfo(lambda_min=lo, lambda_max=hi)


def sample_curvature(ds: Dataset, act: ActivationSpec, w_ref: np.ndarray, retained: RetainedSet | None = None) -> float:
    """Mean of sigma'(w_ref x_i)^2 over the samples; 1 for the linear activation."""
    if act.is_linear:
        return 1.0
    z = w_ref @ _covariates(ds, retained)
    return float(np.mean(np.square(act_deriv(act, z))))


def plan_steps(
    ds: Dataset,
    cfg: FitConfig,
    act: ActivationSpec = LINEAR,
    retained: RetainedSet | None = None,
) -> StepPlan:
    """Step size and iteration cap from the covariate spectrum.

    Linear: eta = 0.1 / lambda_max.
    Nonlinear: eta = 0.1 / (c lambda_max), with c the sample mean of
    sigma'(w_ref x_i)^2 at the reference model (OLS on all samples, or w*
    under radius_ref=truth). c is floored at 0.1 lip^2, so eta <= 1 / (lip^2 lambda_max).
    T = ceil(c_T kappa^2 log(radius_ref / target_tol)) for every activation.
    """
    _check_eps(cfg, "plan_steps")
    spec = _spectrum(ds, cfg, retained)
    tol = cfg.target_tol or settings.target_tol
    kappa = spec.kappa

    if act.is_linear:
        radius = _resolve_radius(ds, cfg)
        eta = settings.eta_scale / spec.lambda_max
        rule = f"{settings.eta_scale:g}/lambda_max"
    else:
        w_ref = _reference_weights(ds, cfg)
        radius = _resolve_radius(ds, cfg, w_ref)
        curvature = max(sample_curvature(ds, act, w_ref, retained), settings.eta_scale * act.lip**2)
        eta = settings.eta_scale / (curvature * spec.lambda_max)
        rule = f"{settings.eta_scale:g}/(c*lambda_max), c={curvature:.6g}"
    if cfg.eta != "auto":
        eta = float(cfg.eta)
        rule = "fixed"

    if cfg.max_iters != "auto":
        t_max = int(cfg.max_iters)
    else:
        log_term = math.log(radius / tol) if radius > tol else 0.0
        t_max = max(1, math.ceil(settings.step_constant * kappa**2 * log_term))

    stop = cfg.stop_param_change or settings.stop_param_change
    return StepPlan(eta=eta, t_max=t_max, stop_param_change=stop, eta_rule=rule, spectrum=spec, radius_ref=radius)


def _initial_weights(ds: Dataset, cfg: FitConfig, plan: StepPlan, restart: int) -> np.ndarray:
    k, d = ds.n_outputs, ds.dim
    if cfg.init.kind is InitKind.ZERO:
        return np.zeros((k, d))
    rng = generator(cfg.seed, Purpose.INIT, restart)
    radius = cfg.init.scale_for(d) * plan.radius_ref
    return uniform_ball(rng, k * d, radius).reshape(k, d)


def _retained_risk(losses: np.ndarray, eps_alg: float, n: int) -> float:
    return math.fsum(losses.tolist()) / ((1.0 - eps_alg) * n)


def _run_iterations(
    ds: Dataset,
    act: ActivationSpec,
    cfg: FitConfig,
    plan: StepPlan,
    w0: np.ndarray,
) -> tuple[np.ndarray, list[IterationRecord], bool]:
    keep = retained_count(cfg.eps_alg, ds.n_samples)
    truth = ds.w_true
    w = w0
    trace: list[IterationRecord] = []
    change = math.inf
    for t in range(plan.t_max):
        params = ModelParams.of(w)
        zeta = per_sample_losses(params, act, ds, iteration=t)
        s = hard_threshold(zeta, keep)
        grad = gradient_on_subset(params, act, ds, s, cfg.eps_alg, iteration=t)
        w_next = w - plan.eta * grad
        if not np.all(np.isfinite(w_next)):
            raise DivergenceError("fit", t)
        change = float(np.linalg.norm(w_next - w))
        tp, fp = s.composition(ds.inlier_mask)
        err = None if truth is None else float(np.linalg.norm(w_next - truth))
        trace.append(
            IterationRecord(
                iter=t,
                loss_on_retained=_retained_risk(s.losses_at_selection, cfg.eps_alg, ds.n_samples),
                param_change=change,
                retained_true_positives=tp,
                retained_false_positives=fp,
                param_error_if_truth_known=err,
            )
        )
        log.debug("iter %d: loss=%.6g change=%.3g", t, trace[-1].loss_on_retained, change)
        w = w_next
        if change < plan.stop_param_change:
            return w, trace, True
    tol = cfg.target_tol or settings.target_tol
    return w, trace, change <= tol


def _restart_count(act: ActivationSpec, cfg: FitConfig) -> int:
    if cfg.init.kind is InitKind.ZERO:
        if cfg.restarts is not None and cfg.restarts > 1:
            raise FitConfigError("fit", "restarts need a random_ball init; zero init is deterministic")
        return 1
    if cfg.restarts is not None:
        return cfg.restarts
    return settings.relu_restarts if act.kind is ActivationKind.RELU else 1


def _fit_iterative(ds: Dataset, act: ActivationSpec, cfg: FitConfig, algo: str) -> FitReport:
    _check_eps(cfg, algo)
    plan = plan_steps(ds, cfg, act)
    restarts = _restart_count(act, cfg)
    keep = retained_count(cfg.eps_alg, ds.n_samples)
    log.info(
        "Fitting %s act=%s N=%d d=%d K=%d eta=%.4g T=%d restarts=%d",
        algo, act.label, ds.n_samples, ds.dim, ds.n_outputs, plan.eta, plan.t_max, restarts,
    )

    def one(r: int) -> tuple[np.ndarray, list[IterationRecord], bool, RetainedSet, float]:
        w, trace, converged = _run_iterations(ds, act, cfg, plan, _initial_weights(ds, cfg, plan, r))
        final = hard_threshold(per_sample_losses(ModelParams.of(w), act, ds, iteration=len(trace)), keep)
        return w, trace, converged, final, _retained_risk(final.losses_at_selection, cfg.eps_alg, ds.n_samples)

    if restarts == 1:
        runs = [one(0)]
    else:
        with ThreadPoolExecutor(max_workers=min(restarts, settings.workers)) as pool:
            runs = list(pool.map(one, range(restarts)))

    losses = [run[4] for run in runs]
    best = min(range(len(runs)), key=lambda i: (losses[i], i))
    w, trace, converged, final, _ = runs[best]
    if not converged:
        log.warning("%s stopped at T=%d without meeting the stop rule", algo, plan.t_max)
    report = FitReport(
        estimate=ModelParams.of(w),
        trace=trace,
        config_echo=cfg,
        converged=converged,
        algo=algo,
        activation=act.label,
        step_plan=plan,
        retained=final,
        restart_index=best,
        restart_losses=losses,
    )
    log.info("%s done: %d iterations, converged=%s, retained loss=%.6g", algo, report.iterations, converged, losses[best])
    return report


def fit_linear_it(ds: Dataset, cfg: FitConfig) -> FitReport:
    return _fit_iterative(ds, LINEAR, cfg, "linear_it")


def fit_neuron_it(ds: Dataset, act: ActivationSpec, cfg: FitConfig) -> FitReport:
    if ds.n_outputs != 1:
        raise FitConfigError("neuron_it", f"a single neuron needs K = 1, got K = {ds.n_outputs}")
    return _fit_iterative(ds, act, cfg, "neuron_it")


def fit_torrent_fc(ds: Dataset, cfg: FitConfig) -> FitReport:
    """Alternate hard thresholding with an exact least-squares solve on the kept set."""
    _check_eps(cfg, "torrent_fc")
    keep = retained_count(cfg.eps_alg, ds.n_samples)
    t_max = int(cfg.max_iters) if cfg.max_iters != "auto" else settings.torrent_max_iters
    truth = ds.w_true
    w = np.zeros((ds.n_outputs, ds.dim))
    prev: RetainedSet | None = None
    trace: list[IterationRecord] = []
    stable = False
    log.info("Fitting torrent_fc N=%d d=%d K=%d T=%d", ds.n_samples, ds.dim, ds.n_outputs, t_max)
    for t in range(t_max):
        zeta = per_sample_losses(ModelParams.of(w), LINEAR, ds, iteration=t)
        s = hard_threshold(zeta, keep)
        if s.same_as(prev):
            stable = True
            break
        w_next = ols_full_solve(ds, s).weights
        tp, fp = s.composition(ds.inlier_mask)
        trace.append(
            IterationRecord(
                iter=t,
                loss_on_retained=_retained_risk(s.losses_at_selection, cfg.eps_alg, ds.n_samples),
                param_change=float(np.linalg.norm(w_next - w)),
                retained_true_positives=tp,
                retained_false_positives=fp,
                param_error_if_truth_known=None if truth is None else float(np.linalg.norm(w_next - truth)),
            )
        )
        w, prev = w_next, s
    if not stable:
        log.warning("torrent_fc retained set still moving after %d iterations", t_max)
    return FitReport(
        estimate=ModelParams.of(w),
        trace=trace,
        config_echo=cfg,
        converged=stable,
        algo="torrent_fc",
        retained=prev,
    )


def fit_ols(ds: Dataset, cfg: FitConfig) -> FitReport:
    """Plain least squares on every sample, wrapped as a one-step report."""
    est = ols_full_solve(ds, "all")
    zeta = per_sample_losses(est, LINEAR, ds)
    everything = RetainedSet.everything(zeta)
    tp, fp = everything.composition(ds.inlier_mask)
    truth = ds.w_true
    record = IterationRecord(
        iter=0,
        loss_on_retained=math.fsum(zeta.tolist()) / ds.n_samples,
        param_change=float(np.linalg.norm(est.weights)),
        retained_true_positives=tp,
        retained_false_positives=fp,
        param_error_if_truth_known=None if truth is None else est.error_to(truth),
    )
    return FitReport(estimate=est, trace=[record], config_echo=cfg, converged=True, algo="ols", retained=everything)
