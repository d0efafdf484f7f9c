from __future__ import annotations

import math

import numpy as np
import pytest

from robust_thresh.errors import DivergenceError, FitConfigError, SingularCovarianceError, SingularSystemError
from robust_thresh.models.activation import LINEAR, ActivationKind, ActivationSpec
from robust_thresh.models.dataset import Dataset, retained_count
from robust_thresh.models.fit import FitConfig, InitSpec
from robust_thresh.models.params import ModelParams, SpectrumInfo
from robust_thresh.models.retained import RetainedSet
from robust_thresh.models.synth import AdversaryKind
from robust_thresh.services.activations import act_deriv
from robust_thresh.services.estimators import (
    fit_linear_it,
    fit_neuron_it,
    fit_ols,
    fit_torrent_fc,
    gradient_on_subset,
    ols_full_solve,
    plan_steps,
    sample_curvature,
)
from robust_thresh.services.thresholding import hard_threshold, per_sample_losses

KINDS = ["linear", "sigmoid", "tanh", "leaky_relu:0.1", "smooth_leaky_relu:0.5", "relu"]


def _subset_risk(w: np.ndarray, act: ActivationSpec, ds: Dataset, s: RetainedSet, eps: float) -> float:
    zeta = per_sample_losses(ModelParams.of(w), act, ds)
    return float(np.sum(zeta[s.indices])) / ((1.0 - eps) * ds.n_samples)


# --- gradient_on_subset ---

def test_gradient_hand_example():
    ds = Dataset.build(np.array([[2.0]]), np.array([[1.0]]))
    s = RetainedSet.of(np.array([0]), np.array([1.0]))
    assert gradient_on_subset(ModelParams.of([1.0]), LINEAR, ds, s, 0.0).tolist() == [[4.0]]


@pytest.mark.parametrize("kind", KINDS)
def test_gradient_zero_at_truth(kind, make_dataset):
    act = ActivationSpec.parse(kind)
    ds = make_dataset(d=3, n=40, act=act)
    s = RetainedSet.everything(np.zeros(40))
    grad = gradient_on_subset(ModelParams.of(ds.w_true), act, ds, s, 0.0)
    assert np.abs(grad).max() <= 1e-12


@pytest.mark.parametrize("kind", KINDS)
def test_gradient_matches_finite_differences(kind, make_dataset):
    act = ActivationSpec.parse(kind)
    ds = make_dataset(d=4, n=30, eps=0.2, nu=0.3, act=act, seed=3)
    rng = np.random.default_rng(7)
    h = 1e-5
    checked = 0
    for _ in range(10):
        w = rng.normal(size=(1, 4))
        z = w @ ds.covariates
        if act.kind in (ActivationKind.RELU, ActivationKind.LEAKY_RELU) and np.abs(z).min() < 1e-3:
            continue
        s = hard_threshold(per_sample_losses(ModelParams.of(w), act, ds), retained_count(0.2, 30))
        grad = gradient_on_subset(ModelParams.of(w), act, ds, s, 0.2)
        fd = np.zeros_like(w)
        for j in range(4):
            step = np.zeros_like(w)
            step[0, j] = h
            fd[0, j] = (_subset_risk(w + step, act, ds, s, 0.2) - _subset_risk(w - step, act, ds, s, 0.2)) / (2 * h)
        scale = max(np.linalg.norm(fd), 1e-8)
        assert np.linalg.norm(grad - fd) / scale <= 1e-5
        checked += 1
    assert checked >= 5


# --- plan_steps ---

def test_plan_steps_identity_eta(make_dataset):
    ds = make_dataset(d=2, n=50)
    cfg = FitConfig(spectrum=SpectrumInfo(lambda_min=1.0, lambda_max=1.0), radius_ref=1.0)
    assert plan_steps(ds, cfg).eta == pytest.approx(0.1)


def test_plan_steps_diag_eta(make_dataset):
    ds = make_dataset(d=2, n=50)
    cfg = FitConfig(spectrum=SpectrumInfo(lambda_min=1.0, lambda_max=4.0), radius_ref=1.0)
    assert plan_steps(ds, cfg).eta == pytest.approx(0.025)


def test_plan_steps_clamps_iterations(make_dataset):
    ds = make_dataset(d=2, n=50)
    cfg = FitConfig(spectrum=SpectrumInfo(lambda_min=1.0, lambda_max=1.0), radius_ref=1e-8, target_tol=1e-8)
    assert plan_steps(ds, cfg).t_max == 1


def test_plan_steps_iteration_formula(make_dataset):
    ds = make_dataset(d=2, n=50)
    cfg = FitConfig(spectrum=SpectrumInfo(lambda_min=1.0, lambda_max=2.0), radius_ref=1.0, target_tol=1e-4)
    assert plan_steps(ds, cfg).t_max == math.ceil(10.0 * 4.0 * math.log(1e4))


@pytest.mark.parametrize("kind", KINDS)
def test_plan_steps_iterations_ignore_activation(kind, make_dataset):
    ds = make_dataset(d=2, n=50)
    cfg = FitConfig(spectrum=SpectrumInfo(lambda_min=1.0, lambda_max=1.0), radius_ref=1.0)
    assert plan_steps(ds, cfg, ActivationSpec.parse(kind)).t_max == math.ceil(10.0 * math.log(1e8))


def test_plan_steps_nonlinear_uses_sample_curvature(make_dataset):
    act = ActivationSpec.parse("leaky_relu:0.1")
    ds = make_dataset(d=3, n=400, act=act)
    cfg = FitConfig(spectrum=SpectrumInfo(lambda_min=1.0, lambda_max=2.0), radius_ref="truth")
    c = float(np.mean(np.asarray(act_deriv(act, np.asarray(ds.w_true) @ ds.covariates)) ** 2))
    assert sample_curvature(ds, act, np.asarray(ds.w_true)) == pytest.approx(c)
    assert 0.3 < c < 0.7
    plan = plan_steps(ds, cfg, act)
    assert plan.eta == pytest.approx(0.1 / (c * 2.0))
    assert plan.t_max == plan_steps(ds, cfg).t_max


def test_plan_steps_curvature_floor_caps_eta(make_dataset):
    act = ActivationSpec.parse("sigmoid")
    ds = make_dataset(d=2, n=400, act=act, w_true=[[50.0, 0.0]])
    cfg = FitConfig(spectrum=SpectrumInfo(lambda_min=1.0, lambda_max=1.0), radius_ref="truth")
    assert plan_steps(ds, cfg, act).eta == pytest.approx(1.0 / 0.25**2)


def test_plan_steps_explicit_values_win(make_dataset):
    ds = make_dataset(d=2, n=50)
    plan = plan_steps(ds, FitConfig(eta=0.3, max_iters=7))
    assert (plan.eta, plan.t_max, plan.eta_rule) == (0.3, 7, "fixed")


def test_plan_steps_singular_covariance():
    ds = Dataset.build(np.random.default_rng(0).normal(size=(5, 3)), np.zeros((1, 3)))
    with pytest.raises(SingularCovarianceError):
        plan_steps(ds, FitConfig())


# --- ols_full_solve ---

def test_ols_recovers_truth_noiseless(make_dataset):
    ds = make_dataset(d=5, n=100, nu=0.0)
    assert ols_full_solve(ds, "all").error_to(ds.w_true) <= 1e-10


def test_ols_true_inliers_beats_contaminated(make_dataset):
    ds = make_dataset(d=5, n=500, eps=0.1, nu=1.0)
    oracle = ols_full_solve(ds, "true_inliers").error_to(ds.w_true)
    contaminated = ols_full_solve(ds, "all").error_to(ds.w_true)
    assert oracle < contaminated


def test_ols_rank_deficient():
    x = np.array([[1.0, 2.0, 3.0], [2.0, 4.0, 6.0]])
    ds = Dataset.build(x, np.ones((1, 3)))
    with pytest.raises(SingularSystemError):
        ols_full_solve(ds, "all")


def test_ols_true_inliers_needs_mask():
    ds = Dataset.build(np.eye(2), np.ones((1, 2)))
    with pytest.raises(FitConfigError):
        ols_full_solve(ds, "true_inliers")


# --- fit_linear_it ---

def test_linear_clean_recovery(make_dataset):
    ds = make_dataset(d=5, n=200, eps=0.0, nu=0.0)
    report = fit_linear_it(ds, FitConfig(eps_alg=0.0))
    assert report.converged
    assert report.estimate.error_to(ds.w_true) <= 1e-8


def test_linear_realizable_with_outliers(make_dataset):
    ds = make_dataset(d=5, n=500, eps=0.1, nu=0.0)
    report = fit_linear_it(ds, FitConfig(eps_alg=0.1))
    assert report.estimate.error_to(ds.w_true) <= 1e-6
    assert report.retained.composition(ds.inlier_mask) == (450, 0)


def test_retained_size_is_constant(make_dataset):
    ds = make_dataset(d=4, n=301, eps=0.1, nu=0.5)
    report = fit_linear_it(ds, FitConfig(eps_alg=0.15))
    keep = retained_count(0.15, 301)
    assert all(r.retained_true_positives + r.retained_false_positives == keep for r in report.trace)
    assert report.retained.size == keep


def test_linear_beats_ols_with_noise(make_dataset):
    wins = 0
    for seed in range(5):
        ds = make_dataset(d=5, n=1000, eps=0.1, nu=1.0, adversary=AdversaryKind.ORACLE_MODEL, seed=seed)
        robust = fit_linear_it(ds, FitConfig(eps_alg=0.1)).estimate.error_to(ds.w_true)
        wins += robust < ols_full_solve(ds, "all").error_to(ds.w_true)
    assert wins >= 4


def test_linear_multi_output(make_dataset):
    ds = make_dataset(d=3, n=300, eps=0.1, k=2)
    report = fit_linear_it(ds, FitConfig(eps_alg=0.1))
    assert report.estimate.shape == (2, 3)
    assert report.estimate.error_to(ds.w_true) <= 1e-6


def test_eps_alg_out_of_range(make_dataset):
    with pytest.raises(FitConfigError):
        fit_linear_it(make_dataset(), FitConfig(eps_alg=0.5))


def test_divergence_reported(make_dataset):
    ds = make_dataset(d=3, n=50, nu=0.1)
    with pytest.raises(DivergenceError):
        fit_linear_it(ds, FitConfig(eps_alg=0.0, eta=1e6, max_iters=2000))


def test_zero_init_with_restarts_rejected(make_dataset):
    with pytest.raises(FitConfigError):
        fit_linear_it(make_dataset(), FitConfig(restarts=3))


def test_config_echo(make_dataset):
    cfg = FitConfig(eps_alg=0.0, max_iters=3)
    report = fit_linear_it(make_dataset(), cfg)
    assert report.config_echo == cfg
    assert report.iterations <= 3


def test_reselection_never_raises_retained_risk(make_dataset):
    ds = make_dataset(d=4, n=300, eps=0.2, nu=0.5, seed=2)
    keep = retained_count(0.2, 300)
    rng = np.random.default_rng(5)
    prev = hard_threshold(per_sample_losses(ModelParams.of(rng.normal(size=(1, 4))), LINEAR, ds), keep)
    for _ in range(30):
        zeta = per_sample_losses(ModelParams.of(rng.normal(size=(1, 4))), LINEAR, ds)
        current = hard_threshold(zeta, keep)
        assert current.losses_at_selection.sum() <= zeta[prev.indices].sum() * (1 + 1e-12)
        prev = current


def test_fit_reselection_at_fixed_weights(make_dataset):
    ds = make_dataset(d=3, n=200, eps=0.1, nu=0.5, seed=6)
    prev = fit_linear_it(ds, FitConfig(eps_alg=0.1, max_iters=1)).retained
    for t in range(2, 12):
        report = fit_linear_it(ds, FitConfig(eps_alg=0.1, max_iters=t))
        zeta = per_sample_losses(report.estimate, LINEAR, ds)
        assert report.retained.size == prev.size
        assert report.retained.losses_at_selection.sum() <= zeta[prev.indices].sum() * (1 + 1e-12)
        prev = report.retained


# --- fit_neuron_it ---

def test_neuron_linear_matches_linear_it(make_dataset):
    ds = make_dataset(d=4, n=200, eps=0.1, nu=0.2)
    cfg = FitConfig(eps_alg=0.1)
    a = fit_linear_it(ds, cfg)
    b = fit_neuron_it(ds, LINEAR, cfg)
    assert a.trace == b.trace
    assert np.array_equal(a.estimate.weights, b.estimate.weights)


def test_neuron_leaky_realizable(make_dataset):
    act = ActivationSpec.parse("leaky_relu:0.1")
    ds = make_dataset(d=10, n=2000, eps=0.0, nu=0.0, act=act)
    report = fit_neuron_it(ds, act, FitConfig(eps_alg=0.0))
    plan = report.step_plan
    assert plan.t_max == math.ceil(10.0 * plan.spectrum.kappa**2 * math.log(plan.radius_ref / 1e-8))
    assert report.estimate.error_to(ds.w_true) <= 1e-6
    assert report.converged


def test_neuron_sigmoid_with_outliers(make_dataset):
    act = ActivationSpec.parse("sigmoid")
    ds = make_dataset(d=3, n=1000, eps=0.1, nu=0.0, act=act, adversary=AdversaryKind.ORACLE_MODEL)
    report = fit_neuron_it(ds, act, FitConfig(eps_alg=0.1))
    assert report.estimate.error_to(ds.w_true) <= 1e-3


# C in the C * sqrt(eps log(1/eps)) error bound, held fixed across runs
RELU_ERROR_CONSTANT = 0.5


def test_neuron_relu_with_outliers(make_dataset):
    act = ActivationSpec.parse("relu")
    ds = make_dataset(d=10, n=5000, eps=0.1, nu=0.1, act=act)
    report = fit_neuron_it(ds, act, FitConfig(eps_alg=0.1, init=InitSpec.parse("random_ball")))
    assert len(report.restart_losses) == 5
    assert report.estimate.error_to(ds.w_true) <= RELU_ERROR_CONSTANT * math.sqrt(0.1 * math.log(10.0))


def test_neuron_requires_single_output(make_dataset):
    ds = make_dataset(d=3, n=50, k=2)
    with pytest.raises(FitConfigError):
        fit_neuron_it(ds, ActivationSpec.parse("tanh"), FitConfig())


def test_relu_restarts_pick_the_best(make_dataset):
    act = ActivationSpec.parse("relu")
    ds = make_dataset(d=3, n=300, eps=0.1, nu=0.1, act=act)
    cfg = FitConfig(eps_alg=0.1, init=InitSpec.parse("random_ball"), max_iters=100, seed=4)
    report = fit_neuron_it(ds, act, cfg)
    assert len(report.restart_losses) == 5
    assert report.restart_losses[report.restart_index] == min(report.restart_losses)
    again = fit_neuron_it(ds, act, cfg)
    assert np.array_equal(again.estimate.weights, report.estimate.weights)


# --- fit_torrent_fc ---

def test_torrent_clean_one_iteration(make_dataset):
    ds = make_dataset(d=5, n=100, eps=0.0, nu=0.0)
    report = fit_torrent_fc(ds, FitConfig(eps_alg=0.0))
    assert report.converged
    assert report.iterations == 1
    assert report.estimate.error_to(ds.w_true) <= 1e-10


def test_torrent_stops_when_set_repeats(make_dataset):
    ds = make_dataset(d=5, n=400, eps=0.1, nu=0.5)
    report = fit_torrent_fc(ds, FitConfig(eps_alg=0.1))
    assert report.converged
    assert report.iterations < 100


def test_torrent_agrees_with_gradient_fit(make_dataset):
    ds = make_dataset(d=5, n=2000, eps=0.1, nu=1.0, seed=2)
    cfg = FitConfig(eps_alg=0.1)
    torrent = fit_torrent_fc(ds, cfg).estimate.error_to(ds.w_true)
    gradient = fit_linear_it(ds, cfg).estimate.error_to(ds.w_true)
    assert torrent == pytest.approx(gradient, rel=0.1)


# --- fit_ols ---

def test_fit_ols_report(make_dataset):
    ds = make_dataset(d=3, n=60, eps=0.1)
    report = fit_ols(ds, FitConfig())
    assert report.algo == "ols"
    assert report.iterations == 1
    assert report.retained.size == 60
    assert report.estimate.error_to(ols_full_solve(ds).weights) == 0.0
