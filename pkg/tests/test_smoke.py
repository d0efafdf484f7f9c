"""Smoke tests for models, config, errors and the dataset directory format.
Run with: python -m pytest tests/test_smoke.py -v"""
from __future__ import annotations

import json
import math

import numpy as np
import pytest
from pydantic import ValidationError

from robust_thresh.config import Settings, settings
from robust_thresh.errors import (
    DatasetFormatError,
    DivergenceError,
    GeneratorError,
    KeyStepCardinalityError,
    RobustThreshError,
    SweepTrialError,
)
from robust_thresh.models.activation import ActivationKind, ActivationSpec
from robust_thresh.models.dataset import Dataset, DatasetMeta, corruption_budget, retained_count, validate_dataset
from robust_thresh.models.fit import FitConfig, FitReport, InitKind, InitSpec, IterationRecord
from robust_thresh.models.lab import LabReport
from robust_thresh.models.params import ModelParams, SpectrumInfo, spectrum_of
from robust_thresh.models.retained import RetainedSet
from robust_thresh.models.sweep import AxisKind, SweepAxis, SweepSpec
from robust_thresh.models.synth import AdversaryKind, AdversarySpec
from robust_thresh.services.dataset_io import load_dataset, save_dataset
from robust_thresh.utils.formatters import format_fit_report, format_lab_report, progress_bar


# --- config ---

def test_settings_defaults():
    s = Settings()
    assert s.eta_scale == 0.1
    assert s.relu_restarts == 5
    assert s.sort_select_limit == 100_000


def test_settings_env_override(monkeypatch):
    monkeypatch.setenv("ROBUST_THRESH_WORKERS", "2")
    monkeypatch.setenv("ROBUST_THRESH_DEBUG", "true")
    s = Settings()
    assert s.workers == 2
    assert s.debug is True


# --- errors ---

def test_error_user_message():
    e = GeneratorError.not_psd(-0.5)
    assert isinstance(e, RobustThreshError)
    assert e.eigenvalue == -0.5
    assert e.user_message().startswith("error [generate_clean]")


def test_divergence_error_carries_iteration():
    e = DivergenceError("fit", 17)
    assert e.iteration == 17
    assert "17" in e.user_message()


def test_key_step_error_counts():
    e = KeyStepCardinalityError(3, 5)
    assert (e.left_count, e.right_count) == (3, 5)
    assert e.operation == "key_step"


def test_sweep_trial_error_wraps_inner():
    inner = DivergenceError("fit", 4)
    e = SweepTrialError(0.2, 7, inner)
    msg = e.user_message()
    assert "axis=0.2" in msg and "trial=7" in msg and "iteration 4" in msg
    assert e.original is inner


# --- corruption budget ---

@pytest.mark.parametrize("eps,n,budget,kept", [
    (0.0, 100, 0, 100),
    (0.1, 30, 3, 27),
    (0.1, 100, 10, 90),
    (0.25, 10, 2, 8),
    (0.49, 7, 3, 4),
])
def test_budget_and_retained(eps, n, budget, kept):
    assert corruption_budget(eps, n) == budget
    assert retained_count(eps, n) == kept


# --- validate_dataset ---

def _ds(n=10, targets_n=None, mask=None, eps=0.1):
    x = np.arange(2 * n, dtype=float).reshape(2, n)
    y = np.zeros((1, targets_n if targets_n is not None else n))
    return Dataset.build(x, y, mask, DatasetMeta(eps=eps))


def test_validate_well_formed(make_dataset):
    assert validate_dataset(make_dataset(eps=0.1)) == []


def test_validate_dimension_mismatch():
    assert validate_dataset(_ds(targets_n=9)) == ["dimension mismatch"]


def test_validate_budget_exceeded():
    mask = np.ones(10, dtype=bool)
    mask[:2] = False
    assert validate_dataset(_ds(mask=mask, eps=0.1)) == ["corruption budget exceeded"]


def test_validate_mask_length():
    assert validate_dataset(_ds(mask=np.ones(9, dtype=bool))) == ["mask length mismatch"]


def test_dataset_arrays_are_read_only(make_dataset):
    ds = make_dataset()
    with pytest.raises(ValueError):
        ds.covariates[0, 0] = 1.0


# --- activation spec ---

@pytest.mark.parametrize("raw,kind,lip", [
    ("linear", ActivationKind.LINEAR, 1.0),
    ("sigmoid", ActivationKind.SIGMOID, 0.25),
    ("leaky_relu:0.2", ActivationKind.LEAKY_RELU, 1.0),
    ("smooth_leaky_relu", ActivationKind.SMOOTH_LEAKY_RELU, 1.0),
    ("RELU", ActivationKind.RELU, 1.0),
])
def test_activation_parse(raw, kind, lip):
    spec = ActivationSpec.parse(raw)
    assert spec.kind is kind
    assert spec.lip == lip


def test_activation_label_round_trip():
    spec = ActivationSpec.parse("leaky_relu:0.2")
    assert spec.label == "leaky_relu:0.2"
    assert ActivationSpec.parse(spec.label) == spec


@pytest.mark.parametrize("raw", ["softmax", "leaky_relu:1.5", "smooth_leaky_relu:0", "tanh:3"])
def test_activation_parse_rejects(raw):
    with pytest.raises(ValueError):
        ActivationSpec.parse(raw)


@pytest.mark.parametrize("kind,lip", [("sigmoid", 1.0), ("tanh", 0.25), ("relu", 2.0)])
def test_activation_rejects_wrong_lip(kind, lip):
    with pytest.raises(ValidationError):
        ActivationSpec(kind=kind, lip=lip)


def test_activation_json_keeps_lip():
    spec = ActivationSpec.parse("sigmoid")
    assert ActivationSpec.model_validate_json(spec.model_dump_json()).lip == 0.25


# --- adversary spec ---

@pytest.mark.parametrize("raw,kind,field,value", [
    ("additive:500", AdversaryKind.ADDITIVE_LABEL_OUTLIER, "magnitude", 500.0),
    ("flip:2", AdversaryKind.LABEL_SIGN_FLIP_SCALE, "factor", 2.0),
    ("leverage:orthogonal", AdversaryKind.LEVERAGE_ATTACK, "direction_mode", "orthogonal"),
    ("covlabel:4", AdversaryKind.COVARIATE_AND_LABEL, "bound", 4.0),
    ("oracle:random", AdversaryKind.ORACLE_MODEL, "oracle_mode", "random"),
])
def test_adversary_parse(raw, kind, field, value):
    adv = AdversarySpec.parse(raw, eps_true=0.1, seed=3)
    assert adv.kind is kind
    assert getattr(adv, field) == value
    assert adv.label == raw


def test_adversary_parse_unknown():
    with pytest.raises(ValueError):
        AdversarySpec.parse("bogus")


# --- params and spectrum ---

def test_model_params_rejects_nan():
    with pytest.raises(ValueError):
        ModelParams.of([1.0, math.nan])


def test_spectrum_identity_has_unit_kappa():
    assert spectrum_of(3.0 * np.eye(4)).kappa == 1.0
    assert spectrum_of(np.diag([1.0, 2.0])).kappa == pytest.approx(2.0)


def test_spectrum_info_fills_kappa():
    assert SpectrumInfo(lambda_min=1.0, lambda_max=4.0).kappa == 4.0
    with pytest.raises(ValidationError):
        SpectrumInfo(lambda_min=2.0, lambda_max=1.0)


@pytest.mark.parametrize("kappa", [0.5, 2.0, 4.1])
def test_spectrum_info_rejects_inconsistent_kappa(kappa):
    with pytest.raises(ValidationError):
        SpectrumInfo(lambda_min=1.0, lambda_max=4.0, kappa=kappa)


def test_spectrum_info_accepts_matching_kappa():
    assert SpectrumInfo(lambda_min=2.0, lambda_max=3.0, kappa=1.5).kappa == 1.5


# --- retained set ---

def test_retained_composition():
    s = RetainedSet.of(np.array([0, 2, 3]), np.zeros(3))
    mask = np.array([True, True, False, True])
    assert s.composition(mask) == (2, 1)
    assert s.composition(None) == (None, None)
    assert s.as_mask(4).tolist() == [True, False, True, True]


# --- fit config ---

@pytest.mark.parametrize("raw,kind,scale", [
    ("zero", InitKind.ZERO, None),
    ("random_ball", InitKind.RANDOM_BALL, None),
    ("random_ball:0.3", InitKind.RANDOM_BALL, 0.3),
])
def test_init_parse(raw, kind, scale):
    init = InitSpec.parse(raw)
    assert init.kind is kind
    assert init.radius_scale == scale


def test_init_default_scale():
    assert InitSpec().scale_for(8) == pytest.approx(math.sqrt(1.0 / (16.0 * math.pi)))


@pytest.mark.parametrize("field,value", [("eta", -1.0), ("max_iters", 0), ("radius_ref", -2.0)])
def test_fit_config_rejects(field, value):
    with pytest.raises(ValidationError):
        FitConfig(**{field: value})


def test_fit_report_to_dict_writes_nan_as_none():
    rec = IterationRecord(0, math.nan, 1.0, None, None, None)
    report = FitReport(ModelParams.of([1.0, 2.0]), [rec], FitConfig(), converged=False)
    out = json.loads(json.dumps(report.to_dict()))
    assert out["trace"][0]["loss_on_retained"] is None
    assert out["estimate"] == [[1.0, 2.0]]


# --- sweep spec ---

def test_sweep_axis_must_be_sorted():
    with pytest.raises(ValidationError):
        SweepAxis(kind=AxisKind.EPS, values=[0.2, 0.1])
    with pytest.raises(ValidationError):
        SweepAxis(kind=AxisKind.NU, values=[0.1, math.inf])


def test_sweep_estimator_default():
    axis = SweepAxis(kind=AxisKind.EPS, values=[0.1])
    assert SweepSpec(sweep_axis=axis).estimator == "linear_it"
    assert SweepSpec(sweep_axis=axis, activation=ActivationSpec.parse("tanh")).estimator == "neuron_it"
    assert SweepSpec(sweep_axis=axis, algo="torrent_fc").estimator == "torrent_fc"


def test_sweep_spec_json_round_trip():
    spec = SweepSpec(sweep_axis=SweepAxis(kind=AxisKind.KAPPA, values=[1.0, 4.0]), trials_per_point=3)
    assert SweepSpec.model_validate_json(spec.model_dump_json()) == spec


# --- dataset directory format ---

def test_dataset_round_trip_bit_exact(tmp_path, make_dataset):
    ds = make_dataset(d=4, n=60, eps=0.1, nu=0.3)
    save_dataset(ds, tmp_path / "data")
    back = load_dataset(tmp_path / "data")
    assert np.array_equal(back.covariates, ds.covariates)
    assert np.array_equal(back.targets, ds.targets)
    assert np.array_equal(back.inlier_mask, ds.inlier_mask)
    assert back.meta == ds.meta


def test_dataset_round_trip_single_sample(tmp_path):
    ds = Dataset.build(np.array([[1.0], [2.0]]), np.array([[0.5]]), None, DatasetMeta())
    save_dataset(ds, tmp_path)
    back = load_dataset(tmp_path)
    assert back.covariates.shape == (2, 1)
    assert back.inlier_mask is None


def test_load_missing_dataset(tmp_path):
    with pytest.raises(DatasetFormatError):
        load_dataset(tmp_path / "nope")


def test_load_inconsistent_dataset(tmp_path, make_dataset):
    save_dataset(make_dataset(d=2, n=10), tmp_path)
    (tmp_path / "targets.csv").write_text("1,2,3\n", encoding="utf-8")
    with pytest.raises(DatasetFormatError, match="dimension mismatch"):
        load_dataset(tmp_path)


# --- formatters ---

def test_progress_bar():
    assert progress_bar(5, 10, length=10) == "#####....."
    assert progress_bar(1, 0, length=4) == "...."
    assert progress_bar(math.nan, 1, length=3) == "..."


def test_format_lab_report():
    report = LabReport.judge("helpers", 10, 0.5, 1.0)
    text = format_lab_report(report)
    assert text.startswith("helpers: PASS")
    assert report.model_dump(by_alias=True)["pass"] is True


def test_format_fit_report_mentions_algo():
    rec = IterationRecord(0, 1.0, 0.5, 9, 1, 0.1)
    text = format_fit_report(FitReport(ModelParams.of([1.0]), [rec], FitConfig(), converged=True))
    assert "linear_it" in text and "converged" in text and "9/1" in text


def test_global_settings_is_shared():
    settings.workers = 1
    from robust_thresh.config import settings as again
    assert again.workers == 1
