"""Clean sub-Gaussian data y = sigma(W* x) + noise, and strong-contamination adversaries.

The adversary sees everything (truth, mask, noise) and rewrites exactly
floor(eps N) samples; every other column is left bit-identical.
"""
from __future__ import annotations

import logging

import numpy as np
import scipy.linalg
from scipy.special import ndtri

from robust_thresh.errors import AdversaryError, GeneratorError
from robust_thresh.models.activation import ActivationSpec
from robust_thresh.models.dataset import Dataset, DatasetMeta, corruption_budget
from robust_thresh.models.synth import AdversaryKind, AdversarySpec, CovariateLaw, GeneratorSpec
from robust_thresh.services.activations import act_value
from robust_thresh.utils.rng import Purpose, generator, sample_normals, sample_uniforms

log = logging.getLogger(__name__)

# relative slack keeping injected covariates strictly inside the B-ball after rounding
_BALL_SHRINK = 1.0 - 1e-12
# extra stream tags under Purpose.ADVERSARY
_ADV_NOISE, _ADV_DIRECTIONS, _ADV_ORTHOGONAL, _ADV_RANDOM = 1, 2, 3, 4


def resolve_sigma(g: GeneratorSpec) -> np.ndarray:
    if isinstance(g.sigma, str):
        name, _, arg = g.sigma.partition(":")
        if name == "identity":
            return np.eye(g.d)
        # diag_geo: eigenvalues geometric in [1/kappa, 1], largest first
        return np.diag(np.geomspace(1.0, 1.0 / float(arg), g.d))
    sigma = np.asarray(g.sigma, dtype=np.float64)
    if sigma.shape != (g.d, g.d):
        raise GeneratorError("generate_clean", f"sigma must be {g.d}x{g.d}, got {sigma.shape}")
    if not np.allclose(sigma, sigma.T, rtol=1e-12, atol=1e-12):
        raise GeneratorError("generate_clean", "sigma must be symmetric")
    return (sigma + sigma.T) / 2.0


def psd_sqrt(sigma: np.ndarray) -> np.ndarray:
    evals, evecs = scipy.linalg.eigh(sigma)
    scale = max(abs(float(evals[-1])), 1.0)
    if evals[0] < -1e-12 * scale:
        raise GeneratorError.not_psd(float(evals[0]))
    root = np.sqrt(np.clip(evals, 0.0, None))
    return (evecs * root) @ evecs.T


def standard_covariates(g: GeneratorSpec) -> np.ndarray:
    """N x d draws with identity second moment under the chosen law."""
    if g.covariate_law is CovariateLaw.GAUSSIAN:
        return sample_normals(g.seed, Purpose.COVARIATES, g.n, g.d)
    if g.covariate_law is CovariateLaw.RADEMACHER:
        u = sample_uniforms(g.seed, Purpose.COVARIATES, g.n, g.d)
        return np.where(u < 0.5, -1.0, 1.0)
    # uniform in the ball of radius sqrt(d + 2): E[x x^T] = I
    u = sample_uniforms(g.seed, Purpose.COVARIATES, g.n, g.d + 1)
    direction = ndtri(u[:, : g.d])
    direction /= np.linalg.norm(direction, axis=1, keepdims=True)
    radius = np.sqrt(g.d + 2.0) * u[:, g.d] ** (1.0 / g.d)
    return direction * radius[:, None]


def clip_columns(x: np.ndarray, bound: float) -> np.ndarray:
    norms = np.linalg.norm(x, axis=0)
    scale = np.where(norms > bound, bound * _BALL_SHRINK / np.where(norms > 0, norms, 1.0), 1.0)
    return x * scale


def draw_truth(g: GeneratorSpec) -> np.ndarray:
    if g.w_true is not None:
        w = np.asarray(g.w_true, dtype=np.float64).reshape(g.k, -1)
        if w.shape != (g.k, g.d):
            raise GeneratorError("generate_clean", f"w_true must be {g.k}x{g.d}, got {w.shape}")
        return w
    w = generator(g.seed, Purpose.WEIGHTS).standard_normal((g.k, g.d))
    return w * (g.w_radius / np.linalg.norm(w))


def generate_clean(g: GeneratorSpec, act: ActivationSpec) -> Dataset:
    sigma = resolve_sigma(g)
    root = psd_sqrt(sigma)
    x = root @ standard_covariates(g).T
    if g.clip_covariates is not None:
        x = clip_columns(x, g.clip_covariates)

    w_true = draw_truth(g)
    noise = g.nu * sample_normals(g.seed, Purpose.NOISE, g.n, g.k).T
    y = np.asarray(act_value(act, w_true @ x)) + noise

    meta = DatasetMeta(
        seed=g.seed,
        nu=g.nu,
        B=g.clip_covariates,
        sigma_desc=g.sigma_desc,
        w_true=w_true.tolist(),
        activation=act.label,
        law=g.covariate_law.value,
    )
    log.debug("Generated clean dataset d=%d N=%d K=%d law=%s", g.d, g.n, g.k, g.covariate_law.value)
    return Dataset.build(x, y, np.ones(g.n, dtype=bool), meta)


def _choose_targets(ds: Dataset, adv: AdversarySpec, m: int) -> np.ndarray:
    if adv.kind is AdversaryKind.LEVERAGE_ATTACK:
        norms = np.linalg.norm(ds.covariates, axis=0)
        chosen = np.argsort(-norms, kind="stable")[:m]
    else:
        u = sample_uniforms(adv.seed, Purpose.ADVERSARY, ds.n_samples, 1)[:, 0]
        chosen = np.argsort(u, kind="stable")[:m]
    return np.sort(chosen)


def _random_model(w_true: np.ndarray, seed: int) -> np.ndarray:
    g = generator(seed, Purpose.ADVERSARY, _ADV_RANDOM).standard_normal(w_true.shape)
    return g * (np.linalg.norm(w_true) / np.linalg.norm(g))


def _orthogonal_model(w_true: np.ndarray, seed: int) -> np.ndarray:
    g = generator(seed, Purpose.ADVERSARY, _ADV_ORTHOGONAL).standard_normal(w_true.shape)
    norm = np.linalg.norm(w_true)
    if norm > 0:
        g -= (np.sum(g * w_true) / norm**2) * w_true
        g *= norm / np.linalg.norm(g)
    return g


def corrupt(ds: Dataset, adv: AdversarySpec) -> Dataset:
    if adv.eps_true >= 0.5:
        raise AdversaryError("corrupt", f"eps_true must be < 0.5, got {adv.eps_true}")
    if ds.inlier_mask is not None and not ds.inlier_mask.all():
        raise AdversaryError("corrupt", "dataset is already corrupted")

    n, k = ds.n_samples, ds.n_outputs
    m = corruption_budget(adv.eps_true, n)
    mask = np.ones(n, dtype=bool)
    if m == 0 or adv.kind is AdversaryKind.NONE:
        meta = ds.meta.model_copy(update={"eps": adv.eps_true, "adversary": adv.label})
        return Dataset.build(ds.covariates, ds.targets, mask, meta)

    act = ActivationSpec.parse(ds.meta.activation)
    w_true = ds.w_true
    needs_truth = adv.kind in (
        AdversaryKind.LEVERAGE_ATTACK,
        AdversaryKind.COVARIATE_AND_LABEL,
    ) or (adv.kind is AdversaryKind.ORACLE_MODEL and adv.w_adv is None)
    if needs_truth and w_true is None:
        raise AdversaryError("corrupt", f"adversary {adv.label} needs the ground-truth model")

    q = _choose_targets(ds, adv, m)
    x = ds.covariates.copy()
    y = ds.targets.copy()
    fresh = ds.meta.nu * sample_normals(adv.seed, Purpose.ADVERSARY, n, k, _ADV_NOISE)[q].T

    kind = adv.kind
    if kind is AdversaryKind.ADDITIVE_LABEL_OUTLIER:
        y[:, q] += adv.magnitude
    elif kind is AdversaryKind.LABEL_SIGN_FLIP_SCALE:
        y[:, q] = -adv.factor * y[:, q]
    elif kind is AdversaryKind.ORACLE_MODEL:
        if adv.w_adv is not None:
            w_adv = np.asarray(adv.w_adv, dtype=np.float64).reshape(k, -1)
        elif adv.oracle_mode == "random":
            w_adv = _random_model(w_true, adv.seed)
        else:
            w_adv = -w_true
        y[:, q] = act_value(act, w_adv @ x[:, q]) + fresh
    elif kind is AdversaryKind.LEVERAGE_ATTACK:
        w_adv = -adv.factor * w_true if adv.direction_mode == "flip" else _orthogonal_model(w_true, adv.seed)
        y[:, q] = act_value(act, w_adv @ x[:, q]) + fresh
    else:
        base = w_true[0] / np.linalg.norm(w_true[0]) if np.linalg.norm(w_true[0]) > 0 else 0.0
        jitter = sample_normals(adv.seed, Purpose.ADVERSARY, n, ds.dim, _ADV_DIRECTIONS)[q].T
        directions = base[:, None] + 0.1 * jitter if np.ndim(base) else jitter
        directions /= np.linalg.norm(directions, axis=0, keepdims=True)
        x[:, q] = adv.bound * _BALL_SHRINK * directions
        y[:, q] = act_value(act, -w_true @ x[:, q]) + fresh

    mask[q] = False
    bound = adv.bound if kind is AdversaryKind.COVARIATE_AND_LABEL else float(np.linalg.norm(x[:, q], axis=0).max())
    meta = ds.meta.model_copy(update={"eps": adv.eps_true, "adversary": adv.label, "B": bound})
    log.debug("Corrupted %d of %d samples with %s", m, n, adv.label)
    return Dataset.build(x, y, mask, meta)
