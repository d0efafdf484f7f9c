"""Per-sample losses and the hard thresholding operator both estimators share."""
from __future__ import annotations

import numpy as np

from robust_thresh.config import settings
from robust_thresh.errors import DivergenceError, ThresholdRangeError
from robust_thresh.models.activation import ActivationSpec
from robust_thresh.models.dataset import Dataset
from robust_thresh.models.params import ModelParams
from robust_thresh.models.retained import RetainedSet
from robust_thresh.services.activations import act_value


def per_sample_losses(
    params: ModelParams,
    act: ActivationSpec,
    ds: Dataset,
    iteration: int = 0,
) -> np.ndarray:
    """zeta_i = ||sigma(W x_i) - y_i||^2 for every sample column."""
    w = params.weights
    if w.shape != (ds.n_outputs, ds.dim):
        raise ValueError(f"params are {w.shape}, dataset needs {(ds.n_outputs, ds.dim)}")
    with np.errstate(over="ignore", invalid="ignore"):
        residual = np.asarray(act_value(act, w @ ds.covariates)) - ds.targets
        zeta = np.einsum("kn,kn->n", residual, residual)
    if not np.all(np.isfinite(zeta)):
        raise DivergenceError("per_sample_losses", iteration, what="loss")
    return zeta


def hard_threshold(zeta: np.ndarray, k: int) -> RetainedSet:
    """Indices of the k smallest losses, ties to the lower index, reported sorted."""
    zeta = np.asarray(zeta, dtype=np.float64)
    n = zeta.shape[0]
    if not 1 <= k <= n:
        raise ThresholdRangeError("hard_threshold", f"k must lie in [1, {n}], got {k}")
    if not np.all(np.isfinite(zeta)):
        raise ThresholdRangeError("hard_threshold", "losses must be finite")

    if k == n:
        chosen = np.arange(n)
    elif n <= settings.sort_select_limit:
        chosen = np.argsort(zeta, kind="stable")[:k]
    else:
        # nth-element selection, then fill the boundary value by lowest index
        kth = np.partition(zeta, k - 1)[k - 1]
        below = np.flatnonzero(zeta < kth)
        at = np.flatnonzero(zeta == kth)[: k - below.shape[0]]
        chosen = np.concatenate([below, at])
    indices = np.sort(chosen)
    return RetainedSet.of(indices, zeta[indices])
