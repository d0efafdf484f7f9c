"""Activation values, derivatives and derivative floors.

All functions accept a scalar or an array and answer in kind. Kinks
(ReLU, leaky ReLU at 0) take the right derivative, 1.
"""
from __future__ import annotations

import numpy as np
from scipy.special import expit

from robust_thresh.models.activation import ActivationKind, ActivationSpec

ArrayLike = float | np.ndarray


def _out(v: np.ndarray) -> ArrayLike:
    return float(v) if np.ndim(v) == 0 else v


def act_value(spec: ActivationSpec, z: ArrayLike) -> ArrayLike:
    z = np.asarray(z, dtype=np.float64)
    k = spec.kind
    if k is ActivationKind.LINEAR:
        v = z.copy()
    elif k is ActivationKind.SIGMOID:
        v = expit(z)
    elif k is ActivationKind.TANH:
        v = np.tanh(z)
    elif k is ActivationKind.RELU:
        v = np.maximum(z, 0.0)
    elif k is ActivationKind.LEAKY_RELU:
        v = np.where(z >= 0.0, z, spec.gamma * z)
    else:
        # log(1 + e^z) without overflow
        v = spec.alpha * z + (1.0 - spec.alpha) * np.logaddexp(0.0, z)
    return _out(v)


def act_deriv(spec: ActivationSpec, z: ArrayLike) -> ArrayLike:
    z = np.asarray(z, dtype=np.float64)
    k = spec.kind
    if k is ActivationKind.LINEAR:
        v = np.ones_like(z)
    elif k is ActivationKind.SIGMOID:
        # expit(z) * expit(-z) is exactly even, unlike s * (1 - s)
        v = expit(z) * expit(-z)
    elif k is ActivationKind.TANH:
        v = 1.0 - np.tanh(z) ** 2
    elif k is ActivationKind.RELU:
        v = (z >= 0.0).astype(np.float64)
    elif k is ActivationKind.LEAKY_RELU:
        v = np.where(z >= 0.0, 1.0, spec.gamma)
    else:
        v = spec.alpha + (1.0 - spec.alpha) * expit(z)
    return _out(np.asarray(v, dtype=np.float64))


def act_gamma_floor(spec: ActivationSpec, radius: float) -> float:
    """A valid lower bound on sigma'(z) over |z| <= radius.

    Sigmoid and tanh derivatives are even and decrease in |z|, so the floor
    is the derivative at the radius itself.
    """
    if radius < 0:
        raise ValueError("radius must be nonnegative")
    k = spec.kind
    if k is ActivationKind.LINEAR:
        return 1.0
    if k is ActivationKind.LEAKY_RELU:
        return spec.gamma
    if k is ActivationKind.SMOOTH_LEAKY_RELU:
        return spec.alpha
    if k is ActivationKind.RELU:
        return 0.0
    return float(act_deriv(spec, radius))
