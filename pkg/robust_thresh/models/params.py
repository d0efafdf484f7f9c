from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.linalg
from pydantic import BaseModel, ConfigDict, Field, model_validator

from robust_thresh.models.dataset import frozen_array


@dataclass(frozen=True)
class ModelParams:
    """K x d weight matrix; a length-d vector is stored as 1 x d."""

    weights: np.ndarray

    def __post_init__(self) -> None:
        if not np.all(np.isfinite(self.weights)):
            raise ValueError("model weights must be finite")

    @classmethod
    def of(cls, weights: np.ndarray | list) -> ModelParams:
        w = np.asarray(weights, dtype=np.float64)
        if w.ndim == 1:
            w = w.reshape(1, -1)
        return cls(frozen_array(w))

    @property
    def shape(self) -> tuple[int, int]:
        return self.weights.shape  # type: ignore[return-value]

    def error_to(self, truth: np.ndarray) -> float:
        """Frobenius distance to a reference (l2 distance when K = 1)."""
        return float(np.linalg.norm(self.weights - np.asarray(truth).reshape(self.weights.shape)))


class SpectrumInfo(BaseModel):
    model_config = ConfigDict(frozen=True)

    lambda_min: float = Field(gt=0.0)
    lambda_max: float = Field(gt=0.0)
    kappa: float = Field(default=0.0)

    @model_validator(mode="before")
    @classmethod
    def _fill_kappa(cls, data: object) -> object:
        if isinstance(data, dict) and not data.get("kappa") and data.get("lambda_min"):
            data = {**data, "kappa": data["lambda_max"] / data["lambda_min"]}
        return data

    @model_validator(mode="after")
    def _check_order(self) -> SpectrumInfo:
        if self.lambda_max < self.lambda_min:
            raise ValueError("lambda_max must be >= lambda_min")
        ratio = self.lambda_max / self.lambda_min
        if self.kappa < 1.0 or not math.isclose(self.kappa, ratio, rel_tol=1e-9):
            raise ValueError(f"kappa must equal lambda_max / lambda_min = {ratio:.12g}, got {self.kappa}")
        return self


def spectrum_of(matrix: np.ndarray) -> SpectrumInfo:
    """Extreme eigenvalues of a symmetric positive-definite matrix.

    kappa is snapped to exactly 1 when the spectrum is flat to rounding, so a
    positive multiple of the identity reports kappa == 1.
    """
    eig = scipy.linalg.eigvalsh(np.asarray(matrix, dtype=np.float64))
    lo, hi = float(eig[0]), float(eig[-1])
    if lo <= 0.0:
        raise ValueError(f"matrix is not positive definite (lambda_min={lo:.3g})")
    kappa = hi / lo
    if kappa - 1.0 < 8 * np.finfo(float).eps:
        kappa = 1.0
    return SpectrumInfo(lambda_min=lo, lambda_max=max(hi, lo), kappa=kappa)
