"""Dataset container, its provenance record, and invariant checks.

Samples are columns: covariates are d x N, targets are K x N.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from pydantic import BaseModel, ConfigDict, Field


def corruption_budget(eps: float, n: int) -> int:
    """floor(eps * n), guarded against 0.1 * 30 = 2.9999... style rounding."""
    return int(math.floor(eps * n + 1e-9))


def retained_count(eps: float, n: int) -> int:
    """ceil((1 - eps) * n); eps = 0 retains everything."""
    return int(math.ceil((1.0 - eps) * n - 1e-9))


def frozen_array(values: np.ndarray | list, dtype: type = np.float64) -> np.ndarray:
    arr = np.array(values, dtype=dtype, copy=True)
    arr.flags.writeable = False
    return arr


class DatasetMeta(BaseModel):
    model_config = ConfigDict(frozen=True)

    seed: int | None = Field(default=None, description="Generator seed, absent for external data")
    eps: float = Field(default=0.0, ge=0.0, lt=0.5, description="True corruption fraction")
    nu: float = Field(default=0.0, ge=0.0, description="Label noise standard deviation")
    B: float | None = Field(default=None, description="Norm bound on corrupted covariates")
    adversary: str = Field(default="none", description="Adversary name with parameters")
    sigma_desc: str = Field(default="identity", description="Second-moment matrix description")
    w_true: list[list[float]] | None = Field(default=None, description="K x d ground truth when known")
    activation: str = Field(default="linear", description="Activation used to produce the labels")
    law: str = Field(default="gaussian", description="Covariate law")


class NoiseParams(BaseModel):
    """Noise and tail constants shared by the generator and the lab."""

    model_config = ConfigDict(frozen=True)

    nu: float = Field(default=1.0, ge=0.0, allow_inf_nan=False)
    B: float = Field(default=1.0, gt=0.0, allow_inf_nan=False)
    delta: float = Field(default=0.01, gt=0.0, lt=1.0)
    L: float = Field(default=1.0, gt=0.0, allow_inf_nan=False)


@dataclass(frozen=True)
class Dataset:
    covariates: np.ndarray
    targets: np.ndarray
    inlier_mask: np.ndarray | None = None
    meta: DatasetMeta = field(default_factory=DatasetMeta)

    @classmethod
    def build(
        cls,
        covariates: np.ndarray,
        targets: np.ndarray,
        inlier_mask: np.ndarray | None = None,
        meta: DatasetMeta | None = None,
    ) -> Dataset:
        x = np.atleast_2d(np.asarray(covariates, dtype=np.float64))
        y = np.asarray(targets, dtype=np.float64)
        if y.ndim == 1:
            y = y.reshape(1, -1)
        mask = None if inlier_mask is None else frozen_array(inlier_mask, dtype=bool)
        return cls(frozen_array(x), frozen_array(y), mask, meta or DatasetMeta())

    @property
    def dim(self) -> int:
        return self.covariates.shape[0]

    @property
    def n_samples(self) -> int:
        return self.covariates.shape[1]

    @property
    def n_outputs(self) -> int:
        return self.targets.shape[0]

    @property
    def w_true(self) -> np.ndarray | None:
        if self.meta.w_true is None:
            return None
        return np.asarray(self.meta.w_true, dtype=np.float64)


def validate_dataset(ds: Dataset) -> list[str]:
    """Return human-readable invariant violations; empty when the dataset is sound."""
    problems: list[str] = []
    n = ds.covariates.shape[1] if ds.covariates.ndim == 2 else -1
    if ds.covariates.ndim != 2 or ds.targets.ndim != 2:
        problems.append("covariates and targets must be 2-D")
    elif ds.targets.shape[1] != n:
        problems.append("dimension mismatch")
    if ds.inlier_mask is not None:
        if ds.inlier_mask.shape != (n,):
            problems.append("mask length mismatch")
        elif int(np.count_nonzero(~ds.inlier_mask)) > corruption_budget(ds.meta.eps, n):
            problems.append("corruption budget exceeded")
    return problems
