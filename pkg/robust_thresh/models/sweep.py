from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Literal

from pydantic import BaseModel, ConfigDict, Field, field_validator

from robust_thresh.models.activation import ActivationSpec
from robust_thresh.models.fit import FitConfig, FitReport
from robust_thresh.models.synth import AdversarySpec, GeneratorSpec


class AxisKind(str, enum.Enum):
    EPS = "eps"
    NU = "nu"
    KAPPA = "kappa"
    N = "n"


class SweepAxis(BaseModel):
    model_config = ConfigDict(frozen=True)

    kind: AxisKind
    values: list[float] = Field(min_length=1)

    @field_validator("values")
    @classmethod
    def _finite_sorted(cls, v: list[float]) -> list[float]:
        if any(not math.isfinite(x) for x in v):
            raise ValueError("sweep values must be finite")
        if any(b < a for a, b in zip(v, v[1:])):
            raise ValueError("sweep values must be sorted ascending")
        return v


class SweepSpec(BaseModel):
    """One experiment: a base problem, one axis to vary, and a trial count per point."""

    model_config = ConfigDict(frozen=True)

    base_generator: GeneratorSpec = Field(default_factory=GeneratorSpec)
    base_adversary: AdversarySpec = Field(default_factory=AdversarySpec)
    base_fit: FitConfig = Field(default_factory=FitConfig)
    activation: ActivationSpec = Field(default_factory=ActivationSpec)
    sweep_axis: SweepAxis
    trials_per_point: int = Field(default=20, ge=1)
    seed: int = Field(default=0, ge=0)
    algo: Literal["linear_it", "neuron_it", "torrent_fc"] | None = Field(
        default=None, description="Estimator; None picks linear_it for linear, else neuron_it",
    )
    eps_alg_ratio: float | None = Field(
        default=None, ge=1.0,
        description="eps_alg = ratio * eps_true per point; None uses eps_true on an eps axis, else base_fit.eps_alg",
    )

    @property
    def estimator(self) -> str:
        if self.algo is not None:
            return self.algo
        return "linear_it" if self.activation.is_linear else "neuron_it"


class ScalingModel(str, enum.Enum):
    EPS_LOG = "eps_log"
    SQRT_EPS_LOG = "sqrt_eps_log"


@dataclass(frozen=True)
class ScalingFit:
    model: ScalingModel
    constant: float
    r_squared: float
    points_used: int = 0


@dataclass(frozen=True)
class TrialOutcome:
    axis_index: int
    trial: int
    error: float
    iterations: int
    converged: bool
    inliers_retained: int | None
    retained_size: int
    ols_error: float
    oracle_error: float
    report: FitReport | None = None


@dataclass(frozen=True)
class SweepRow:
    axis_value: float
    median_error: float
    iqr_lo: float
    iqr_hi: float
    mean_iterations: float
    inlier_precision: float
    baseline_ols_error: float
    oracle_error: float
    trials: int = 0
    converged_trials: int = 0
    min_inlier_fraction: float = math.nan

    @property
    def iqr_error(self) -> float:
        return self.iqr_hi - self.iqr_lo

    @property
    def csv_values(self) -> tuple[float, ...]:
        return (
            self.axis_value,
            self.median_error,
            self.iqr_lo,
            self.iqr_hi,
            self.mean_iterations,
            self.inlier_precision,
            self.baseline_ols_error,
            self.oracle_error,
        )


CSV_COLUMNS: tuple[str, ...] = (
    "axis_value",
    "median_error",
    "iqr_lo",
    "iqr_hi",
    "mean_iters",
    "inlier_precision",
    "ols_error",
    "oracle_error",
)


@dataclass
class SweepResult:
    rows: list[SweepRow]
    fitted_scaling: ScalingFit
    axis: AxisKind = AxisKind.EPS
    estimator: str = "linear_it"
    outcomes: list[TrialOutcome] = field(default_factory=list)
