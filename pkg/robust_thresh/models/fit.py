from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Any, Literal

from pydantic import BaseModel, ConfigDict, Field, field_validator

from robust_thresh.models.params import ModelParams, SpectrumInfo
from robust_thresh.models.retained import RetainedSet


class InitKind(str, enum.Enum):
    ZERO = "zero"
    RANDOM_BALL = "random_ball"


class InitSpec(BaseModel):
    model_config = ConfigDict(frozen=True)

    kind: InitKind = InitKind.ZERO
    radius_scale: float | None = Field(
        default=None, gt=0.0, description="Ball radius as a fraction of radius_ref; None = sqrt(1/(2 pi d))",
    )

    def scale_for(self, d: int) -> float:
        if self.radius_scale is not None:
            return self.radius_scale
        return math.sqrt(1.0 / (2.0 * math.pi * d))

    @classmethod
    def parse(cls, raw: str) -> InitSpec:
        name, _, arg = raw.strip().lower().partition(":")
        kind = InitKind(name)
        if kind is InitKind.ZERO:
            return cls()
        return cls(kind=kind, radius_scale=float(arg) if arg else None)


class FitConfig(BaseModel):
    """Inputs of one estimator run. Values left as None fall back to settings."""

    model_config = ConfigDict(frozen=True)

    eps_alg: float = Field(default=0.1, ge=0.0, description="Algorithmic corruption fraction")
    eta: float | Literal["auto"] = Field(default="auto", description="Step size")
    max_iters: int | Literal["auto"] = Field(default="auto", description="Iteration cap T")
    target_tol: float | None = Field(default=None, gt=0.0, description="Target accuracy for T")
    stop_param_change: float | None = Field(default=None, gt=0.0)
    init: InitSpec = Field(default_factory=InitSpec)
    seed: int = Field(default=0, ge=0)
    spectrum: SpectrumInfo | Literal["estimate"] = "estimate"
    restarts: int | None = Field(default=None, ge=1, description="Random restarts; None = per activation")
    radius_ref: Literal["ols", "truth"] | float = Field(default="ols", description="Scale reference for init and T")

    @field_validator("eta")
    @classmethod
    def _positive_eta(cls, v: float | str) -> float | str:
        if v != "auto" and not (isinstance(v, float | int) and v > 0):
            raise ValueError("eta must be positive or 'auto'")
        return v

    @field_validator("max_iters")
    @classmethod
    def _positive_iters(cls, v: int | str) -> int | str:
        if v != "auto" and v < 1:
            raise ValueError("max_iters must be >= 1 or 'auto'")
        return v

    @field_validator("radius_ref")
    @classmethod
    def _positive_radius(cls, v: float | str) -> float | str:
        if not isinstance(v, str) and v <= 0:
            raise ValueError("radius_ref must be positive")
        return v


@dataclass(frozen=True)
class StepPlan:
    eta: float
    t_max: int
    stop_param_change: float
    eta_rule: str = ""
    spectrum: SpectrumInfo | None = None
    radius_ref: float = 1.0


@dataclass(frozen=True)
class IterationRecord:
    iter: int
    loss_on_retained: float
    param_change: float
    retained_true_positives: int | None
    retained_false_positives: int | None
    param_error_if_truth_known: float | None


@dataclass
class FitReport:
    estimate: ModelParams
    trace: list[IterationRecord]
    config_echo: FitConfig
    converged: bool
    algo: str = "linear_it"
    activation: str = "linear"
    step_plan: StepPlan | None = None
    retained: RetainedSet | None = None
    restart_index: int = 0
    restart_losses: list[float] = field(default_factory=list)

    @property
    def iterations(self) -> int:
        return len(self.trace)

    @property
    def final_loss(self) -> float:
        return self.trace[-1].loss_on_retained if self.trace else math.nan

    @property
    def final_error(self) -> float | None:
        return self.trace[-1].param_error_if_truth_known if self.trace else None

    def to_dict(self) -> dict[str, Any]:
        plan = None
        if self.step_plan is not None:
            plan = {
                "eta": self.step_plan.eta,
                "t_max": self.step_plan.t_max,
                "stop_param_change": self.step_plan.stop_param_change,
                "eta_rule": self.step_plan.eta_rule,
                "radius_ref": self.step_plan.radius_ref,
                "spectrum": None if self.step_plan.spectrum is None else self.step_plan.spectrum.model_dump(),
            }
        return {
            "algo": self.algo,
            "activation": self.activation,
            "converged": self.converged,
            "estimate": self.estimate.weights.tolist(),
            "restart_index": self.restart_index,
            "restart_losses": [_finite_or_none(v) for v in self.restart_losses],
            "step_plan": plan,
            "retained": None if self.retained is None else self.retained.indices.tolist(),
            "config_echo": self.config_echo.model_dump(mode="json"),
            "trace": [
                {
                    "iter": r.iter,
                    "loss_on_retained": _finite_or_none(r.loss_on_retained),
                    "param_change": _finite_or_none(r.param_change),
                    "retained_true_positives": r.retained_true_positives,
                    "retained_false_positives": r.retained_false_positives,
                    "param_error_if_truth_known": _finite_or_none(r.param_error_if_truth_known),
                }
                for r in self.trace
            ],
        }


def _finite_or_none(v: float | None) -> float | None:
    if v is None or not math.isfinite(v):
        return None
    return float(v)
