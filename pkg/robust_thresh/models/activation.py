from __future__ import annotations

import enum
from typing import Any

from pydantic import BaseModel, ConfigDict, Field, model_validator


class ActivationKind(str, enum.Enum):
    LINEAR = "linear"
    SIGMOID = "sigmoid"
    TANH = "tanh"
    LEAKY_RELU = "leaky_relu"
    SMOOTH_LEAKY_RELU = "smooth_leaky_relu"
    RELU = "relu"


# Supremum of sigma' per kind
_LIPSCHITZ: dict[ActivationKind, float] = {
    ActivationKind.LINEAR: 1.0,
    ActivationKind.SIGMOID: 0.25,
    ActivationKind.TANH: 1.0,
    ActivationKind.LEAKY_RELU: 1.0,
    ActivationKind.SMOOTH_LEAKY_RELU: 1.0,
    ActivationKind.RELU: 1.0,
}


class ActivationSpec(BaseModel):
    """Tagged activation with the constants the step-size rules need."""

    model_config = ConfigDict(frozen=True)

    kind: ActivationKind = Field(default=ActivationKind.LINEAR, description="Activation family")
    gamma: float = Field(default=0.1, ge=0.0, description="Leaky slope (derivative floor)")
    alpha: float = Field(default=0.5, description="Smooth-leaky mixing weight")
    lip: float = Field(default=1.0, gt=0.0, description="Lipschitz constant, filled from kind when omitted")

    @model_validator(mode="before")
    @classmethod
    def _fill_lip(cls, data: Any) -> Any:
        if isinstance(data, dict) and not data.get("lip"):
            kind = ActivationKind(data.get("kind", ActivationKind.LINEAR))
            data = {**data, "lip": _LIPSCHITZ[kind]}
        return data

    @model_validator(mode="after")
    def _check_ranges(self) -> ActivationSpec:
        if self.kind is ActivationKind.LEAKY_RELU and not 0.0 < self.gamma < 1.0:
            raise ValueError(f"leaky_relu needs 0 < gamma < 1, got {self.gamma}")
        if self.kind is ActivationKind.SMOOTH_LEAKY_RELU and not 0.0 < self.alpha < 1.0:
            raise ValueError(f"smooth_leaky_relu needs 0 < alpha < 1, got {self.alpha}")
        if self.lip != _LIPSCHITZ[self.kind]:
            raise ValueError(f"{self.kind.value} has lip = {_LIPSCHITZ[self.kind]:g}, got {self.lip}")
        return self

    @property
    def is_linear(self) -> bool:
        return self.kind is ActivationKind.LINEAR

    @property
    def label(self) -> str:
        if self.kind is ActivationKind.LEAKY_RELU:
            return f"leaky_relu:{self.gamma:g}"
        if self.kind is ActivationKind.SMOOTH_LEAKY_RELU:
            return f"smooth_leaky_relu:{self.alpha:g}"
        return self.kind.value

    @classmethod
    def parse(cls, raw: str) -> ActivationSpec:
        """Parse the CLI form: ``linear``, ``leaky_relu:0.1``, ``smooth_leaky_relu:0.5``..."""
        name, _, arg = raw.strip().lower().partition(":")
        try:
            kind = ActivationKind(name)
        except ValueError:
            choices = ", ".join(k.value for k in ActivationKind)
            raise ValueError(f"unknown activation {name!r} (choose from {choices})") from None
        if kind is ActivationKind.LEAKY_RELU:
            return cls(kind=kind, gamma=float(arg) if arg else 0.1)
        if kind is ActivationKind.SMOOTH_LEAKY_RELU:
            return cls(kind=kind, alpha=float(arg) if arg else 0.5)
        if arg:
            raise ValueError(f"activation {name!r} takes no parameter")
        return cls(kind=kind)


LINEAR = ActivationSpec(kind=ActivationKind.LINEAR)
