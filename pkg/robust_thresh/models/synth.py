"""Generator and adversary descriptions (pure data, no sampling here)."""
from __future__ import annotations

import enum
from typing import Literal

from pydantic import BaseModel, ConfigDict, Field, field_validator


class CovariateLaw(str, enum.Enum):
    GAUSSIAN = "gaussian"
    RADEMACHER = "rademacher"
    UNIFORM_BALL = "uniform_ball"


class GeneratorSpec(BaseModel):
    model_config = ConfigDict(frozen=True)

    d: int = Field(default=10, ge=1, description="Covariate dimension")
    n: int = Field(default=1000, ge=1, description="Number of samples N")
    k: int = Field(default=1, ge=1, description="Number of outputs K")
    sigma: str | list[list[float]] = Field(
        default="identity", description="Second-moment matrix: identity, diag_geo:KAPPA or explicit d x d",
    )
    covariate_law: CovariateLaw = CovariateLaw.GAUSSIAN
    nu: float = Field(default=0.0, ge=0.0, description="Label noise standard deviation")
    w_true: list[list[float]] | None = Field(default=None, description="K x d truth; None draws one")
    w_radius: float = Field(default=1.0, gt=0.0, description="Norm R of the randomly drawn truth")
    seed: int = Field(default=0, ge=0)
    clip_covariates: float | None = Field(default=None, gt=0.0, description="Rescale clean ||x|| above B to B")

    @field_validator("sigma")
    @classmethod
    def _sigma_shorthand(cls, v: str | list[list[float]]) -> str | list[list[float]]:
        if isinstance(v, str):
            name, _, arg = v.partition(":")
            if name == "identity" and not arg:
                return v
            if name == "diag_geo" and arg and float(arg) >= 1.0:
                return v
            raise ValueError(f"sigma must be identity or diag_geo:KAPPA (KAPPA >= 1), got {v!r}")
        return v

    @property
    def sigma_desc(self) -> str:
        return self.sigma if isinstance(self.sigma, str) else f"matrix{len(self.sigma)}x{len(self.sigma)}"


class AdversaryKind(str, enum.Enum):
    NONE = "none"
    LABEL_SIGN_FLIP_SCALE = "flip"
    ADDITIVE_LABEL_OUTLIER = "additive"
    ORACLE_MODEL = "oracle"
    LEVERAGE_ATTACK = "leverage"
    COVARIATE_AND_LABEL = "covlabel"


class AdversarySpec(BaseModel):
    model_config = ConfigDict(frozen=True)

    kind: AdversaryKind = AdversaryKind.NONE
    eps_true: float = Field(default=0.0, ge=0.0, description="Corrupted fraction; floor(eps N) samples")
    seed: int = Field(default=0, ge=0)
    factor: float = Field(default=1.0, gt=0.0, description="Label scale for sign flips")
    magnitude: float = Field(default=1000.0, description="Additive label shift")
    w_adv: list[list[float]] | None = Field(default=None, description="Adversarial model; None = -w*")
    direction_mode: Literal["flip", "orthogonal"] = "flip"
    oracle_mode: Literal["neg", "random"] = Field(default="neg", description="Oracle model when w_adv is unset")
    bound: float = Field(default=10.0, gt=0.0, description="B, the norm of injected covariates")

    @property
    def label(self) -> str:
        k = self.kind
        if k is AdversaryKind.LABEL_SIGN_FLIP_SCALE:
            return f"flip:{self.factor:g}"
        if k is AdversaryKind.ADDITIVE_LABEL_OUTLIER:
            return f"additive:{self.magnitude:g}"
        if k is AdversaryKind.LEVERAGE_ATTACK:
            return f"leverage:{self.direction_mode}"
        if k is AdversaryKind.COVARIATE_AND_LABEL:
            return f"covlabel:{self.bound:g}"
        if k is AdversaryKind.ORACLE_MODEL and self.oracle_mode == "random":
            return "oracle:random"
        return k.value

    @classmethod
    def parse(cls, raw: str, eps_true: float = 0.0, seed: int = 0) -> AdversarySpec:
        """``none``, ``flip:F``, ``additive:M``, ``oracle[:neg|random]``, ``leverage[:flip|orthogonal]``, ``covlabel:B``."""
        name, _, arg = raw.strip().lower().partition(":")
        try:
            kind = AdversaryKind(name)
        except ValueError:
            choices = ", ".join(k.value for k in AdversaryKind)
            raise ValueError(f"unknown adversary {name!r} (choose from {choices})") from None
        base = {"kind": kind, "eps_true": eps_true, "seed": seed}
        if kind is AdversaryKind.LABEL_SIGN_FLIP_SCALE and arg:
            base["factor"] = float(arg)
        elif kind is AdversaryKind.ADDITIVE_LABEL_OUTLIER and arg:
            base["magnitude"] = float(arg)
        elif kind is AdversaryKind.LEVERAGE_ATTACK and arg:
            base["direction_mode"] = arg
        elif kind is AdversaryKind.COVARIATE_AND_LABEL and arg:
            base["bound"] = float(arg)
        elif kind is AdversaryKind.ORACLE_MODEL and arg:
            base["oracle_mode"] = arg
        elif arg:
            raise ValueError(f"adversary {name!r} takes no parameter")
        return cls(**base)
