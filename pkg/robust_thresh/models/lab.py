from __future__ import annotations

from typing import Any, Literal

from pydantic import BaseModel, ConfigDict, Field

BoundKind = Literal["upper", "lower"]


def holds(stat: float, bound: float, kind: BoundKind) -> bool:
    return stat <= bound if kind == "upper" else stat >= bound


class LabCheck(BaseModel):
    """A secondary statistic reported next to the primary one."""

    model_config = ConfigDict(frozen=True)

    name: str
    stat: float
    bound: float
    kind: BoundKind = "upper"
    passed: bool


class LabReport(BaseModel):
    """Empirical statistic vs. the bound under test.

    ``passed`` always equals ``holds(empirical_stat, paper_bound, bound_kind)``;
    extra comparisons live in ``checks`` and only affect ``all_passed``.
    """

    model_config = ConfigDict(frozen=True, populate_by_name=True)

    lemma_id: str
    trials: int = Field(ge=0)
    empirical_stat: float
    paper_bound: float
    oracle_stat: float | None = None
    bound_kind: BoundKind = "upper"
    passed: bool = Field(serialization_alias="pass")
    params_echo: dict[str, Any] = Field(default_factory=dict)
    checks: list[LabCheck] = Field(default_factory=list)
    details: dict[str, Any] = Field(default_factory=dict)

    @classmethod
    def judge(
        cls,
        lemma_id: str,
        trials: int,
        empirical_stat: float,
        paper_bound: float,
        bound_kind: BoundKind = "upper",
        **extra: Any,
    ) -> LabReport:
        return cls(
            lemma_id=lemma_id,
            trials=trials,
            empirical_stat=float(empirical_stat),
            paper_bound=float(paper_bound),
            bound_kind=bound_kind,
            passed=holds(empirical_stat, paper_bound, bound_kind),
            **extra,
        )

    @property
    def all_passed(self) -> bool:
        return self.passed and all(c.passed for c in self.checks)


def check(name: str, stat: float, bound: float, kind: BoundKind = "upper") -> LabCheck:
    return LabCheck(name=name, stat=float(stat), bound=float(bound), kind=kind, passed=holds(stat, bound, kind))
