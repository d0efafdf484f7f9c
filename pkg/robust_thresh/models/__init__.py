from robust_thresh.models.activation import ActivationKind, ActivationSpec
from robust_thresh.models.dataset import Dataset, DatasetMeta, NoiseParams, validate_dataset
from robust_thresh.models.fit import FitConfig, FitReport, InitKind, InitSpec, IterationRecord, StepPlan
from robust_thresh.models.lab import LabCheck, LabReport
from robust_thresh.models.params import ModelParams, SpectrumInfo, spectrum_of
from robust_thresh.models.retained import RetainedSet
from robust_thresh.models.sweep import (
    AxisKind,
    ScalingFit,
    ScalingModel,
    SweepAxis,
    SweepResult,
    SweepRow,
    SweepSpec,
)
from robust_thresh.models.synth import AdversaryKind, AdversarySpec, CovariateLaw, GeneratorSpec

__all__ = [
    "ActivationKind",
    "ActivationSpec",
    "AdversaryKind",
    "AdversarySpec",
    "AxisKind",
    "CovariateLaw",
    "Dataset",
    "DatasetMeta",
    "FitConfig",
    "FitReport",
    "GeneratorSpec",
    "InitKind",
    "InitSpec",
    "IterationRecord",
    "LabCheck",
    "LabReport",
    "ModelParams",
    "NoiseParams",
    "RetainedSet",
    "ScalingFit",
    "ScalingModel",
    "SpectrumInfo",
    "StepPlan",
    "SweepAxis",
    "SweepResult",
    "SweepRow",
    "SweepSpec",
    "spectrum_of",
    "validate_dataset",
]
