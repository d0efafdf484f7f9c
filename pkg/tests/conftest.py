from __future__ import annotations

from collections.abc import Callable

import pytest

from robust_thresh.config import settings
from robust_thresh.models.activation import LINEAR, ActivationSpec
from robust_thresh.models.dataset import Dataset
from robust_thresh.models.synth import AdversaryKind, AdversarySpec, GeneratorSpec
from robust_thresh.services.synth import corrupt, generate_clean


@pytest.fixture(autouse=True)
def _restore_settings():
    saved = settings.model_dump()
    yield
    for key, value in saved.items():
        setattr(settings, key, value)


@pytest.fixture
def make_dataset() -> Callable[..., Dataset]:
    def build(
        d: int = 5,
        n: int = 200,
        eps: float = 0.0,
        nu: float = 0.0,
        adversary: AdversaryKind = AdversaryKind.ADDITIVE_LABEL_OUTLIER,
        act: ActivationSpec = LINEAR,
        seed: int = 0,
        **generator_fields,
    ) -> Dataset:
        clean = generate_clean(GeneratorSpec(d=d, n=n, nu=nu, seed=seed, **generator_fields), act)
        return corrupt(clean, AdversarySpec(kind=adversary, eps_true=eps, seed=seed))

    return build

