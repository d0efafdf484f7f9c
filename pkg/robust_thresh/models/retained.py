from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from robust_thresh.models.dataset import frozen_array


@dataclass(frozen=True)
class RetainedSet:
    """Indices kept by hard thresholding, strictly increasing, with their losses."""

    indices: np.ndarray
    losses_at_selection: np.ndarray

    @classmethod
    def of(cls, indices: np.ndarray, losses: np.ndarray) -> RetainedSet:
        return cls(frozen_array(indices, dtype=np.int64), frozen_array(losses))

    @classmethod
    def everything(cls, zeta: np.ndarray) -> RetainedSet:
        return cls.of(np.arange(zeta.shape[0]), zeta)

    @property
    def size(self) -> int:
        return int(self.indices.shape[0])

    def as_mask(self, n: int) -> np.ndarray:
        mask = np.zeros(n, dtype=bool)
        mask[self.indices] = True
        return mask

    def same_as(self, other: RetainedSet | None) -> bool:
        return other is not None and np.array_equal(self.indices, other.indices)

    def composition(self, inlier_mask: np.ndarray | None) -> tuple[int | None, int | None]:
        """(true positives, false positives) against a ground-truth inlier mask."""
        if inlier_mask is None:
            return None, None
        tp = int(np.count_nonzero(inlier_mask[self.indices]))
        return tp, self.size - tp
