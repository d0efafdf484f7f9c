"""On-disk dataset directory: covariates.csv, targets.csv, optional mask.csv, meta.json."""
from __future__ import annotations

import logging
from pathlib import Path

import numpy as np
from pydantic import ValidationError

from robust_thresh.errors import DatasetFormatError, ReportIOError
from robust_thresh.models.dataset import Dataset, DatasetMeta, validate_dataset

log = logging.getLogger(__name__)

COVARIATES_FILE = "covariates.csv"
TARGETS_FILE = "targets.csv"
MASK_FILE = "mask.csv"
META_FILE = "meta.json"

# 17 significant digits round-trip every float64 exactly
_FULL_PRECISION = "%.17g"


def save_dataset(ds: Dataset, directory: str | Path) -> Path:
    out = Path(directory)
    try:
        out.mkdir(parents=True, exist_ok=True)
        np.savetxt(out / COVARIATES_FILE, ds.covariates, fmt=_FULL_PRECISION, delimiter=",")
        np.savetxt(out / TARGETS_FILE, ds.targets, fmt=_FULL_PRECISION, delimiter=",")
        mask_path = out / MASK_FILE
        if ds.inlier_mask is not None:
            np.savetxt(mask_path, ds.inlier_mask.astype(np.int8).reshape(1, -1), fmt="%d", delimiter=",")
        elif mask_path.exists():
            mask_path.unlink()
        (out / META_FILE).write_text(ds.meta.model_dump_json(indent=2) + "\n", encoding="utf-8")
    except OSError as e:
        raise ReportIOError(str(out), e) from e
    log.info("Saved dataset d=%d N=%d K=%d to %s", ds.dim, ds.n_samples, ds.n_outputs, out)
    return out


def _read_matrix(path: Path, dtype: type = np.float64) -> np.ndarray:
    lines = [ln for ln in path.read_text(encoding="utf-8").splitlines() if ln.strip()]
    if not lines:
        raise DatasetFormatError("load_dataset", f"{path.name} is empty")
    arr = np.loadtxt(path, delimiter=",", ndmin=2, dtype=dtype)
    return arr.reshape(len(lines), -1)


def load_dataset(directory: str | Path) -> Dataset:
    src = Path(directory)
    try:
        x = _read_matrix(src / COVARIATES_FILE)
        y = _read_matrix(src / TARGETS_FILE)
        mask = None
        if (src / MASK_FILE).exists():
            mask = _read_matrix(src / MASK_FILE, dtype=np.int64).ravel().astype(bool)
        meta = DatasetMeta()
        if (src / META_FILE).exists():
            meta = DatasetMeta.model_validate_json((src / META_FILE).read_text(encoding="utf-8"))
    except (OSError, ValueError, ValidationError) as e:
        raise DatasetFormatError("load_dataset", f"cannot read dataset at {src}", e) from e

    ds = Dataset.build(x, y, mask, meta)
    problems = validate_dataset(ds)
    if problems:
        raise DatasetFormatError("load_dataset", "; ".join(problems))
    log.debug("Loaded dataset d=%d N=%d K=%d from %s", ds.dim, ds.n_samples, ds.n_outputs, src)
    return ds
