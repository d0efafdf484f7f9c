"""All randomness lives here.

Every stream is a Philox counter-based generator keyed by (seed, purpose, ...).
Per-sample streams reserve a fixed block of counters for each sample index,
so a sample's draws do not depend on chunking, worker count or order.
"""
from __future__ import annotations

import enum
import logging
import math
from concurrent.futures import ThreadPoolExecutor

import numpy as np
from scipy.special import ndtri

from robust_thresh.config import settings

log = logging.getLogger(__name__)

# Philox emits four 64-bit words per counter value
_WORDS_PER_BLOCK = 4
# midpoints of a 2**-52 grid; every value is exact and strictly inside (0, 1)
_GRID_BITS = 52


class Purpose(enum.IntEnum):
    COVARIATES = 0
    NOISE = 1
    WEIGHTS = 2
    ADVERSARY = 3
    INIT = 4
    LAB = 5
    SWEEP = 6


def stream_key(seed: int, purpose: Purpose, *extra: int) -> np.ndarray:
    return np.random.SeedSequence([seed, int(purpose), *extra]).generate_state(2, np.uint64)


def generator(seed: int, purpose: Purpose, *extra: int) -> np.random.Generator:
    """A whole-stream generator for draws that are not tied to a sample index."""
    return np.random.Generator(np.random.Philox(key=stream_key(seed, purpose, *extra)))


def open_unit_interval(raw: np.ndarray) -> np.ndarray:
    """Map raw 64-bit words to floats in the open interval (0, 1)."""
    top = np.asarray(raw, dtype=np.uint64) >> np.uint64(64 - _GRID_BITS)
    return (top.astype(np.float64) + 0.5) * 2.0**-_GRID_BITS


def _block(key: np.ndarray, start: int, rows: int, width: int) -> np.ndarray:
    blocks = math.ceil(width / _WORDS_PER_BLOCK)
    bitgen = np.random.Philox(key=key, counter=start * blocks)
    raw = bitgen.random_raw(rows * blocks * _WORDS_PER_BLOCK).reshape(rows, -1)
    return open_unit_interval(raw[:, :width])


def sample_uniforms(
    seed: int,
    purpose: Purpose,
    n: int,
    width: int,
    *extra: int,
    chunk_size: int | None = None,
    workers: int | None = None,
) -> np.ndarray:
    """n x width uniforms in (0, 1); row i comes from sample i's own counter block."""
    if n == 0 or width == 0:
        return np.empty((n, width))
    key = stream_key(seed, purpose, *extra)
    chunk = max(1, chunk_size or settings.chunk_size)
    starts = list(range(0, n, chunk))
    if len(starts) == 1:
        return _block(key, 0, n, width)
    log.debug("drawing %d x %d uniforms in %d chunks", n, width, len(starts))
    with ThreadPoolExecutor(max_workers=workers or settings.workers) as pool:
        parts = list(pool.map(lambda s: _block(key, s, min(chunk, n - s), width), starts))
    return np.concatenate(parts, axis=0)


def sample_normals(seed: int, purpose: Purpose, n: int, width: int, *extra: int, **kw: int | None) -> np.ndarray:
    """Standard normals by inverse CDF on the per-sample uniforms."""
    return ndtri(sample_uniforms(seed, purpose, n, width, *extra, **kw))


def uniform_ball(rng: np.random.Generator, d: int, radius: float) -> np.ndarray:
    """One point drawn uniformly from the d-dimensional ball of the given radius."""
    direction = rng.standard_normal(d)
    direction /= np.linalg.norm(direction)
    return radius * rng.random() ** (1.0 / d) * direction
