"""Shapiro-Wilk W test with seeded subsampling of large inputs."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import stats

from ..simulate import chunk_rng

MIN_N = 3
MAX_N = 5000
STREAM_SUBSAMPLE = 11


@dataclass(frozen=True)
class ShapiroWilkResult:
    W: float
    p: float
    n_used: int
    subsampled: bool
    seed: int | None

    def __iter__(self):
        yield self.W
        yield self.p


def shapiro_wilk(samples, max_n: int = MAX_N, seed: int = 0) -> ShapiroWilkResult:
    """W statistic and p-value (Royston's extension, as implemented by scipy).

    Inputs longer than ``max_n`` are subsampled without replacement using
    ``seed``; the seed is recorded in the result.
    """
    x = np.asarray(samples, dtype=float).ravel()
    if not np.all(np.isfinite(x)):
        raise ValueError("samples contain non-finite values")
    if not MIN_N <= max_n <= MAX_N:
        raise ValueError(f"max_n must lie in [{MIN_N}, {MAX_N}]")
    subsampled = len(x) > max_n
    if subsampled:
        x = x[np.sort(chunk_rng(seed, STREAM_SUBSAMPLE, 0).choice(len(x), max_n, replace=False))]
    if len(x) < MIN_N:
        raise ValueError(f"Shapiro-Wilk needs at least {MIN_N} samples, got {len(x)}")
    if np.ptp(x) == 0:
        raise ValueError("Shapiro-Wilk is undefined for zero-variance samples")
    res = stats.shapiro(x)
    return ShapiroWilkResult(float(res.statistic), float(res.pvalue), len(x), subsampled,
                             seed if subsampled else None)
