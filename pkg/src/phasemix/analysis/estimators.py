"""Central-moment estimation with bootstrap errors, and cumulant-level corrections."""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from math import comb

import numpy as np

from ..simulate import chunk_rng

STREAM_BOOTSTRAP = 7
MAX_ORDER = 14
DEFAULT_BOOTSTRAP_ROUNDS = 200


@dataclass(frozen=True)
class MomentEstimate:
    order: int
    value: float
    std_error: float
    method: str
    n_samples: int


def _raw_to_central(raw: np.ndarray) -> np.ndarray:
    """Rows of raw moments ``m_0..m_K`` -> central moments about ``m_1``."""
    raw = np.atleast_2d(raw)
    K = raw.shape[1] - 1
    mu = raw[:, 1]
    out = np.zeros_like(raw)
    for k in range(K + 1):
        acc = np.zeros(raw.shape[0])
        for j in range(k + 1):
            acc += comb(k, j) * raw[:, j] * (-mu) ** (k - j)
        out[:, k] = acc
    return out


def moments_to_cumulants(m: np.ndarray) -> np.ndarray:
    """Moments ``m_0..m_K`` (``m_0 = 1``) to cumulants ``k_0..k_K`` (``k_0 = 0``), row-wise."""
    m = np.atleast_2d(np.asarray(m, dtype=float))
    K = m.shape[1] - 1
    kap = np.zeros_like(m)
    for n in range(1, K + 1):
        acc = m[:, n].copy()
        for k in range(1, n):
            acc -= comb(n - 1, k - 1) * kap[:, k] * m[:, n - k]
        kap[:, n] = acc
    return kap


def cumulants_to_moments(kap: np.ndarray) -> np.ndarray:
    kap = np.atleast_2d(np.asarray(kap, dtype=float))
    K = kap.shape[1] - 1
    m = np.zeros_like(kap)
    m[:, 0] = 1.0
    for n in range(1, K + 1):
        acc = np.zeros(kap.shape[0])
        for k in range(1, n + 1):
            acc += comb(n - 1, k - 1) * kap[:, k] * m[:, n - k]
        m[:, n] = acc
    return m


@dataclass(frozen=True)
class MomentEstimates:
    """Central moments ``central[k]`` for ``k = 0..max_order`` plus bootstrap replicates.

    ``central[0] = 1`` and ``central[1] = 0``.  ``replicates`` has shape
    ``(rounds, max_order + 1)`` and drives every standard error reported.
    """

    central: np.ndarray
    replicates: np.ndarray
    n_samples: int
    mean: float
    method: str = "bootstrap"

    @property
    def max_order(self) -> int:
        return len(self.central) - 1

    def _se(self, rep: np.ndarray) -> float:
        if len(rep) < 2:
            return float("nan")
        return float(np.std(rep, ddof=1))

    def __getitem__(self, order: int) -> MomentEstimate:
        if not 1 <= order <= self.max_order:
            raise KeyError(order)
        return MomentEstimate(order, float(self.central[order]), self._se(self.replicates[:, order]),
                              self.method, self.n_samples)

    def __iter__(self):
        return (self[k] for k in range(1, self.max_order + 1))

    def ratio(self, order: int) -> tuple[float, float]:
        """``mu_order / mu_2**(order/2)`` and its bootstrap standard error."""
        with np.errstate(divide="ignore", invalid="ignore"):
            value = self.central[order] / self.central[2] ** (order / 2)
            reps = self.replicates[:, order] / self.replicates[:, 2] ** (order / 2)
        return float(value), self._se(reps)


def _powers(x: np.ndarray, max_order: int) -> np.ndarray:
    P = np.empty((len(x), max_order + 1))
    P[:, 0] = 1.0
    for k in range(1, max_order + 1):
        np.multiply(P[:, k - 1], x, out=P[:, k])
    return P


def estimate_moments(samples, max_order: int = MAX_ORDER,
                     bootstrap_rounds: int = DEFAULT_BOOTSTRAP_ROUNDS, seed: int = 0,
                     workers: int = 1) -> MomentEstimates:
    """Mean-subtracted central moments up to ``max_order`` with bootstrap errors.

    Each bootstrap round resamples with replacement using its own seeded
    generator, so results do not depend on ``workers``.

    Raises
    ------
    ValueError
        If fewer than ``max(30, 2 * max_order)`` samples are given or
        ``max_order`` exceeds 14.
    """
    x = np.asarray(samples, dtype=float).ravel()
    if not 2 <= max_order <= MAX_ORDER:
        raise ValueError(f"max_order must lie in [2, {MAX_ORDER}], got {max_order}")
    n = len(x)
    if n < max(30, 2 * max_order):
        raise ValueError(f"need at least {max(30, 2 * max_order)} samples, got {n}")
    if not np.all(np.isfinite(x)):
        raise ValueError("samples contain non-finite values")
    mean = float(x.mean())
    P = _powers(x - mean, max_order)
    central = _raw_to_central(P.mean(axis=0))[0]

    def one_round(r):
        rng = chunk_rng(seed, STREAM_BOOTSTRAP, r)
        counts = np.bincount(rng.integers(0, n, n), minlength=n).astype(float)
        return counts @ P / n

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            raw = list(pool.map(one_round, range(bootstrap_rounds)))
    else:
        raw = [one_round(r) for r in range(bootstrap_rounds)]
    reps = _raw_to_central(np.array(raw)) if raw else np.zeros((0, max_order + 1))
    return MomentEstimates(central, reps, n, mean)


def correct_gaussian_background(moments: MomentEstimates, background_variance: float) -> MomentEstimates:
    """Remove an independent additive Gaussian background of known variance.

    Only the second cumulant changes; cumulants of order three and above are
    untouched by a Gaussian addend.  Replicates are corrected the same way, so
    the standard errors propagate.
    """
    if background_variance < 0:
        raise ValueError("background variance must be nonnegative")
    if background_variance >= moments.central[2]:
        raise ValueError(f"background variance {background_variance} exceeds the total "
                         f"variance {moments.central[2]}")

    def fix(rows):
        kap = moments_to_cumulants(rows)
        kap[:, 2] -= background_variance
        return cumulants_to_moments(kap)

    return replace(moments, central=fix(moments.central)[0],
                   replicates=fix(moments.replicates) if len(moments.replicates) else moments.replicates,
                   method=f"{moments.method}+background")


def combine_two_beams(a, b, sign: str = "-") -> np.ndarray:
    """``(a + b)/sqrt2`` or ``(a - b)/sqrt2`` of simultaneously acquired streams."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape:
        raise ValueError(f"beam streams differ in length: {a.shape} vs {b.shape}")
    if sign in ("+", "plus", "sum"):
        return (a + b) / np.sqrt(2.0)
    if sign in ("-", "minus", "difference"):
        return (a - b) / np.sqrt(2.0)
    raise ValueError(f"sign must be '+' or '-', got {sign!r}")
