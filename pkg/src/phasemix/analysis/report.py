"""Gaussianity reports on phase-mixed photocurrent samples."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.stats import norm

from ..moments import double_factorial
from .estimators import (DEFAULT_BOOTSTRAP_ROUNDS, MomentEstimates, correct_gaussian_background,
                         estimate_moments)
from .normality import shapiro_wilk

TESTED_HALF_ORDERS = (2, 3, 4, 5, 6, 7)
DEFAULT_SIGNIFICANCE = 2 * norm.sf(3.0)
"""Family-wise significance equal to a two-sided 3-sigma test."""


def critical_z(significance: float = DEFAULT_SIGNIFICANCE, n_tests: int = len(TESTED_HALF_ORDERS)) -> float:
    """Bonferroni-adjusted two-sided z threshold."""
    if not 0 < significance < 1:
        raise ValueError("significance must lie in (0, 1)")
    return float(norm.isf(significance / (2 * n_tests)))


def format_uncertainty(value: float, error: float, digits: int = 2) -> str:
    """Concise notation, e.g. ``format_uncertainty(2.9987, 0.0017) == '2.9987(17)'``."""
    if not (math.isfinite(error) and error > 0):
        return f"{value:g}"
    exponent = math.floor(math.log10(error)) - (digits - 1)
    decimals = max(0, -exponent)
    err_digits = round(error / 10 ** exponent)
    if err_digits >= 10 ** digits:
        exponent += 1
        decimals = max(0, -exponent)
        err_digits = round(error / 10 ** exponent)
    if decimals == 0:
        return f"{round(value / 10 ** exponent) * 10 ** exponent:.0f}({err_digits * 10 ** exponent:.0f})"
    return f"{value:.{decimals}f}({err_digits})"


@dataclass
class RatioEstimate:
    half_order: int
    value: float
    std_error: float
    reference: int
    z: float
    passed: bool

    def __str__(self):
        return f"r{2 * self.half_order} = {format_uncertainty(self.value, self.std_error)}"


@dataclass
class GaussianityReport:
    """Moment-ratio summary of one photocurrent stream.

    ``ratios[n]`` holds ``r^{2n} = sigma^{2n} / s^{2n}`` against its Gaussian
    reference ``(2n-1)!!``.  ``d`` and ``k`` are the third- and fourth-order
    ratios.  ``drift`` is a separate per-batch mean-drift diagnostic.
    """

    n_samples: int
    mean: float
    variance: float
    variance_se: float
    d: float
    d_se: float
    k: float
    k_se: float
    ratios: dict
    z_threshold: float
    significance: float
    w_test: tuple | None = None
    batches: dict | None = None
    drift: dict | None = None
    label: str = ""

    @property
    def s(self) -> float:
        return math.sqrt(self.variance)

    @property
    def verdict(self) -> dict:
        return {n: r.passed for n, r in self.ratios.items()}

    @property
    def passed(self) -> bool:
        return all(self.verdict.values())

    def to_dict(self) -> dict:
        out = asdict(self)
        out["ratios"] = {str(2 * n): asdict(r) for n, r in self.ratios.items()}
        out["verdict"] = {str(2 * n): v for n, v in self.verdict.items()}
        out["passed"] = self.passed
        out["k_text"] = format_uncertainty(self.k, self.k_se)
        out["d_text"] = format_uncertainty(self.d, self.d_se)
        if self.w_test is not None:
            out["w_test"] = {"W": self.w_test[0], "p": self.w_test[1]}
        return out

    def summary_lines(self):
        prefix = f"[{self.label}] " if self.label else ""
        yield f"{prefix}N = {self.n_samples}, s^2 = {format_uncertainty(self.variance, self.variance_se)}"
        yield f"{prefix}d = {format_uncertainty(self.d, self.d_se)}, k = {format_uncertainty(self.k, self.k_se)}"
        for n, r in self.ratios.items():
            flag = "pass" if r.passed else "FAIL"
            yield f"{prefix}{r} (Gaussian {r.reference}, z = {r.z:+.2f}) {flag}"
        if self.w_test is not None:
            yield f"{prefix}Shapiro-Wilk W = {self.w_test[0]:.5f}, p = {self.w_test[1]:.4g}"


def _ratio_entries(est: MomentEstimates, z_crit: float) -> dict:
    out = {}
    for n in TESTED_HALF_ORDERS:
        if 2 * n > est.max_order:
            break
        value, se = est.ratio(2 * n)
        ref = double_factorial(2 * n - 1)
        z = (value - ref) / se if se > 0 else (0.0 if value == ref else math.copysign(math.inf, value - ref))
        out[n] = RatioEstimate(n, value, se, ref, float(z), bool(abs(z) <= z_crit))
    return out


def _batch_diagnostics(x: np.ndarray, n_batches: int, variance: float) -> tuple[dict, dict]:
    size = len(x) // n_batches
    blocks = x[: size * n_batches].reshape(n_batches, size)
    centered = blocks - blocks.mean(axis=1, keepdims=True)
    m2 = np.mean(centered ** 2, axis=1)
    m3 = np.mean(centered ** 3, axis=1)
    m4 = np.mean(centered ** 4, axis=1)
    k_b = m4 / m2 ** 2
    d_b = m3 / m2 ** 1.5
    sqrt_b = math.sqrt(n_batches)
    aggregate = {
        "n_batches": n_batches,
        "batch_size": size,
        "k_mean": float(k_b.mean()),
        "k_sem": float(k_b.std(ddof=1) / sqrt_b),
        "d_mean": float(d_b.mean()),
        "d_sem": float(d_b.std(ddof=1) / sqrt_b),
    }
    means = blocks.mean(axis=1)
    chi2 = float(np.sum((means - means.mean()) ** 2) / (variance / size))
    drift = {
        "batch_means_std": float(means.std(ddof=1)),
        "expected_std": float(math.sqrt(variance / size)),
        "chi2": chi2,
        "dof": n_batches - 1,
        "reduced_chi2": chi2 / (n_batches - 1),
    }
    return aggregate, drift


def report_from_estimates(est: MomentEstimates, significance: float = DEFAULT_SIGNIFICANCE,
                          label: str = "") -> GaussianityReport:
    z_crit = critical_z(significance)
    var = est[2]
    d, d_se = est.ratio(3)
    k, k_se = est.ratio(4)
    return GaussianityReport(
        n_samples=est.n_samples, mean=est.mean, variance=var.value, variance_se=var.std_error,
        d=d, d_se=d_se, k=k, k_se=k_se, ratios=_ratio_entries(est, z_crit),
        z_threshold=z_crit, significance=significance, label=label)


def gaussianity_report(samples, max_order: int = 14,
                       bootstrap_rounds: int = DEFAULT_BOOTSTRAP_ROUNDS, seed: int = 0,
                       significance: float = DEFAULT_SIGNIFICANCE, n_batches: int | None = None,
                       shapiro: bool = True, label: str = "", workers: int = 1,
                       background_variance: float = 0.0) -> GaussianityReport:
    """Moment ratios up to ``max_order`` with per-order pass/fail against Gaussian values.

    Each order passes when ``|r - (2n-1)!!|`` is within the Bonferroni-adjusted
    z threshold times its bootstrap error.  With ``n_batches`` the stream is
    also split into consecutive batches for an aggregate ``k``/``d`` and a
    mean-drift diagnostic.  A known independent Gaussian ``background_variance``
    is removed at the cumulant level before the ratios are formed; the W test
    and batch diagnostics still see the raw samples.
    """
    x = np.asarray(samples, dtype=float).ravel()
    est = estimate_moments(x, max_order, bootstrap_rounds, seed, workers)
    if background_variance:
        est = correct_gaussian_background(est, background_variance)
    rep = report_from_estimates(est, significance, label)
    if shapiro:
        w = shapiro_wilk(x, seed=seed)
        rep.w_test = (w.W, w.p)
    if n_batches:
        if n_batches < 2 or len(x) // n_batches < 30:
            raise ValueError("batches need n_batches >= 2 and at least 30 samples each")
        rep.batches, rep.drift = _batch_diagnostics(x, n_batches, rep.variance)
    return rep


@dataclass
class AsymmetryEstimate:
    """``|s_cos**2 - s_sin**2|`` inferred under the Gaussian-state assumption."""

    value: float
    std_error: float
    delta: float
    delta_se: float
    consistent: bool
    verdict: str = field(default="")


def infer_asymmetry(report: GaussianityReport, s: float | None = None,
                    z: float = 3.0) -> AsymmetryEstimate:
    """Component variance asymmetry from the mixed kurtosis, assuming a Gaussian state and ``c = 0``.

    ``delta = (k - 3) s**4`` and ``(8/3) delta = (s_cos**2 - s_sin**2)**2``.  A
    ``delta`` below zero by more than ``z`` errors cannot come from any Gaussian
    state; that is reported, not raised.
    """
    s = report.s if s is None else s
    s4 = s ** 4
    delta = (report.k - 3.0) * s4
    delta_se = report.k_se * s4
    if delta < -z * delta_se:
        return AsymmetryEstimate(0.0, float("nan"), delta, delta_se, False,
                                 "inconsistent with Gaussian state (negative fourth-order deviation)")
    sq = 8.0 / 3.0 * max(delta, 0.0)
    value = math.sqrt(sq)
    if value > 0:
        se = (8.0 / 3.0) * delta_se / (2.0 * value)
    else:
        se = math.sqrt(8.0 / 3.0 * delta_se)
    verdict = "symmetric within errors" if delta <= z * delta_se else "asymmetric components"
    return AsymmetryEstimate(value, se, delta, delta_se, True, verdict)
