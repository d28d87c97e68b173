"""Least-squares reconstruction of the stationary two-mode covariance from a scan.

Under the stationarity assumption the state has the symmetric form with
parameters ``(alpha, beta, gamma, delta)``, and the mixed variance at each
setting is linear in them:

    v_i = x_i . (alpha, beta, gamma, delta) + o_i

where ``x_i`` is read off the measurement matrix and ``o_i`` is any
setting-dependent added noise.  HD settings never see ``delta``; RD settings
can.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..measurement import HD, RD, lorentzian_rd_coefficients
from ..states import symmetric_matrix
from .estimators import estimate_moments

PARAMETERS = ("alpha", "beta", "gamma", "delta")
RANK_TOL = 1e-8


class RankDeficientScanError(ValueError):
    def __init__(self, message, unresolved):
        super().__init__(message)
        self.unresolved = unresolved


@dataclass
class ReconstructionResult:
    """Fitted parameters; inaccessible ones are ``None`` in ``params``."""

    technique: str
    params: dict
    std_errors: dict
    covariance: np.ndarray
    fitted: tuple
    inaccessible: list
    chi2: float
    dof: int
    per_point_variance: np.ndarray = field(repr=False)
    per_point_se: np.ndarray = field(repr=False)
    predicted_variance: np.ndarray = field(repr=False)

    @property
    def reduced_chi2(self) -> float:
        return self.chi2 / self.dof if self.dof > 0 else float("nan")

    def to_dict(self):
        return {
            "technique": self.technique,
            "params": self.params,
            "std_errors": self.std_errors,
            "covariance": self.covariance.tolist(),
            "fitted": list(self.fitted),
            "inaccessible": self.inaccessible,
            "chi2": self.chi2,
            "dof": self.dof,
            "reduced_chi2": self.reduced_chi2,
        }


def scan_models(settings, technique: str, coefficient_fn=None):
    if technique == "hd":
        return [HD(float(s)) for s in settings]
    if technique == "rd":
        fn = coefficient_fn or lorentzian_rd_coefficients
        return [RD(float(s), fn) for s in settings]
    raise ValueError(f"unknown technique {technique!r}")


def design_matrix(models):
    """Rows ``x_i`` and offsets ``o_i`` of the linear variance model."""
    basis = [symmetric_matrix(*e) for e in np.eye(4)]
    X, offset = [], []
    for M in models:
        A = M.matrix()
        X.append([0.5 * np.trace(A @ E @ A.T) for E in basis])
        offset.append(0.5 * np.trace(M.added_noise()))
    return np.array(X), np.array(offset)


# Dense settings grids used to decide what a technique can see at all.
REFERENCE_GRIDS = {"hd": np.linspace(0.0, np.pi, 64, endpoint=False),
                   "rd": np.linspace(-10.0, 10.0, 201)}


def inaccessible_parameters(technique: str, coefficient_fn=None) -> list:
    """Parameters the technique never sees, whatever the settings (``delta`` for HD)."""
    X, _ = design_matrix(scan_models(REFERENCE_GRIDS[technique], technique, coefficient_fn))
    scale = np.abs(X).max()
    return [p for j, p in enumerate(PARAMETERS) if np.abs(X[:, j]).max() <= RANK_TOL * scale]


def _weighted_fit(X, offset, v, se, technique, inaccessible):
    keep = [j for j, p in enumerate(PARAMETERS) if p not in inaccessible]
    A = X[:, keep] / se[:, None]
    b = (v - offset) / se
    _, sv, Vt = np.linalg.svd(A, full_matrices=True)
    sv = np.concatenate([sv, np.zeros(len(keep) - len(sv))])
    null = Vt[sv <= RANK_TOL * sv.max()]
    if len(null):
        unresolved = [dict(zip([PARAMETERS[j] for j in keep], vec.round(6).tolist())) for vec in null]
        raise RankDeficientScanError(
            f"scan with {len(X)} settings cannot resolve the {technique.upper()} parameters "
            f"{[PARAMETERS[j] for j in keep]}; unresolved directions: {unresolved}", unresolved)
    theta, *_ = np.linalg.lstsq(A, b, rcond=None)
    cov = np.linalg.inv(A.T @ A)
    resid = A @ theta - b
    return theta, cov, keep, float(resid @ resid)


def reconstruct_symmetric_covariance(scan, technique: str | None = None, coefficient_fn=None,
                                     bootstrap_rounds: int = 200, seed: int = 0) -> ReconstructionResult:
    """Weighted least-squares fit of per-setting variances to the symmetric model.

    The caller asserts stationarity by using this function.  Parameters the
    technique cannot see at any setting (``delta`` for HD) are reported as
    inaccessible and dropped; a grid too sparse for the rest raises
    :class:`RankDeficientScanError` listing the unresolved directions.
    """
    technique = technique or scan.header["technique"]
    models = scan_models(scan.settings, technique, coefficient_fn)
    v, se = [], []
    for i, block in enumerate(scan.blocks()):
        est = estimate_moments(block, 2, bootstrap_rounds, seed + i)
        v.append(est[2].value)
        se.append(est[2].std_error)
    v, se = np.array(v), np.array(se)
    if np.any(se <= 0):
        raise ValueError("per-point variance errors must be positive")
    X, offset = design_matrix(models)
    rel = se / np.abs(v)
    inaccessible = inaccessible_parameters(technique, coefficient_fn)
    theta, cov, keep, chi2 = _weighted_fit(X, offset, v, se, technique, inaccessible)
    # Second pass: errors scaled from the model prediction, so the weights are not
    # correlated with each point's own fluctuation.
    pred = X[:, keep] @ theta + offset
    if np.all(pred > 0):
        se = rel * pred
        theta, cov, keep, chi2 = _weighted_fit(X, offset, v, se, technique, inaccessible)
    params = {p: None for p in PARAMETERS}
    errors = {p: None for p in PARAMETERS}
    for j, value, err in zip(keep, theta, np.sqrt(np.diag(cov))):
        params[PARAMETERS[j]] = float(value)
        errors[PARAMETERS[j]] = float(err)
    return ReconstructionResult(
        technique=technique, params=params, std_errors=errors, covariance=cov,
        fitted=tuple(PARAMETERS[j] for j in keep), inaccessible=inaccessible, chi2=chi2,
        dof=len(models) - len(keep), per_point_variance=v, per_point_se=se,
        predicted_variance=X[:, keep] @ theta + offset)
