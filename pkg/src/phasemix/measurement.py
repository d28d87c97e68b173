"""Linear maps from the four S/A quadratures to ``(I_cos, I_sin)``.

Three variants are provided:

* :class:`HD` -- homodyne detection at LO phase ``phi``.  The cosine
  component reads only the S mode, the sine component only the A mode.
* :class:`RD` -- resonator detection at detuning ``Delta``.  The 2x4 matrix
  comes from a pluggable ``coefficient_fn``; rows mix both modes.
* :class:`Explicit` -- any fixed 2x4 matrix.

The default RD map (:func:`lorentzian_rd_coefficients`) is an approximation.
A single-port cavity with reflection ``r(x) = 1 - 2 rho / (1 + 2 i x)``
rotates and attenuates the carrier and both sidebands, and the beat note is
``g_+ a_+ + g_- a_-^dagger`` with ``g_+ = r(Omega - Delta) r*(-Delta)`` and
``g_- = r*(-Omega - Delta) r(-Delta)``.  Attenuation is refilled with vacuum
noise so that the vacuum always reads 1 SNU.  Supply an exact coefficient
function for quantitative work.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .moments import ComponentStats, bivariate_gaussian_moment
from .states import (SA_TRANSFORM, ComponentGaussianState, EngineeredState, GaussianMixtureState,
                     GaussianState, TwoModeCovariance)

MAX_JOINT_ORDER = 14


def _gains_to_sa_rows(g_plus: complex, g_minus: complex) -> np.ndarray:
    xp, yp = g_plus.real, g_plus.imag
    xm, ym = g_minus.real, g_minus.imag
    sideband_rows = np.sqrt(0.5) * np.array([
        [xp, -yp, xm, ym],
        [yp, xp, ym, -xm],
    ])
    return sideband_rows @ SA_TRANSFORM


def cavity_reflection(x, coupling=0.8):
    """Reflection of a single-port cavity at offset ``x`` (linewidth units).

    ``coupling = 1`` is lossless; ``coupling = 0.5`` is impedance matched.
    """
    return 1.0 - 2.0 * coupling / (1.0 + 2.0j * x)


def lorentzian_rd_coefficients(detuning: float, analysis_frequency: float = 1.5,
                               coupling: float = 0.8) -> np.ndarray:
    """Default (approximate) RD coefficient map ``Delta -> 2x4`` matrix."""
    r0 = cavity_reflection(-detuning, coupling)
    g_plus = cavity_reflection(analysis_frequency - detuning, coupling) * np.conj(r0)
    g_minus = np.conj(cavity_reflection(-analysis_frequency - detuning, coupling)) * r0
    return _gains_to_sa_rows(complex(g_plus), complex(g_minus))


@dataclass(frozen=True)
class HD:
    """Homodyne detection at LO phase ``phi`` (radians)."""

    phi: float = 0.0

    def matrix(self) -> np.ndarray:
        c, s = np.cos(self.phi), np.sin(self.phi)
        return np.array([[c, s, 0.0, 0.0],
                         [0.0, 0.0, -s, c]])

    def added_noise(self) -> np.ndarray:
        return np.zeros((2, 2))

    def describe(self):
        return {"kind": "hd", "phi": self.phi}


@dataclass(frozen=True)
class RD:
    """Resonator detection at ``detuning`` (resonator-bandwidth units)."""

    detuning: float
    coefficient_fn: Callable[[float], np.ndarray] = field(default=lorentzian_rd_coefficients,
                                                          compare=False)

    def matrix(self) -> np.ndarray:
        m = np.asarray(self.coefficient_fn(self.detuning), dtype=float)
        if m.shape != (2, 4):
            raise ValueError(f"RD coefficient function must return a 2x4 matrix, got {m.shape}")
        return m

    def added_noise(self) -> np.ndarray:
        """Vacuum refill for rows with norm below one (passive attenuation)."""
        norms = np.sum(self.matrix() ** 2, axis=1)
        return np.diag(np.clip(1.0 - norms, 0.0, None))

    def describe(self):
        return {"kind": "rd", "detuning": self.detuning,
                "coefficient_fn": getattr(self.coefficient_fn, "__name__", repr(self.coefficient_fn))}


@dataclass(frozen=True)
class Explicit:
    m: tuple

    def __init__(self, m):
        arr = np.asarray(m, dtype=float)
        if arr.shape != (2, 4):
            raise ValueError(f"explicit measurement matrix must be 2x4, got {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise ValueError("measurement matrix has non-finite entries")
        object.__setattr__(self, "m", tuple(map(tuple, arr.tolist())))

    def matrix(self) -> np.ndarray:
        return np.array(self.m)

    def added_noise(self) -> np.ndarray:
        return np.zeros((2, 2))

    def describe(self):
        return {"kind": "explicit", "matrix": [list(r) for r in self.m]}


MeasurementModel = HD | RD | Explicit


def component_covariance(V, M: MeasurementModel) -> np.ndarray:
    """2x2 covariance of ``(I_cos, I_sin)``: ``M V M^T + N``."""
    V = V.matrix if isinstance(V, TwoModeCovariance) else np.asarray(V, dtype=float)
    A = M.matrix()
    return A @ V @ A.T + M.added_noise()


def _stats_from_cov(C: np.ndarray, **kw) -> ComponentStats:
    s_cos = float(np.sqrt(max(C[0, 0], 0.0)))
    s_sin = float(np.sqrt(max(C[1, 1], 0.0)))
    denom = s_cos * s_sin
    c = float(np.clip(C[0, 1] / denom, -1.0, 1.0)) if denom > 0 else 0.0
    return ComponentStats(s_cos, s_sin, c, **kw)


def predicted_component_stats(V, M: MeasurementModel) -> ComponentStats:
    """Component statistics of a Gaussian covariance under measurement ``M``.

    The result is Gaussian-flagged, so higher joint moments follow by Isserlis
    closure.
    """
    if isinstance(V, GaussianState):
        V = V.covariance
    if not isinstance(V, TwoModeCovariance):
        V = TwoModeCovariance(V)
    return _stats_from_cov(component_covariance(V, M), gaussian=True)


def state_component_stats(state, M: MeasurementModel | None = None,
                          max_order: int = MAX_JOINT_ORDER) -> ComponentStats:
    """Component statistics for any state-model variant.

    Mixtures get an explicit joint-moment table (weighted sum of component
    Gaussian moments) up to ``max_order``.  Component-level states ignore ``M``.
    """
    if isinstance(state, (GaussianState, TwoModeCovariance)):
        return predicted_component_stats(state, M)
    if isinstance(state, ComponentGaussianState):
        return state.stats
    if isinstance(state, EngineeredState):
        return state.component_stats()
    if isinstance(state, GaussianMixtureState):
        covs = [component_covariance(c, M) for c in state.components]
        table = {}
        for order in range(max_order + 1):
            for a in range(order + 1):
                b = order - a
                total = 0.0
                for w, C in zip(state.weights, covs):
                    st = _stats_from_cov(C, gaussian=True)
                    total += w * float(bivariate_gaussian_moment(a, b, st.s_cos, st.s_sin, st.c))
                table[(a, b)] = total
        return _stats_from_cov(sum(w * C for w, C in zip(state.weights, covs)), joint_moments=table)
    raise TypeError(f"unsupported state model {type(state).__name__}")
