"""Two-mode Gaussian states of the sideband field and the state-model variants.

Quadrature order is ``(p_s, q_s, p_a, q_a)`` for the symmetric/antisymmetric
modes, or ``(p_+, q_+, p_-, q_-)`` for the upper/lower sidebands.  Units are
shot-noise units: the vacuum has unit variance in every quadrature, which
corresponds to the commutator ``[p, q] = 2i``.  All first moments are zero.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Mapping

import numpy as np

from .moments import ComponentStats

QUADRATURE_ORDER = ("p_s", "q_s", "p_a", "q_a")
SIDEBAND_ORDER = ("p_+", "q_+", "p_-", "q_-")
PHYSICALITY_TOL = 1e-9

_SQRT_HALF = np.sqrt(0.5)
# a_s = (a_+ + a_-)/sqrt2, a_a = (a_+ - a_-)/sqrt2 acting on quadrature pairs.
# The matrix is symmetric and orthogonal, hence its own inverse.
SA_TRANSFORM = _SQRT_HALF * np.block([[np.eye(2), np.eye(2)], [np.eye(2), -np.eye(2)]])


class UnphysicalStateError(ValueError):
    """Covariance matrix violates the uncertainty principle or is malformed."""

    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report


def symplectic_form(n_modes: int = 2) -> np.ndarray:
    """Block-diagonal ``J`` with per-mode blocks ``[[0, 1], [-1, 0]]``."""
    return np.kron(np.eye(n_modes), np.array([[0.0, 1.0], [-1.0, 0.0]]))


@dataclass(frozen=True)
class PhysicalityReport:
    symmetry_defect: float
    min_eigenvalue: float
    min_uncertainty_eigenvalue: float
    tolerance: float = PHYSICALITY_TOL

    @property
    def physical(self) -> bool:
        tol = self.tolerance
        return (self.symmetry_defect <= tol and self.min_eigenvalue >= -tol
                and self.min_uncertainty_eigenvalue >= -tol)

    def __bool__(self):
        return self.physical


def validate_covariance(V, tol: float = PHYSICALITY_TOL) -> PhysicalityReport:
    """Check symmetry, positivity and ``V + iJ >= 0`` for an even-sized covariance.

    Raises
    ------
    ValueError
        If ``V`` is not a square even-sized array of finite reals.
    """
    V = np.asarray(V, dtype=float)
    if V.ndim != 2 or V.shape[0] != V.shape[1] or V.shape[0] % 2:
        raise ValueError(f"expected a square 2n x 2n matrix, got shape {V.shape}")
    if not np.all(np.isfinite(V)):
        raise ValueError("covariance contains non-finite entries")
    sym = 0.5 * (V + V.T)
    J = symplectic_form(V.shape[0] // 2)
    return PhysicalityReport(
        symmetry_defect=float(np.max(np.abs(V - V.T))),
        min_eigenvalue=float(np.linalg.eigvalsh(sym).min()),
        min_uncertainty_eigenvalue=float(np.linalg.eigvalsh(sym + 1j * J).min()),
        tolerance=tol,
    )


class TwoModeCovariance:
    """Validated 4x4 covariance over ``(p_s, q_s, p_a, q_a)``.

    Construction raises :class:`UnphysicalStateError` unless ``check=False``.
    The stored matrix is read-only.
    """

    __slots__ = ("matrix",)

    def __init__(self, matrix, check: bool = True):
        m = np.array(matrix, dtype=float)
        if m.shape != (4, 4):
            raise ValueError(f"two-mode covariance must be 4x4, got {m.shape}")
        if check:
            report = validate_covariance(m)
            if not report.physical:
                raise UnphysicalStateError(f"unphysical covariance: {report}", report)
        m.setflags(write=False)
        self.matrix = m

    @classmethod
    def vacuum(cls):
        return cls(np.eye(4))

    def report(self) -> PhysicalityReport:
        return validate_covariance(self.matrix)

    def to_list(self):
        return self.matrix.tolist()

    def __array__(self, dtype=None, copy=None):
        return self.matrix if dtype is None else self.matrix.astype(dtype)

    def __eq__(self, other):
        return isinstance(other, TwoModeCovariance) and np.array_equal(self.matrix, other.matrix)

    def __repr__(self):
        return f"TwoModeCovariance({self.matrix.tolist()!r})"


def basis_change(direction: str, covariance) -> TwoModeCovariance:
    """Transform a covariance between sideband and S/A quadrature bases.

    ``direction`` is ``"sidebands->SA"`` or ``"SA->sidebands"``.  The
    transform is orthogonal and symplectic, so the spectrum of ``V + iJ``
    (and the physicality verdict) is preserved.
    """
    if direction not in ("sidebands->SA", "SA->sidebands"):
        raise ValueError(f"unknown direction {direction!r}")
    V = covariance.matrix if isinstance(covariance, TwoModeCovariance) else np.asarray(covariance, float)
    V = TwoModeCovariance(V).matrix
    # Same matrix both ways; the direction is kept for readability at call sites.
    return TwoModeCovariance(SA_TRANSFORM @ V @ SA_TRANSFORM.T)


@dataclass(frozen=True)
class SymmetricCovariance:
    """Parameters of the stationary two-mode covariance."""

    alpha: float
    beta: float
    gamma: float
    delta: float

    def as_tuple(self):
        return (self.alpha, self.beta, self.gamma, self.delta)


def symmetric_matrix(alpha, beta, gamma, delta) -> np.ndarray:
    """Raw 4x4 array of the symmetric form, without physicality checks."""
    return np.array([
        [alpha, gamma, delta, 0.0],
        [gamma, beta, 0.0, delta],
        [delta, 0.0, beta, -gamma],
        [0.0, delta, -gamma, alpha],
    ], dtype=float)


def symmetric_covariance(alpha, beta, gamma, delta) -> TwoModeCovariance:
    """Expand ``(alpha, beta, gamma, delta)`` into a validated two-mode covariance.

    Raises :class:`UnphysicalStateError` carrying the physicality report.
    """
    if isinstance(alpha, SymmetricCovariance):
        alpha, beta, gamma, delta = alpha.as_tuple()
    return TwoModeCovariance(symmetric_matrix(alpha, beta, gamma, delta))


# --- state-model variants -------------------------------------------------


@dataclass(frozen=True)
class GaussianState:
    covariance: TwoModeCovariance

    def describe(self):
        return {"kind": "gaussian", "covariance": self.covariance.to_list()}


@dataclass(frozen=True)
class ComponentGaussianState:
    """Gaussian law specified directly on ``(I_cos, I_sin)``."""

    stats: ComponentStats

    def __post_init__(self):
        if not self.stats.gaussian:
            raise ValueError("ComponentGaussianState requires Gaussian-flagged stats")

    def component_covariance(self):
        s = self.stats
        off = s.c * s.s_cos * s.s_sin
        return np.array([[s.s_cos ** 2, off], [off, s.s_sin ** 2]])

    def describe(self):
        s = self.stats
        return {"kind": "component_gaussian", "s_cos": s.s_cos, "s_sin": s.s_sin, "c": s.c}


@dataclass(frozen=True)
class GaussianMixtureState:
    weights: tuple
    components: tuple

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float)
        if w.ndim != 1 or len(w) != len(self.components) or len(w) == 0:
            raise ValueError("weights and components must be non-empty and of equal length")
        if np.any(w < 0) or abs(w.sum() - 1.0) > 1e-12:
            raise ValueError(f"mixture weights must be nonnegative and sum to 1, got {w.tolist()}")
        comps = tuple(c if isinstance(c, TwoModeCovariance) else TwoModeCovariance(c)
                      for c in self.components)
        object.__setattr__(self, "weights", tuple(float(x) for x in w))
        object.__setattr__(self, "components", comps)

    def second_moments(self) -> np.ndarray:
        """Zero-mean mixture covariance: the weighted sum of component covariances."""
        return sum(w * c.matrix for w, c in zip(self.weights, self.components))

    def describe(self):
        return {"kind": "mixture", "weights": list(self.weights),
                "components": [c.to_list() for c in self.components]}


Sampler = Callable[[np.random.Generator, int], np.ndarray]


@dataclass(frozen=True)
class EngineeredState:
    """Non-Gaussian joint law for ``(I_cos, I_sin)`` given by a sampler.

    ``sampler(rng, n)`` returns an ``(n, 2)`` array.  ``joint_moments`` maps
    ``(a, b)`` to the analytic ``<I_cos**a I_sin**b>`` and must cover every
    order up to 4.
    """

    sampler: Sampler
    joint_moments: Mapping[tuple[int, int], float]
    label: str = "engineered"
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        missing = [(a, o - a) for o in range(1, 5) for a in range(o + 1)
                   if (a, o - a) not in self.joint_moments]
        if missing:
            raise ValueError(f"engineered state must declare all moments to order 4; missing {missing}")

    def component_stats(self) -> ComponentStats:
        jm = self.joint_moments
        s_cos, s_sin = np.sqrt(jm[(2, 0)]), np.sqrt(jm[(0, 2)])
        denom = s_cos * s_sin
        c = jm[(1, 1)] / denom if denom > 0 else 0.0
        return ComponentStats(float(s_cos), float(s_sin), float(c), joint_moments=dict(jm))

    def describe(self):
        return {"kind": self.label, **self.params}


StateModel = GaussianState | ComponentGaussianState | GaussianMixtureState | EngineeredState


def vacuum_state() -> GaussianState:
    return GaussianState(TwoModeCovariance.vacuum())


def correlated_beam_pair(variance: float, correlation: float) -> np.ndarray:
    """8x8 covariance of two beams with equal-sign quadrature correlations.

    Each beam's four quadratures have ``variance``; every quadrature is
    correlated with its counterpart in the other beam by ``correlation``.
    Physical when ``variance - |correlation| >= 1``.
    """
    block = np.eye(4)
    V = np.block([[variance * block, correlation * block],
                  [correlation * block, variance * block]])
    report = validate_covariance(V)
    if not report.physical:
        raise UnphysicalStateError(f"unphysical beam pair: {report}", report)
    return V
