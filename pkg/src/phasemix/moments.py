"""Exact moment algebra for phase-mixed photocurrents.

Every identity here relates the phase-locked photocurrent components
``(I_cos, I_sin)`` to the moments of the phase-mixed observable
``I_theta = cos(theta) I_cos + sin(theta) I_sin`` averaged over a uniform
``theta``.  Coefficients are exact rationals; float inputs are converted to
:class:`fractions.Fraction` (which is lossless) so that the constraint
residuals evaluate to exactly zero when the identity holds.  Conversion back
to ``float`` happens only on return.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from math import comb, factorial, isfinite
from numbers import Real
from typing import Mapping

MAX_HALF_ORDER = 10
"""Largest half-order ``n`` (moment order ``2n = 20``) with exact coefficients."""

MAX_WEIGHT_ORDER = 16
"""Largest ``a + b`` accepted by :func:`phase_average_weight`."""


class OrderError(ValueError):
    """Requested moment order is outside the supported range."""


class MissingMomentError(KeyError):
    """A non-Gaussian :class:`ComponentStats` lacks a required joint moment."""


def double_factorial(m: int) -> int:
    """``m!!`` for ``m >= -1`` with ``(-1)!! = 0!! = 1``."""
    if m < -1:
        raise ValueError(f"double factorial undefined for {m}")
    out = 1
    while m > 1:
        out *= m
        m -= 2
    return out


def _exact(x) -> Fraction:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, int):
        return Fraction(x)
    x = float(x)
    if not isfinite(x):
        raise ValueError(f"non-finite value {x!r}")
    return Fraction(x)


def _check_half_order(n, lo=0):
    if not isinstance(n, int) or isinstance(n, bool):
        raise TypeError(f"half-order must be an int, got {type(n).__name__}")
    if n < lo:
        raise ValueError(f"half-order must be >= {lo}, got {n}")
    if n > MAX_HALF_ORDER:
        raise OrderError(f"half-order {n} exceeds supported maximum {MAX_HALF_ORDER}")


def gaussian_central_moment(n: int, s: float) -> float:
    """Return ``(2n-1)!! s**(2n)``, the ``2n``-th central moment of ``N(0, s**2)``."""
    _check_half_order(n)
    if s < 0:
        raise ValueError(f"standard deviation must be >= 0, got {s}")
    return float(double_factorial(2 * n - 1) * _exact(s) ** (2 * n))


@lru_cache(maxsize=None)
def phase_average_weight(a: int, b: int) -> Fraction:
    """Uniform phase average of ``cos(t)**(2a) * sin(t)**(2b)``.

    Equals ``(2a)! (2b)! / (4**(a+b) a! b! (a+b)!)``.

    >>> phase_average_weight(1, 1)
    Fraction(1, 8)
    """
    if a < 0 or b < 0:
        raise ValueError("powers must be nonnegative")
    if a + b > MAX_WEIGHT_ORDER:
        raise OrderError(f"a + b = {a + b} exceeds supported maximum {MAX_WEIGHT_ORDER}")
    num = factorial(2 * a) * factorial(2 * b)
    den = 4 ** (a + b) * factorial(a) * factorial(b) * factorial(a + b)
    return Fraction(num, den)


def mixing_weight(n: int, k: int) -> Fraction:
    """Weight of ``<I_cos^(2k) I_sin^(2(n-k))>`` in the phase-mixed ``2n``-th moment.

    ``binom(2n, 2k) * phase_average_weight(k, n-k)``, which simplifies to
    ``(2n-1)!! / (2**n k! (n-k)!)``.
    """
    return comb(2 * n, 2 * k) * phase_average_weight(k, n - k)


def bivariate_gaussian_moment(a: int, b: int, s_cos, s_sin, c) -> Fraction:
    """Isserlis moment ``E[X**a Y**b]`` of a zero-mean bivariate normal.

    ``X`` and ``Y`` have standard deviations ``s_cos`` and ``s_sin`` and
    correlation ``c``.  Sums over the number ``j`` of ``X``-``Y`` pairings.
    """
    sx, sy, rho = _exact(s_cos), _exact(s_sin), _exact(c)
    total = Fraction(0)
    for j in range(min(a, b) + 1):
        if (a - j) % 2 or (b - j) % 2:
            continue
        pa, pb = (a - j) // 2, (b - j) // 2
        pairings = factorial(a) * factorial(b) // (
            factorial(pa) * factorial(pb) * factorial(j) * 2 ** (pa + pb))
        total += pairings * rho ** j
    return total * sx ** a * sy ** b


@dataclass(frozen=True)
class ComponentStats:
    """Second-order description of ``(I_cos, I_sin)`` plus optional joint moments.

    Parameters
    ----------
    s_cos, s_sin : float
        Standard deviations of the cosine and sine components (shot-noise units).
    c : float
        Normalized correlation, ``-1 <= c <= 1``.
    joint_moments : mapping, optional
        ``(a, b) -> <dI_cos**a dI_sin**b>`` for ``a + b <= 14``.
    gaussian : bool
        If true, missing joint moments are filled by Gaussian closure.
    """

    s_cos: float
    s_sin: float
    c: float = 0.0
    joint_moments: Mapping[tuple[int, int], float] | None = None
    gaussian: bool = False

    def __post_init__(self):
        for name in ("s_cos", "s_sin", "c"):
            v = getattr(self, name)
            if not isinstance(v, Real) or not isfinite(float(v)):
                raise ValueError(f"{name} must be a finite real, got {v!r}")
        if self.s_cos < 0 or self.s_sin < 0:
            raise ValueError("standard deviations must be nonnegative")
        if not -1.0 <= self.c <= 1.0:
            raise ValueError(f"correlation must lie in [-1, 1], got {self.c}")
        if self.joint_moments is not None:
            object.__setattr__(self, "joint_moments", dict(self.joint_moments))
            self._check_joint_moments()

    def _check_joint_moments(self, rtol=1e-9):
        jm = self.joint_moments
        expected = {
            (2, 0): self.s_cos ** 2,
            (0, 2): self.s_sin ** 2,
            (1, 1): self.c * self.s_cos * self.s_sin,
        }
        scale = max(self.s_cos, self.s_sin, 1e-300) ** 2
        for key, want in expected.items():
            if key in jm and abs(jm[key] - want) > rtol * scale:
                raise ValueError(f"joint moment {key}={jm[key]} inconsistent with {want}")
        for axis in (0, 1):
            for n in range(2, 15, 2):
                key_n = (n, 0) if axis == 0 else (0, n)
                key_2n = (2 * n, 0) if axis == 0 else (0, 2 * n)
                if key_n in jm and key_2n in jm:
                    if jm[key_2n] < jm[key_n] ** 2 * (1 - rtol):
                        raise ValueError(f"moments {key_n}, {key_2n} violate Cauchy-Schwarz")

    @classmethod
    def gaussian_from(cls, s_cos, s_sin, c=0.0):
        return cls(s_cos, s_sin, c, gaussian=True)

    @property
    def mixed_variance(self) -> float:
        """Phase-averaged variance ``(s_cos**2 + s_sin**2) / 2``."""
        return 0.5 * (self.s_cos ** 2 + self.s_sin ** 2)

    def joint_exact(self, a: int, b: int) -> Fraction:
        if self.joint_moments is not None and (a, b) in self.joint_moments:
            return _exact(self.joint_moments[(a, b)])
        if a + b <= 2:
            if (a, b) == (0, 0):
                return Fraction(1)
            if a + b == 1:
                return Fraction(0)
            return {
                (2, 0): _exact(self.s_cos) ** 2,
                (0, 2): _exact(self.s_sin) ** 2,
                (1, 1): _exact(self.c) * _exact(self.s_cos) * _exact(self.s_sin),
            }[(a, b)]
        if self.gaussian:
            return bivariate_gaussian_moment(a, b, self.s_cos, self.s_sin, self.c)
        raise MissingMomentError((a, b))

    def joint(self, a: int, b: int) -> float:
        """Joint central moment ``<dI_cos**a dI_sin**b>``."""
        return float(self.joint_exact(a, b))


def _mixed_moment_exact(n: int, stats: ComponentStats) -> Fraction:
    return sum(
        (mixing_weight(n, k) * stats.joint_exact(2 * k, 2 * (n - k)) for k in range(n + 1)),
        Fraction(0),
    )


def mixed_moment_from_components(n: int, stats: ComponentStats) -> float:
    """Phase-averaged ``2n``-th photocurrent moment ``sigma^{2n}``.

    Odd-odd cross moments drop out of the uniform phase average, so only the
    even joint moments ``<I_cos^(2k) I_sin^(2(n-k))>`` are needed.
    """
    _check_half_order(n)
    return float(_mixed_moment_exact(n, stats))


def _gaussian_deviation_exact(n, sigma2n, s) -> Fraction:
    return _exact(sigma2n) - double_factorial(2 * n - 1) * _exact(s) ** (2 * n)


def gaussian_deviation(n: int, sigma2n: float, s: float) -> float:
    """``sigma2n - (2n-1)!! s**(2n)``; zero for a Gaussian of std ``s``."""
    _check_half_order(n, lo=1)
    if s < 0:
        raise ValueError(f"standard deviation must be >= 0, got {s}")
    return float(_gaussian_deviation_exact(n, sigma2n, s))


def _joint_reference(a: int, b: int, stats: ComponentStats) -> Fraction:
    sc, ss, c = _exact(stats.s_cos), _exact(stats.s_sin), _exact(stats.c)
    if (a, b) == (1, 1):
        return (1 + 2 * c * c) * sc ** 2 * ss ** 2
    if c != 0 and a > 0 and b > 0:
        raise ValueError(
            f"joint deviation ({2 * a},{2 * b}) is only defined for uncorrelated components (c=0)")
    return double_factorial(2 * a - 1) * double_factorial(2 * b - 1) * sc ** (2 * a) * ss ** (2 * b)


def joint_gaussian_deviation(a: int, b: int, joint_moment: float, stats: ComponentStats) -> float:
    """Deviation of ``<I_cos^(2a) I_sin^(2b)>`` from its Gaussian value.

    The ``(1, 1)`` case uses the correlated reference ``(1 + 2c**2) s_cos**2 s_sin**2``;
    every other mixed order requires ``c == 0``.
    """
    if a < 0 or b < 0:
        raise ValueError("half-orders must be nonnegative")
    return float(_exact(joint_moment) - _joint_reference(a, b, stats))


@dataclass
class DeviationSet:
    """Fourth-order deviations plus a table of higher-order ones.

    ``higher`` maps an int ``2n`` to ``delta^{2n}`` and a tuple ``(2a, 2b)`` to
    ``delta_{2a,2b}``.
    """

    delta4: float
    delta_cos: float
    delta_sin: float
    delta_c: float
    higher: dict = field(default_factory=dict)


def deviations(stats: ComponentStats, max_half_order: int = 2) -> DeviationSet:
    """Collect every deviation computable from ``stats`` up to order ``2*max_half_order``."""
    s2 = (_exact(stats.s_cos) ** 2 + _exact(stats.s_sin) ** 2) / 2

    def mixed_dev(n):
        sigma = _mixed_moment_exact(n, stats)
        return sigma - double_factorial(2 * n - 1) * s2 ** n

    def joint_dev(a, b):
        return stats.joint_exact(2 * a, 2 * b) - _joint_reference(a, b, stats)

    out = DeviationSet(
        delta4=float(mixed_dev(2)),
        delta_cos=float(joint_dev(2, 0)),
        delta_sin=float(joint_dev(0, 2)),
        delta_c=float(joint_dev(1, 1)),
    )
    for n in range(2, max_half_order + 1):
        out.higher[2 * n] = float(mixed_dev(n))
        for k in range(n + 1):
            a, b = n - k, k
            if stats.c != 0 and a > 0 and b > 0 and (a, b) != (1, 1):
                continue
            out.higher[(2 * a, 2 * b)] = float(joint_dev(a, b))
    return out


def fourth_order_identity_residual(stats: ComponentStats) -> float:
    """Residual of ``(8/3) delta = d_cos + d_sin + 2 d_c + (s_cos^2 - s_sin^2)^2 + 4 c^2 s_cos^2 s_sin^2``.

    Zero for any valid ``stats``; kept as a consistency oracle.
    """
    sc, ss, c = _exact(stats.s_cos), _exact(stats.s_sin), _exact(stats.c)
    s2 = (sc ** 2 + ss ** 2) / 2
    delta = _mixed_moment_exact(2, stats) - 3 * s2 ** 2
    d_cos = stats.joint_exact(4, 0) - _joint_reference(2, 0, stats)
    d_sin = stats.joint_exact(0, 4) - _joint_reference(0, 2, stats)
    d_c = stats.joint_exact(2, 2) - _joint_reference(1, 1, stats)
    rhs = d_cos + d_sin + 2 * d_c + (sc ** 2 - ss ** 2) ** 2 + 4 * c ** 2 * sc ** 2 * ss ** 2
    return float(Fraction(8, 3) * delta - rhs)


@lru_cache(maxsize=None)
def dnk_coefficient(n: int, k: int) -> Fraction:
    """``d_{n,k} = [n! - (2(n-k)-1)!! (2k-1)!!] / ((n-k)! k!)``."""
    if not 0 <= k <= n:
        raise ValueError(f"k must satisfy 0 <= k <= n, got n={n}, k={k}")
    num = factorial(n) - double_factorial(2 * (n - k) - 1) * double_factorial(2 * k - 1)
    return Fraction(num, factorial(n - k) * factorial(k))


def higher_order_constraint_residual(n: int, stats: ComponentStats) -> tuple[float, float]:
    """Both sides of the order-``2n`` photocurrent/state constraint for ``c = 0``.

    ``lhs = delta^{2n} - W sum_k delta_{2(n-k),2k} / ((n-k)! k!)``
    ``rhs = -W sum_k d_{n,k} s_cos^{2(n-k)} s_sin^{2k}``

    with ``W = (2n-1)!! / 2**n``.  The identity ``lhs == rhs`` holds exactly for
    any uncorrelated stats carrying joint moments up to order ``2n``.
    """
    _check_half_order(n, lo=1)
    if stats.c != 0:
        raise ValueError("higher-order constraint requires uncorrelated components (c=0)")
    sc, ss = _exact(stats.s_cos), _exact(stats.s_sin)
    w = Fraction(double_factorial(2 * n - 1), 2 ** n)
    s2 = (sc ** 2 + ss ** 2) / 2
    delta = _mixed_moment_exact(n, stats) - double_factorial(2 * n - 1) * s2 ** n
    state_sum = Fraction(0)
    coeff_sum = Fraction(0)
    for k in range(n + 1):
        a, b = n - k, k
        joint_dev = stats.joint_exact(2 * a, 2 * b) - _joint_reference(a, b, stats)
        state_sum += joint_dev / (factorial(a) * factorial(b))
        coeff_sum += dnk_coefficient(n, k) * sc ** (2 * a) * ss ** (2 * b)
    return float(delta - w * state_sum), float(-w * coeff_sum)
