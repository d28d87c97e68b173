"""Non-Gaussian component laws whose phase-mixed fourth moment looks Gaussian.

Each component is ``X = U + G`` with ``U`` uniform on ``[-a, a]`` and ``G``
normal, independent of each other and of the other component.  A uniform
variable of variance ``u`` has fourth cumulant ``-(6/5) u**2``, so the
fourth-order deviation of ``X`` is ``-(6/5) u**2`` while its variance is
``u + g``.  Choosing the uniform variances so that::

    delta_cos + delta_sin + 2 delta_c = -(s_cos**2 - s_sin**2)**2

makes the mixed fourth moment exactly ``3 s**4``.  The two components are
independent, so ``delta_c = 0``.  Higher orders are not matched.
"""

from __future__ import annotations

from math import comb, sqrt

from .moments import double_factorial
from .states import EngineeredState

UNIFORM_KURTOSIS_FACTOR = 6.0 / 5.0


class InfeasibleTargetError(ValueError):
    """The requested deviations are outside the family's reach."""

    def __init__(self, message, feasible=None):
        super().__init__(message)
        self.feasible = feasible


def _uniform_plus_gaussian_moments(a: float, g2: float, max_order: int) -> list[float]:
    """Raw moments ``E[(U + G)**m]`` for ``m = 0..max_order``."""
    uni = [a ** m / (m + 1) if m % 2 == 0 else 0.0 for m in range(max_order + 1)]
    gau = [double_factorial(m - 1) * g2 ** (m // 2) if m % 2 == 0 else 0.0
           for m in range(max_order + 1)]
    return [sum(comb(m, j) * uni[j] * gau[m - j] for j in range(m + 1)) for m in range(max_order + 1)]


def solve_uniform_variances(s_cos: float, s_sin: float, split: float | None = None):
    """Uniform-part variances ``(u_cos, u_sin)`` cancelling the fourth-order asymmetry.

    ``split`` is the share of the required negative fourth cumulant carried by
    the cosine component.  By default the larger-variance component carries
    all of it, which is always feasible and leaves the other one Gaussian.
    """
    target = (s_cos ** 2 - s_sin ** 2) ** 2
    if target <= 0:
        raise ValueError("s_cos == s_sin: the Gaussian state already has a Gaussian mixed fourth moment")
    if split is None:
        split = 1.0 if s_cos >= s_sin else 0.0
    # Each component can absorb at most (6/5) s**4 before its Gaussian part vanishes.
    lo = max(0.0, 1.0 - UNIFORM_KURTOSIS_FACTOR * s_sin ** 4 / target)
    hi = min(1.0, UNIFORM_KURTOSIS_FACTOR * s_cos ** 4 / target)
    if not (lo <= split <= hi):
        raise InfeasibleTargetError(
            f"split {split} infeasible for s_cos={s_cos}, s_sin={s_sin}; feasible range [{lo}, {hi}]",
            feasible=(lo, hi))
    u_cos = sqrt(split * target / UNIFORM_KURTOSIS_FACTOR)
    u_sin = sqrt((1.0 - split) * target / UNIFORM_KURTOSIS_FACTOR)
    return u_cos, u_sin


def build_masquerade_state(s_cos: float, s_sin: float, c: float = 0.0, split: float | None = None,
                           max_order: int = 14) -> EngineeredState:
    """Engineered ``(I_cos, I_sin)`` law with given variances and Gaussian mixed fourth moment.

    Raises
    ------
    ValueError
        If ``s_cos == s_sin`` (a Gaussian state already works) or ``c != 0``.
    InfeasibleTargetError
        If ``split`` lies outside the feasible range, which is attached.
    """
    if c != 0:
        raise ValueError("masquerade construction supports uncorrelated components (c=0) only")
    if s_cos < 0 or s_sin < 0:
        raise ValueError("standard deviations must be nonnegative")
    u_cos, u_sin = solve_uniform_variances(s_cos, s_sin, split)
    a_cos, a_sin = sqrt(3 * u_cos), sqrt(3 * u_sin)
    g_cos, g_sin = max(s_cos ** 2 - u_cos, 0.0), max(s_sin ** 2 - u_sin, 0.0)
    mx = _uniform_plus_gaussian_moments(a_cos, g_cos, max_order)
    my = _uniform_plus_gaussian_moments(a_sin, g_sin, max_order)
    joint = {(p, o - p): mx[p] * my[o - p] for o in range(max_order + 1) for p in range(o + 1)}
    sg_cos, sg_sin = sqrt(g_cos), sqrt(g_sin)

    def sampler(rng, n):
        u = rng.uniform(-1.0, 1.0, (n, 2)) * (a_cos, a_sin)
        return u + rng.standard_normal((n, 2)) * (sg_cos, sg_sin)

    params = {"s_cos": s_cos, "s_sin": s_sin, "c": 0.0,
              "uniform_halfwidth": [a_cos, a_sin], "gaussian_variance": [g_cos, g_sin]}
    return EngineeredState(sampler, joint, label="masquerade", params=params)
