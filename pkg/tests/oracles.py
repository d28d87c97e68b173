"""Independent reference computations used to check the package.

Nothing here imports the package.  Mixed moments are evaluated by adaptive
quadrature over the detection phase, using only that a Gaussian pair
projected on a fixed phase is a one-dimensional Gaussian.  Joint moments come
from tensor Gauss-Hermite quadrature, exact for polynomials of modest degree.
"""

from __future__ import annotations

import math

import numpy as np
from scipy import integrate


def double_factorial(m: int) -> int:
    return math.prod(range(m, 0, -2)) if m > 0 else 1


def phase_average(f, epsrel=1e-13):
    val, err = integrate.quad(f, 0.0, 2 * math.pi, epsabs=0.0, epsrel=epsrel, limit=400)
    return val / (2 * math.pi)


def phase_variance(theta, s_cos, s_sin, c):
    ct, st = math.cos(theta), math.sin(theta)
    return s_cos ** 2 * ct ** 2 + s_sin ** 2 * st ** 2 + 2 * c * s_cos * s_sin * ct * st


def mixed_moment(n: int, s_cos: float, s_sin: float, c: float = 0.0) -> float:
    """``<I_theta^(2n)>`` averaged over a uniform phase, for Gaussian components."""
    return double_factorial(2 * n - 1) * phase_average(lambda t: phase_variance(t, s_cos, s_sin, c) ** n)


def trig_weight(a: int, b: int) -> float:
    return phase_average(lambda t: math.cos(t) ** (2 * a) * math.sin(t) ** (2 * b))


_NODES, _WEIGHTS = np.polynomial.hermite_e.hermegauss(40)
_WEIGHTS = _WEIGHTS / _WEIGHTS.sum()


def gaussian_joint_moment(a: int, b: int, s_cos: float, s_sin: float, c: float) -> float:
    """``E[X^a Y^b]`` for a zero-mean bivariate normal, by Gauss-Hermite quadrature."""
    z1, z2 = np.meshgrid(_NODES, _NODES, indexing="ij")
    w = np.outer(_WEIGHTS, _WEIGHTS)
    x = s_cos * z1
    y = s_sin * (c * z1 + math.sqrt(1 - c * c) * z2)
    return float(np.sum(w * x ** a * y ** b))


def uniform_plus_gaussian_moment(k: int, halfwidth: float, g_var: float) -> float:
    """``E[(U + G)^k]`` with ``U ~ uniform(-h, h)`` and ``G ~ N(0, g_var)``, by quadrature."""
    def integrand(u):
        # E[(u + G)^k] by Gauss-Hermite in G
        return float(np.sum(_WEIGHTS * (u + math.sqrt(g_var) * _NODES) ** k))
    val, _ = integrate.quad(integrand, -halfwidth, halfwidth, epsabs=0.0, epsrel=1e-13, limit=200)
    return val / (2 * halfwidth)
