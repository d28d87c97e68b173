"""Maximum-likelihood fit of the phase-mixed Gaussian density.

The model density of one sample is

    f(x) = (1/2pi) int N(x; 0, v(t)) dt,   v(t) = s_cos^2 cos^2 t + s_sin^2 sin^2 t + 2 c s_cos s_sin sin t cos t

evaluated with a fixed periodic rule on ``nodes`` equally spaced phases.
Under a uniform phase the density only depends on the principal variances of
the component covariance, so ``c`` is not identifiable: fits are reported in
the principal frame (``c = 0``) with the convention ``s_cos >= s_sin``.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize
from scipy.special import logsumexp

from ..moments import ComponentStats, double_factorial, mixed_moment_from_components
from .estimators import estimate_moments
from .report import DEFAULT_SIGNIFICANCE, critical_z

DEFAULT_NODES = 64
MAX_ITER = 500
PARAM_TOL = 1e-6
LOGLIK_TOL = 1e-9
NODE_CHECK_TOL = 1e-6
_ROWS = 1 << 17


@dataclass
class MixedGaussianFit:
    s_cos: float
    s_sin: float
    c: float
    log_likelihood: float
    converged: bool
    iterations: int
    comparison: float
    single_gaussian_variance: float
    n_samples: int
    nodes: int
    node_check: float
    message: str = ""

    @property
    def mixed_variance(self):
        return 0.5 * (self.s_cos ** 2 + self.s_sin ** 2)

    def component_stats(self) -> ComponentStats:
        return ComponentStats.gaussian_from(self.s_cos, self.s_sin, self.c)


def _node_groups(nodes: int):
    """Distinct ``cos^2 t`` values of the periodic rule and their weights."""
    t = 2 * np.pi * np.arange(nodes) / nodes
    cos2 = np.round(np.cos(t) ** 2, 14)
    vals, counts = np.unique(cos2, return_counts=True)
    return vals, counts / nodes


def _loglik(x2: np.ndarray, var_cos: float, var_sin: float, nodes: int, grad: bool = False):
    cos2, w = _node_groups(nodes)
    v = var_cos * cos2 + var_sin * (1.0 - cos2)
    logw = np.log(w)
    total = 0.0
    g = np.zeros(2)
    for i in range(0, len(x2), _ROWS):
        xx = x2[i:i + _ROWS, None]
        logp = logw - 0.5 * np.log(2 * np.pi * v) - xx / (2 * v)
        lse = logsumexp(logp, axis=1)
        total += lse.sum()
        if grad:
            resp = np.exp(logp - lse[:, None])
            dv = (resp * (xx / v - 1.0) / (2 * v)).sum(axis=0)
            g += [np.dot(dv, var_cos * cos2), np.dot(dv, var_sin * (1.0 - cos2))]
    return (total, g) if grad else total


def fit_phase_mixed_gaussian(samples, nodes: int = DEFAULT_NODES, max_iter: int = MAX_ITER,
                             check_nodes: bool = True) -> MixedGaussianFit:
    """Fit ``(s_cos, s_sin)`` of the phase-mixed Gaussian model by maximum likelihood.

    Parameters are optimised as log-variances with L-BFGS-B.  Convergence means
    a parameter step below 1e-6 and a per-sample log-likelihood change below
    1e-9 at the last iteration.  If the budget runs out, the best parameters
    are still returned with ``converged=False`` and a warning.
    """
    x = np.asarray(samples, dtype=float).ravel()
    n = len(x)
    if n < 10:
        raise ValueError("too few samples to fit")
    x2 = x * x
    v0 = float(x2.mean())
    if v0 <= 0:
        raise ValueError("samples have zero variance")
    k = float(np.mean(x2 * x2) / v0 ** 2)
    spread = v0 * np.sqrt(max(2.0 / 3.0 * (k - 3.0), 0.0))
    spread = float(np.clip(spread, 0.05 * v0, 0.9 * v0))
    start = np.log([v0 + spread, v0 - spread])

    def objective(p):
        ll, g = _loglik(x2, *np.exp(p), nodes, grad=True)
        return -ll / n, -g / n

    history = [start]
    fvals = [objective(start)[0]]

    def callback(p):
        history.append(np.array(p))
        fvals.append(objective(p)[0])

    res = minimize(objective, start, jac=True, method="L-BFGS-B", callback=callback,
                   options={"maxiter": max_iter, "ftol": 1e-15, "gtol": 1e-12})
    best = res.x
    iterations = len(history) - 1
    if iterations >= 1:
        step = float(np.max(np.abs(history[-1] - history[-2])))
        dll = abs(fvals[-1] - fvals[-2])
    else:
        step, dll = 0.0, 0.0
    converged = (step < PARAM_TOL and dll < LOGLIK_TOL) or (res.success and iterations < max_iter)
    if not converged:
        warnings.warn(f"mixed-Gaussian fit did not converge in {iterations} iterations: {res.message}",
                      RuntimeWarning, stacklevel=2)
    var_a, var_b = np.exp(best)
    var_cos, var_sin = max(var_a, var_b), min(var_a, var_b)
    ll = _loglik(x2, var_cos, var_sin, nodes)
    node_check = abs(_loglik(x2, var_cos, var_sin, 2 * nodes) - ll) / n if check_nodes else float("nan")
    if check_nodes and node_check >= NODE_CHECK_TOL:
        warnings.warn(f"quadrature with {nodes} nodes is unresolved ({node_check:.2e} per sample)",
                      RuntimeWarning, stacklevel=2)
    ll_single = -0.5 * n * (np.log(2 * np.pi * v0) + 1.0)
    return MixedGaussianFit(
        s_cos=float(np.sqrt(var_cos)), s_sin=float(np.sqrt(var_sin)), c=0.0,
        log_likelihood=float(ll), converged=bool(converged), iterations=iterations,
        comparison=float(ll - ll_single), single_gaussian_variance=v0, n_samples=n,
        nodes=nodes, node_check=float(node_check), message=str(res.message))


@dataclass
class GoodnessOfFit:
    orders: tuple
    observed: dict
    predicted: dict
    std_error: dict
    z: dict
    z_threshold: float
    rejected: bool


def mixed_gaussian_goodness_of_fit(samples, fit: MixedGaussianFit, orders=(4, 6, 8),
                                   bootstrap_rounds: int = 200, seed: int = 0,
                                   significance: float = DEFAULT_SIGNIFICANCE) -> GoodnessOfFit:
    """Compare observed moment ratios with those implied by the fitted model.

    The model is rejected when any order deviates by more than the
    Bonferroni-adjusted z threshold (adjusted over ``orders``).
    """
    est = estimate_moments(samples, max(orders), bootstrap_rounds, seed)
    stats = fit.component_stats()
    s2 = stats.mixed_variance
    obs, pred, se, z = {}, {}, {}, {}
    for order in orders:
        value, err = est.ratio(order)
        model = mixed_moment_from_components(order // 2, stats) / s2 ** (order // 2)
        obs[order], pred[order], se[order] = value, model, err
        z[order] = (value - model) / err if err > 0 else 0.0
    z_crit = critical_z(significance, len(orders))
    return GoodnessOfFit(tuple(orders), obs, pred, se, z, z_crit,
                         any(abs(v) > z_crit for v in z.values()))


def gaussian_reference_ratio(order: int) -> int:
    return double_factorial(order - 1)
