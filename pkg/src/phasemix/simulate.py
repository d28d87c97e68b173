"""Monte-Carlo generation of quadrature samples and phase-mixed photocurrents.

Randomness is drawn in fixed-size chunks, each from its own generator seeded
by ``SeedSequence(seed, spawn_key=(stream, chunk))``.  Output is therefore
bit-identical for any ``workers`` setting.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .dataset import Dataset
from .measurement import HD, RD, MeasurementModel, lorentzian_rd_coefficients, state_component_stats
from .states import (ComponentGaussianState, EngineeredState, GaussianMixtureState, GaussianState,
                     TwoModeCovariance, validate_covariance)

CHUNK_SIZE = 1 << 16

# Independent stream identifiers for the spawn keys.
STREAM_STATE = 0
STREAM_MEASUREMENT = 1
STREAM_MIXING = 2
STREAM_NOISE = 3


def chunk_rng(seed: int, stream: int, chunk: int, *extra: int) -> np.random.Generator:
    ss = np.random.SeedSequence(seed, spawn_key=(stream, chunk, *extra))
    return np.random.Generator(np.random.PCG64(ss))


def _chunked(n: int, seed: int, stream: int, fill: Callable[[np.random.Generator, int], np.ndarray],
             workers: int = 1, extra: tuple = ()) -> np.ndarray:
    if n < 1:
        raise ValueError(f"sample count must be >= 1, got {n}")
    starts = list(range(0, n, CHUNK_SIZE))

    def job(i):
        size = min(CHUNK_SIZE, n - starts[i])
        return fill(chunk_rng(seed, stream, i, *extra), size)

    if workers > 1 and len(starts) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(job, range(len(starts))))
    else:
        parts = [job(i) for i in range(len(starts))]
    return np.concatenate(parts)


def _cov_factor(V: np.ndarray) -> np.ndarray:
    # Symmetric square root tolerates singular (pure or degenerate) covariances.
    w, U = np.linalg.eigh(V)
    return U * np.sqrt(np.clip(w, 0.0, None))


def _mvn_fill(V):
    L = _cov_factor(np.asarray(V, dtype=float))
    d = L.shape[0]
    return lambda rng, size: rng.standard_normal((size, d)) @ L.T


def sample_quadratures(state, n: int, seed: int, workers: int = 1) -> np.ndarray:
    """Draw ``n`` zero-mean quadrature 4-vectors ``(p_s, q_s, p_a, q_a)``.

    Accepts :class:`GaussianState`, :class:`GaussianMixtureState` or a bare
    :class:`TwoModeCovariance`.  Component-level states have no quadrature
    stage; use :func:`sample_components` for them.
    """
    if isinstance(state, TwoModeCovariance):
        state = GaussianState(state)
    if isinstance(state, GaussianState):
        report = state.covariance.report()
        if not report.physical:
            raise ValueError(f"unphysical state: {report}")
        return _chunked(n, seed, STREAM_STATE, _mvn_fill(state.covariance.matrix), workers)
    if isinstance(state, GaussianMixtureState):
        factors = [_cov_factor(c.matrix) for c in state.components]
        weights = np.asarray(state.weights)

        def fill(rng, size):
            idx = rng.choice(len(factors), size=size, p=weights)
            z = rng.standard_normal((size, 4))
            out = np.empty((size, 4))
            for k, L in enumerate(factors):
                sel = idx == k
                out[sel] = z[sel] @ L.T
            return out

        return _chunked(n, seed, STREAM_STATE, fill, workers)
    if isinstance(state, (ComponentGaussianState, EngineeredState)):
        raise TypeError(f"{type(state).__name__} is defined on photocurrent components; "
                        "use sample_components")
    raise TypeError(f"unsupported state model {type(state).__name__}")


def apply_measurement(samples: np.ndarray, M: MeasurementModel, seed: int | None = None,
                      workers: int = 1) -> np.ndarray:
    """Map quadrature samples ``(n, 4)`` to component pairs ``(n, 2)``.

    Models with added noise (lossy RD) need ``seed`` for the vacuum refill.
    """
    samples = np.asarray(samples, dtype=float)
    if samples.ndim != 2 or samples.shape[1] != 4:
        raise ValueError(f"expected (n, 4) quadrature samples, got {samples.shape}")
    pairs = samples @ M.matrix().T
    N = M.added_noise()
    if np.any(N):
        if seed is None:
            raise ValueError("measurement model adds noise; a seed is required")
        fill = _mvn_fill(N)
        pairs = pairs + _chunked(len(pairs), seed, STREAM_MEASUREMENT, fill, workers)
    return pairs


def sample_components(state, M: MeasurementModel | None, n: int, seed: int,
                      workers: int = 1) -> np.ndarray:
    """Draw ``n`` phase-locked component pairs ``(I_cos, I_sin)`` for any state model."""
    if isinstance(state, ComponentGaussianState):
        return _chunked(n, seed, STREAM_STATE, _mvn_fill(state.component_covariance()), workers)
    if isinstance(state, EngineeredState):
        return _chunked(n, seed, STREAM_STATE, state.sampler, workers)
    if M is None:
        raise ValueError("a measurement model is required for quadrature-level states")
    return apply_measurement(sample_quadratures(state, n, seed, workers), M, seed, workers)


# --- phase mixing -----------------------------------------------------------


@dataclass(frozen=True)
class Locked:
    theta: float = 0.0

    def describe(self):
        return {"kind": "locked", "theta": self.theta}


@dataclass(frozen=True)
class UniformPerSample:
    def describe(self):
        return {"kind": "uniform"}


@dataclass(frozen=True)
class RandomWalk:
    """Gaussian random walk of the LO-eLO phase; no default step is implied."""

    step_stddev: float
    theta0: float = 0.0

    def __post_init__(self):
        if self.step_stddev < 0:
            raise ValueError("step_stddev must be nonnegative")

    def describe(self):
        return {"kind": "random_walk", "step_stddev": self.step_stddev, "theta0": self.theta0}


PhaseMixingModel = Locked | UniformPerSample | RandomWalk


def draw_phases(n: int, model: PhaseMixingModel, seed: int, workers: int = 1) -> np.ndarray:
    if isinstance(model, Locked):
        return np.full(n, float(model.theta))
    if isinstance(model, UniformPerSample):
        return _chunked(n, seed, STREAM_MIXING, lambda rng, k: rng.uniform(0.0, 2 * np.pi, k), workers)
    if isinstance(model, RandomWalk):
        steps = _chunked(n, seed, STREAM_MIXING, lambda rng, k: rng.standard_normal(k), workers)
        steps[0] = 0.0
        return model.theta0 + model.step_stddev * np.cumsum(steps)
    raise TypeError(f"unsupported phase-mixing model {type(model).__name__}")


def phase_mix(pairs: np.ndarray, model: PhaseMixingModel = UniformPerSample(), seed: int = 0,
              quadrature: bool = False, workers: int = 1):
    """Return ``I_theta = cos(theta) I_cos + sin(theta) I_sin`` per sample.

    With ``quadrature=True`` the simultaneously produced ``I_{theta+pi/2}``
    stream is returned as a second array.
    """
    pairs = np.asarray(pairs, dtype=float)
    if pairs.ndim != 2 or pairs.shape[1] != 2:
        raise ValueError(f"expected (n, 2) component pairs, got {pairs.shape}")
    if isinstance(model, Locked) and model.theta == 0.0 and not quadrature:
        return pairs[:, 0].copy()
    theta = draw_phases(len(pairs), model, seed, workers)
    c, s = np.cos(theta), np.sin(theta)
    mixed = c * pairs[:, 0] + s * pairs[:, 1]
    if quadrature:
        return mixed, -s * pairs[:, 0] + c * pairs[:, 1]
    return mixed


def simulate_stream(state, M: MeasurementModel | None, n: int, seed: int,
                    mixing: PhaseMixingModel = UniformPerSample(), workers: int = 1) -> np.ndarray:
    """State -> measurement -> phase mixing, in one call."""
    pairs = sample_components(state, M, n, seed, workers)
    return phase_mix(pairs, mixing, seed, workers=workers)


# --- scans --------------------------------------------------------------------


def setting_scan(state, models: Sequence[MeasurementModel], settings: Sequence[float],
                 per_point: int, mixing: PhaseMixingModel, seed: int, *, axis: str,
                 technique: str, beam: str = "beam", workers: int = 1, metadata=None) -> Dataset:
    """Mixed samples for each measurement setting, as one :class:`Dataset`.

    Setting ``i`` uses seed ``SeedSequence(seed, spawn_key=(i,))`` derived streams,
    so every point is reproducible on its own.
    """
    if len(settings) == 0:
        raise ValueError("settings grid must be non-empty")
    if len(models) != len(settings):
        raise ValueError("one measurement model per setting is required")
    if per_point < 2:
        raise ValueError("per_point must be >= 2")
    blocks = []
    for i, M in enumerate(models):
        point_seed = int(np.random.SeedSequence(seed, spawn_key=(i,)).generate_state(1)[0])
        blocks.append(simulate_stream(state, M, per_point, point_seed, mixing, workers))
    meta = {
        "state": state.describe() if hasattr(state, "describe") else repr(state),
        "mixing": mixing.describe(),
        "models": [m.describe() for m in models[:1]],
        "per_point": per_point,
    }
    meta.update(metadata or {})
    return Dataset.from_blocks(blocks, settings, beam=beam, technique=technique,
                               setting_axis=axis, seed=seed, metadata=meta)


def detuning_scan(state, detunings: Sequence[float], per_point: int,
                  mixing: PhaseMixingModel = UniformPerSample(), seed: int = 0,
                  coefficient_fn=lorentzian_rd_coefficients, **kw) -> Dataset:
    """Resonator-detection scan over ``detunings`` (the "directions" of a beam)."""
    models = [RD(float(d), coefficient_fn) for d in detunings]
    meta = {"coefficient_fn": getattr(coefficient_fn, "__name__", repr(coefficient_fn))}
    return setting_scan(state, models, list(map(float, detunings)), per_point, mixing, seed,
                        axis="detuning", technique="rd", metadata=meta, **kw)


def hd_phase_scan(state, phases: Sequence[float], per_point: int,
                  mixing: PhaseMixingModel = UniformPerSample(), seed: int = 0, **kw) -> Dataset:
    """Homodyne scan over LO phases."""
    models = [HD(float(p)) for p in phases]
    return setting_scan(state, models, list(map(float, phases)), per_point, mixing, seed,
                        axis="phi", technique="hd", **kw)


def predicted_scan_variance(state, models: Sequence[MeasurementModel]) -> np.ndarray:
    """Mixed variance ``(s_cos**2 + s_sin**2) / 2`` at each setting."""
    return np.array([state_component_stats(state, M).mixed_variance for M in models])


# --- beam pairs -----------------------------------------------------------------


def sample_beam_pair(covariance: np.ndarray, models: tuple, n: int, seed: int,
                     mixing: PhaseMixingModel = UniformPerSample(), workers: int = 1):
    """Simultaneous phase-mixed streams of two beams from an 8x8 joint covariance.

    Both beams share the phase draw, as they are demodulated against a common
    electronic reference.
    """
    V = np.asarray(covariance, dtype=float)
    if V.shape != (8, 8):
        raise ValueError(f"beam-pair covariance must be 8x8, got {V.shape}")
    report = validate_covariance(V)
    if not report.physical:
        raise ValueError(f"unphysical beam pair: {report}")
    x = _chunked(n, seed, STREAM_STATE, _mvn_fill(V), workers)
    Ma, Mb = models
    pa = apply_measurement(x[:, :4], Ma, seed, workers)
    pb = apply_measurement(x[:, 4:], Mb, seed + 1, workers)
    theta = draw_phases(n, mixing, seed, workers)
    c, s = np.cos(theta), np.sin(theta)
    return c * pa[:, 0] + s * pa[:, 1], c * pb[:, 0] + s * pb[:, 1]
