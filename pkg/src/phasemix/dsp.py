"""Raw-photocurrent synthesis and digital demodulation.

Each spectral measurement is one window of length ``T``.  The raw current in
a window is the beat note ``I_cos cos(W t) + I_sin sin(W t)`` plus optional
white background noise.  Demodulation multiplies by the electronic references,
low-pass filters with a linear-phase FIR, and integrates over the window::

    I_W = (1/sqrt2) (2/T) int e^{iWt} I(t) dt,     (I_cos, I_sin) = sqrt2 (Re, Im) I_W

Windows are independent acquisitions: every window carries
``(numtaps - 1) / 2`` guard samples on each side so that a ``valid``
convolution returns exactly one filtered sample per in-window sample.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass
from functools import cached_property

import numpy as np
from scipy import signal

from .simulate import STREAM_NOISE, chunk_rng

STOPBAND_ATTENUATION_DB = 40.0
WINDOW_CHUNK = 512


@dataclass(frozen=True)
class DemodConfig:
    analysis_frequency: float = 21e6
    window_length: float = 10e-6
    lowpass_bandwidth: float = 600e3
    sample_rate: float = 100e6

    def __post_init__(self):
        if self.sample_rate <= 2 * self.analysis_frequency:
            raise ValueError(f"sample_rate {self.sample_rate} Hz aliases the analysis frequency "
                             f"{self.analysis_frequency} Hz (need > {2 * self.analysis_frequency})")
        if self.window_length * self.sample_rate < 8:
            raise ValueError("window must contain at least 8 samples")
        if not 0 < self.lowpass_bandwidth < self.sample_rate / 4:
            raise ValueError("low-pass bandwidth must lie in (0, sample_rate/4)")

    @property
    def samples_per_window(self) -> int:
        return int(round(self.window_length * self.sample_rate))

    @property
    def resolution(self) -> float:
        """Spectral resolution ``1/T`` in Hz."""
        return 1.0 / self.window_length

    @cached_property
    def taps(self) -> np.ndarray:
        return design_lowpass(self)

    @property
    def guard(self) -> int:
        return (len(self.taps) - 1) // 2

    def to_dict(self):
        return asdict(self)


def design_lowpass(cfg: DemodConfig) -> np.ndarray:
    """Kaiser-window FIR: passband edge at the bandwidth, >= 40 dB from twice it."""
    nyq = cfg.sample_rate / 2
    numtaps, beta = signal.kaiserord(STOPBAND_ATTENUATION_DB, cfg.lowpass_bandwidth / nyq)
    numtaps |= 1  # odd length -> integer group delay
    return signal.firwin(numtaps, 1.5 * cfg.lowpass_bandwidth, window=("kaiser", beta),
                         fs=cfg.sample_rate)


def window_time_axis(cfg: DemodConfig) -> np.ndarray:
    """Sample times of one window including its guard samples (window starts at t=0)."""
    n, g = cfg.samples_per_window, cfg.guard
    return (np.arange(-g, n + g)) / cfg.sample_rate


def demodulate(raw: np.ndarray, cfg: DemodConfig) -> np.ndarray:
    """Recover ``(I_cos, I_sin)`` from raw windows of shape ``(n_windows, N + 2*guard)``."""
    raw = np.atleast_2d(np.asarray(raw, dtype=float))
    n = cfg.samples_per_window
    if raw.shape[1] != n + 2 * cfg.guard:
        raise ValueError(f"raw windows must have {n + 2 * cfg.guard} samples, got {raw.shape[1]}")
    t = window_time_axis(cfg)
    ref = np.exp(2j * np.pi * cfg.analysis_frequency * t)
    mixed = raw * ref
    filtered = signal.fftconvolve(mixed, cfg.taps[None, :], mode="valid", axes=1)
    spectral = np.sqrt(0.5) * 2.0 * filtered.mean(axis=1)
    return np.sqrt(2.0) * np.column_stack([spectral.real, spectral.imag])


def synthesize(pairs: np.ndarray, cfg: DemodConfig, noise_std: float = 0.0,
               seed: int = 0, start: int = 0) -> np.ndarray:
    """Raw beat-note windows (with guards) for component pairs ``(n, 2)``."""
    pairs = np.asarray(pairs, dtype=float)
    t = window_time_axis(cfg)
    w = 2 * np.pi * cfg.analysis_frequency * t
    raw = pairs[:, :1] * np.cos(w) + pairs[:, 1:2] * np.sin(w)
    if noise_std > 0:
        rng = chunk_rng(seed, STREAM_NOISE, start)
        raw += noise_std * rng.standard_normal(raw.shape)
    return raw


def synthesize_and_demodulate(pairs: np.ndarray, cfg: DemodConfig = DemodConfig(),
                              noise_std: float = 0.0, seed: int = 0) -> np.ndarray:
    """Round trip component pairs through the raw-current and demodulation chain.

    ``noise_std`` is the per-sample standard deviation of additive white
    Gaussian background in the raw current.
    """
    pairs = np.asarray(pairs, dtype=float)
    if pairs.ndim != 2 or pairs.shape[1] != 2:
        raise ValueError(f"expected (n, 2) component pairs, got {pairs.shape}")
    out = np.empty_like(pairs)
    for k, i in enumerate(range(0, len(pairs), WINDOW_CHUNK)):
        block = pairs[i:i + WINDOW_CHUNK]
        out[i:i + len(block)] = demodulate(synthesize(block, cfg, noise_std, seed, k), cfg)
    return out


def filter_response(cfg: DemodConfig, freqs) -> np.ndarray:
    """Magnitude response of the low-pass taps at ``freqs`` (Hz)."""
    _, h = signal.freqz(cfg.taps, worN=np.asarray(freqs, dtype=float), fs=cfg.sample_rate)
    return np.abs(h)
