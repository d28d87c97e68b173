import numpy as np
import pytest

from phasemix.dsp import DemodConfig, demodulate, filter_response, synthesize, synthesize_and_demodulate, window_time_axis

CFG = DemodConfig()


def _tone(cfg, freq, phase=0.0, n_windows=1):
    t = window_time_axis(cfg)
    return np.tile(np.cos(2 * np.pi * freq * t + phase), (n_windows, 1))


def test_defaults():
    assert CFG.samples_per_window == 1000
    assert CFG.resolution == pytest.approx(1e5)
    assert len(CFG.taps) % 2 == 1 and CFG.guard == (len(CFG.taps) - 1) // 2
    assert CFG.to_dict()["analysis_frequency"] == 21e6


def test_pure_tone_recovered():
    out = demodulate(_tone(CFG, CFG.analysis_frequency), CFG)[0]
    assert out == pytest.approx([1.0, 0.0], abs=0.01)
    out = demodulate(-_tone(CFG, CFG.analysis_frequency, np.pi / 2), CFG)[0]
    assert out == pytest.approx([0.0, 1.0], abs=0.01)


def test_off_frequency_tone_rejected():
    f = CFG.analysis_frequency + 10 * CFG.resolution
    for phase in np.linspace(0, np.pi, 5):
        assert np.hypot(*demodulate(_tone(CFG, f, phase), CFG)[0]) < 0.05


def test_pairs_round_trip():
    rng = np.random.default_rng(0)
    pairs = rng.normal(size=(700, 2))
    out = synthesize_and_demodulate(pairs, CFG)
    assert np.max(np.abs(out - pairs)) < 0.01 * np.max(np.abs(pairs))


def test_white_noise_background_level():
    sigma = 2.0
    out = synthesize_and_demodulate(np.zeros((4000, 2)), CFG, noise_std=sigma, seed=3)
    expected = 2 * sigma ** 2 / CFG.samples_per_window
    assert out.var(axis=0) == pytest.approx([expected, expected], rel=0.1)


def test_filter_response_shape():
    h = filter_response(CFG, [0.0, 2 * CFG.lowpass_bandwidth])
    assert h[0] == pytest.approx(1.0, abs=0.02) and h[1] < 0.02


def test_chunked_noise_is_deterministic():
    a = synthesize_and_demodulate(np.zeros((1100, 2)), CFG, noise_std=1.0, seed=5)
    b = synthesize_and_demodulate(np.zeros((1100, 2)), CFG, noise_std=1.0, seed=5)
    assert a.tobytes() == b.tobytes()


def test_config_validation():
    with pytest.raises(ValueError):
        DemodConfig(analysis_frequency=60e6)
    with pytest.raises(ValueError):
        DemodConfig(window_length=1e-8)
    with pytest.raises(ValueError):
        DemodConfig(lowpass_bandwidth=0.0)
    with pytest.raises(ValueError):
        demodulate(np.zeros((1, 10)), CFG)
    with pytest.raises(ValueError):
        synthesize_and_demodulate(np.zeros((3, 3)), CFG)
    assert synthesize(np.zeros((2, 2)), CFG).shape == (2, CFG.samples_per_window + 2 * CFG.guard)
