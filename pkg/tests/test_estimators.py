import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from phasemix.analysis.estimators import (combine_two_beams, correct_gaussian_background, cumulants_to_moments,
                                          estimate_moments, moments_to_cumulants)
from phasemix.moments import ComponentStats
from phasemix.simulate import simulate_stream
from phasemix.states import ComponentGaussianState


def test_standard_normal_kurtosis(frozen):
    x = np.random.default_rng(0).standard_normal(280_000)
    k, se = estimate_moments(x, 4, 100).ratio(4)
    assert abs(k - 3) < 3 * frozen["sqrt_24_over_280000"]
    assert se == pytest.approx(frozen["sqrt_24_over_280000"], rel=0.2)


def test_uniform_kurtosis(frozen):
    x = np.random.default_rng(1).uniform(-1, 1, 10 ** 6)
    k, se = estimate_moments(x, 4, 50).ratio(4)
    assert k == pytest.approx(frozen["uniform_kurtosis"], abs=4 * se)


def test_central_moments_match_numpy():
    x = np.random.default_rng(2).normal(3.0, 2.0, 5000)
    est = estimate_moments(x, 8, 10)
    c = x - x.mean()
    for k in range(2, 9):
        assert est[k].value == pytest.approx(np.mean(c ** k), rel=1e-9, abs=1e-9)
    assert est.mean == pytest.approx(x.mean())
    assert est[1].value == pytest.approx(0.0, abs=1e-12)
    assert len(list(est)) == 8


def test_bootstrap_is_worker_independent():
    x = np.random.default_rng(3).normal(size=2000)
    a = estimate_moments(x, 6, 40, seed=9, workers=1)
    b = estimate_moments(x, 6, 40, seed=9, workers=3)
    assert a.replicates.tobytes() == b.replicates.tobytes()


def test_input_validation():
    with pytest.raises(ValueError):
        estimate_moments(np.zeros(10), 4)
    with pytest.raises(ValueError):
        estimate_moments(np.zeros(100), 16)
    with pytest.raises(ValueError):
        estimate_moments(np.r_[np.zeros(99), np.nan], 4)
    with pytest.raises(KeyError):
        estimate_moments(np.random.default_rng(0).normal(size=100), 4)[6]


@settings(max_examples=50, deadline=None)
@given(arrays(np.float64, 6, elements=st.floats(-3, 3)))
def test_cumulant_round_trip(vals):
    m = np.r_[1.0, vals]
    assert cumulants_to_moments(moments_to_cumulants(m))[0] == pytest.approx(m, rel=1e-9, abs=1e-9)


def test_gaussian_background_removal():
    rng = np.random.default_rng(4)
    x = rng.normal(0, np.sqrt(2.0), 10 ** 6) + rng.normal(0, 1.0, 10 ** 6)
    est = correct_gaussian_background(estimate_moments(x, 6, 50), 1.0)
    assert est[2].value == pytest.approx(2.0, rel=0.01)
    k, se = est.ratio(4)
    assert abs(k - 3) < 4 * se
    assert est.method.endswith("background")


def test_background_correction_raises_kurtosis():
    signal = simulate_stream(ComponentGaussianState(ComponentStats.gaussian_from(1.0, 2.0)), None, 400_000, seed=5)
    x = signal + np.random.default_rng(6).normal(0, np.sqrt(0.5), len(signal))
    raw = estimate_moments(x, 4, 20)
    fixed = correct_gaussian_background(raw, 0.5)
    assert fixed.ratio(4)[0] > raw.ratio(4)[0]
    with pytest.raises(ValueError):
        correct_gaussian_background(raw, 100.0)
    with pytest.raises(ValueError):
        correct_gaussian_background(raw, -1.0)


def test_combine_two_beams():
    a, b = np.array([1.0, 2.0]), np.array([1.0, 0.0])
    assert combine_two_beams(a, b, "-") == pytest.approx([0.0, np.sqrt(2)])
    assert combine_two_beams(a, b, "+") == pytest.approx([np.sqrt(2), np.sqrt(2)])
    with pytest.raises(ValueError):
        combine_two_beams(a, b[:1])
    with pytest.raises(ValueError):
        combine_two_beams(a, b, "*")
