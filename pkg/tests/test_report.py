import math

import numpy as np
import pytest

from phasemix.analysis.report import (DEFAULT_SIGNIFICANCE, critical_z, format_uncertainty, gaussianity_report,
                                      infer_asymmetry)
from phasemix.masquerade import build_masquerade_state
from phasemix.moments import ComponentStats
from phasemix.simulate import simulate_stream
from phasemix.states import ComponentGaussianState


@pytest.mark.parametrize("value,err,text", [(2.9987, 0.0017, "2.9987(17)"), (3.5319, 0.0076, "3.5319(76)"),
                                            (22.94, 0.17, "22.94(17)"), (920000, 120000, "920000(120000)"),
                                            (1.0, 0.0, "1")])
def test_format_uncertainty(value, err, text):
    assert format_uncertainty(value, err) == text


def test_critical_z():
    assert DEFAULT_SIGNIFICANCE == pytest.approx(0.0027, rel=0.01)
    assert critical_z(DEFAULT_SIGNIFICANCE, 1) == pytest.approx(3.0)
    assert critical_z() > 3.0
    with pytest.raises(ValueError):
        critical_z(1.5)


@pytest.fixture(scope="module")
def asym_stream():
    return simulate_stream(ComponentGaussianState(ComponentStats.gaussian_from(1.0, 2.0)), None, 10 ** 6, seed=31)


def test_asymmetric_stream_fails_order_four(asym_stream):
    rep = gaussianity_report(asym_stream, max_order=8, bootstrap_rounds=60, n_batches=10, label="asym")
    assert not rep.verdict[2] and not rep.passed
    assert rep.k == pytest.approx(3.54, abs=0.03)
    assert rep.batches["n_batches"] == 10 and rep.drift["dof"] == 9
    lines = list(rep.summary_lines())
    assert lines[0].startswith("[asym] N = 1000000")
    d = rep.to_dict()
    assert d["verdict"]["4"] is False and d["k_text"].startswith("3.5")
    est = infer_asymmetry(rep)
    assert est.value == pytest.approx(3.0, rel=0.05) and est.consistent


def test_gaussian_stream_passes():
    x = np.random.default_rng(0).standard_normal(280_000)
    rep = gaussianity_report(x, bootstrap_rounds=60)
    assert rep.passed and len(rep.ratios) == 6
    est = infer_asymmetry(rep)
    assert est.verdict == "symmetric within errors"


def test_masquerade_passes_four_fails_six():
    x = simulate_stream(build_masquerade_state(1.0, 2.0), None, 10 ** 6, seed=32)
    rep = gaussianity_report(x, max_order=6, bootstrap_rounds=60, shapiro=False)
    assert rep.verdict[2] and not rep.verdict[3]
    assert rep.w_test is None


def test_asymmetry_example_from_numbers():
    class Fake:
        k, k_se, s = 3.375 / 6.25 + 3.0, 0.001, math.sqrt(2.5)
    est = infer_asymmetry(Fake())
    assert est.value == pytest.approx(3.0, rel=1e-12)


def test_negative_delta_flagged():
    class Fake:
        k, k_se, s = 2.9, 0.01, 1.0
    est = infer_asymmetry(Fake())
    assert not est.consistent and "inconsistent" in est.verdict


def test_batch_validation():
    with pytest.raises(ValueError):
        gaussianity_report(np.random.default_rng(0).normal(size=100), max_order=4, bootstrap_rounds=5, n_batches=10)
