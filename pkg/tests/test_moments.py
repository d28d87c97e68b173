import math
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracles
from phasemix.moments import (ComponentStats, MissingMomentError, OrderError, bivariate_gaussian_moment,
                              deviations, dnk_coefficient, double_factorial, fourth_order_identity_residual,
                              gaussian_central_moment, gaussian_deviation, higher_order_constraint_residual,
                              joint_gaussian_deviation, mixed_moment_from_components, mixing_weight,
                              phase_average_weight)

sigmas = st.floats(0.05, 5.0, allow_nan=False)
corrs = st.floats(-0.99, 0.99, allow_nan=False)


def test_double_factorial():
    assert [double_factorial(m) for m in (-1, 0, 1, 5, 6, 13)] == [1, 1, 1, 15, 48, 135135]
    with pytest.raises(ValueError):
        double_factorial(-2)


def test_gaussian_central_moment():
    assert gaussian_central_moment(2, 1.0) == 3.0
    assert gaussian_central_moment(7, 1.0) == 135135.0
    assert gaussian_central_moment(0, 3.0) == 1.0
    with pytest.raises(ValueError):
        gaussian_central_moment(2, -1.0)
    with pytest.raises(OrderError):
        gaussian_central_moment(11, 1.0)


def test_phase_weights_match_quadrature(frozen):
    assert phase_average_weight(1, 1) == Fraction(1, 8)
    assert phase_average_weight(2, 0) == Fraction(3, 8)
    assert float(phase_average_weight(1, 1)) == pytest.approx(frozen["trig_weight_1_1"], rel=1e-12)
    assert float(phase_average_weight(2, 0)) == pytest.approx(frozen["trig_weight_2_0"], rel=1e-12)
    for a in range(5):
        for b in range(5):
            assert float(phase_average_weight(a, b)) == pytest.approx(oracles.trig_weight(a, b), rel=1e-11)
    with pytest.raises(OrderError):
        phase_average_weight(9, 8)


def test_mixing_weight_closed_form():
    for n in range(1, 11):
        for k in range(n + 1):
            want = Fraction(double_factorial(2 * n - 1), 2 ** n * math.factorial(k) * math.factorial(n - k))
            assert mixing_weight(n, k) == want
        # the weights reproduce a Gaussian with equal variances
        assert sum(mixing_weight(n, k) * double_factorial(2 * k - 1) * double_factorial(2 * (n - k) - 1)
                   for k in range(n + 1)) == double_factorial(2 * n - 1)


def test_mixed_fourth_moment_example(frozen):
    stats = ComponentStats.gaussian_from(1.0, 2.0)
    assert mixed_moment_from_components(2, stats) == 22.125
    assert mixed_moment_from_components(2, stats) == pytest.approx(frozen["mixed_moment_4_s1_s2"], rel=1e-12)
    assert mixed_moment_from_components(3, stats) == pytest.approx(frozen["mixed_moment_6_s1_s2"], rel=1e-12)
    assert mixed_moment_from_components(1, stats) == 2.5


def test_gaussian_deviation_example(frozen):
    assert gaussian_deviation(2, 22.125, math.sqrt(2.5)) == pytest.approx(3.375, rel=1e-14)
    assert gaussian_deviation(2, 22.125, math.sqrt(2.5)) == pytest.approx(frozen["delta4_s1_s2"], rel=1e-12)
    with pytest.raises(ValueError):
        gaussian_deviation(2, 1.0, -1.0)


def test_joint_deviation_example(frozen):
    stats = ComponentStats.gaussian_from(1.0, 1.0, 0.5)
    assert joint_gaussian_deviation(1, 1, 6.0, stats) == frozen["joint_dev_1_1_example"]
    # a Gaussian law has zero deviation at every order
    assert joint_gaussian_deviation(1, 1, stats.joint(2, 2), stats) == pytest.approx(0.0, abs=1e-12)
    with pytest.raises(ValueError):
        joint_gaussian_deviation(2, 1, 1.0, stats)


def test_fourth_order_examples(frozen):
    s = ComponentStats.gaussian_from(1.0, 2.0)
    assert fourth_order_identity_residual(s) == 0.0
    assert (8 / 3) * deviations(s).delta4 == pytest.approx(frozen["asymmetry_sq_s1_s2"], rel=1e-12)
    s = ComponentStats.gaussian_from(1.0, 1.0, 0.5)
    assert fourth_order_identity_residual(s) == 0.0
    assert deviations(s).delta4 == pytest.approx(frozen["delta4_s1_s1_c05"], rel=1e-12)


def test_dnk_examples():
    assert [dnk_coefficient(2, k) for k in range(3)] == [Fraction(-1, 2), Fraction(1), Fraction(-1, 2)]
    for n in range(2, 11):
        assert sum(dnk_coefficient(n, k) for k in range(n + 1)) == 0
    with pytest.raises(ValueError):
        dnk_coefficient(2, 3)


def test_constraint_examples():
    s = ComponentStats.gaussian_from(1.0, 2.0)
    lhs, rhs = higher_order_constraint_residual(2, s)
    assert lhs == rhs == pytest.approx(3.375, rel=1e-14)
    lhs, rhs = higher_order_constraint_residual(3, s)
    assert lhs == rhs != 0
    with pytest.raises(ValueError):
        higher_order_constraint_residual(2, ComponentStats.gaussian_from(1.0, 2.0, 0.3))


def test_non_gaussian_stats_need_moments():
    s = ComponentStats(1.0, 2.0)
    assert mixed_moment_from_components(1, s) == 2.5
    with pytest.raises(MissingMomentError):
        mixed_moment_from_components(2, s)


@pytest.mark.parametrize("bad", [dict(s_cos=-1, s_sin=1), dict(s_cos=1, s_sin=1, c=1.5),
                                 dict(s_cos=float("nan"), s_sin=1)])
def test_stats_validation(bad):
    with pytest.raises(ValueError):
        ComponentStats(**bad)


def test_stats_reject_inconsistent_joint_moments():
    with pytest.raises(ValueError):
        ComponentStats(1.0, 1.0, joint_moments={(2, 0): 2.0})
    with pytest.raises(ValueError):
        ComponentStats(1.0, 1.0, joint_moments={(2, 0): 1.0, (4, 0): 0.5})


@settings(max_examples=60, deadline=None)
@given(sigmas, sigmas, corrs, st.integers(0, 6), st.integers(0, 6))
def test_isserlis_matches_gauss_hermite(s_cos, s_sin, c, a, b):
    exact = float(bivariate_gaussian_moment(a, b, s_cos, s_sin, c))
    ref = oracles.gaussian_joint_moment(a, b, s_cos, s_sin, c)
    assert exact == pytest.approx(ref, rel=1e-9, abs=1e-9 * max(s_cos, s_sin) ** (a + b))


@settings(max_examples=40, deadline=None)
@given(sigmas, sigmas, corrs, st.integers(1, 5))
def test_mixed_moment_matches_phase_quadrature(s_cos, s_sin, c, n):
    stats = ComponentStats.gaussian_from(s_cos, s_sin, c)
    assert mixed_moment_from_components(n, stats) == pytest.approx(
        oracles.mixed_moment(n, s_cos, s_sin, c), rel=1e-10)


@settings(max_examples=100, deadline=None)
@given(sigmas, sigmas, corrs)
def test_fourth_order_identity_is_exact(s_cos, s_sin, c):
    assert fourth_order_identity_residual(ComponentStats.gaussian_from(s_cos, s_sin, c)) == 0.0


@settings(max_examples=50, deadline=None)
@given(sigmas, sigmas, st.integers(2, 7))
def test_higher_order_constraint_is_exact(s_cos, s_sin, n):
    lhs, rhs = higher_order_constraint_residual(n, ComponentStats.gaussian_from(s_cos, s_sin))
    assert lhs == rhs


@settings(max_examples=30, deadline=None)
@given(sigmas, st.integers(2, 7))
def test_symmetric_gaussian_has_no_deviation(s, n):
    dev = deviations(ComponentStats.gaussian_from(s, s), max_half_order=n)
    assert all(abs(v) <= 1e-12 * s ** (2 * n) * double_factorial(2 * n) for v in dev.higher.values())


@settings(max_examples=40, deadline=None)
@given(st.lists(st.floats(-3, 3), min_size=4, max_size=4), st.integers(2, 5))
def test_constraint_holds_for_non_gaussian_law(params, n):
    """Any law with independent components satisfies the identity, Gaussian or not."""
    # product of two discrete symmetric laws: values +-x with extra mass at 0
    x, y, p, q = abs(params[0]) + 0.1, abs(params[1]) + 0.1, 0.1 + 0.8 * abs(math.sin(params[2])), \
        0.1 + 0.8 * abs(math.sin(params[3]))
    mx = {k: (p * x ** k if k % 2 == 0 else 0.0) for k in range(15)}
    my = {k: (q * y ** k if k % 2 == 0 else 0.0) for k in range(15)}
    mx[0] = my[0] = 1.0
    joint = {(a, b): mx[a] * my[b] for a in range(15) for b in range(15) if a + b <= 14}
    stats = ComponentStats(math.sqrt(mx[2]), math.sqrt(my[2]), 0.0, joint_moments=joint)
    lhs, rhs = higher_order_constraint_residual(n, stats)
    assert lhs == rhs
    assert fourth_order_identity_residual(stats) == 0.0
