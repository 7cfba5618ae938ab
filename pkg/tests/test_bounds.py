import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate, stats

from lslab.bounds import (
    BoundParams,
    classify,
    classify_array,
    critical_epsilon,
    extrapolated_critical_epsilon,
    kolmogorov_ratio,
    lower_exponent,
    ordering_threshold,
    series_verdict,
    truncated_moments,
    truncated_second_moment,
    truncation_ceiling,
    truncation_level,
    upper_exponent,
    variance_threshold,
)
from lslab.errors import PreconditionError
from lslab.field import FieldSpec

P = BoundParams(sigma=1.0, delta=0.1, epsilon=1.0, gamma=0.1, eta=0.1)


def test_level_examples():
    assert truncation_level(P, math.e**4, 0.5) == pytest.approx(0.1 * math.e / 4, rel=1e-12)
    assert truncation_level(BoundParams(2.0, 0.5, 2.0), math.e, 0.3) == pytest.approx(0.5 * math.exp(0.15))
    assert truncation_level(BoundParams(delta=1e-9), 100, 0.5) < 1e-8
    with pytest.raises(PreconditionError):
        truncation_level(P, 1, 0.5)


def test_alternative_form():
    n = 10**6
    disp = truncation_level(P, n, 0.5)
    alt = truncation_level(P, n, 0.5, form="alternative")
    assert alt == pytest.approx(disp * math.sqrt(math.log(n)))


def test_params_validation():
    with pytest.raises(ValueError):
        BoundParams(delta=1.0)
    with pytest.raises(ValueError):
        BoundParams(sigma=0.0)


def test_classify_examples():
    k = (100, 100)
    b, top = truncation_level(P, 10**4, 0.5), truncation_ceiling(P, 10**4, 0.5)
    assert b < top
    assert classify(P, 0.5, k, 0.0) == "primed"
    assert classify(P, 0.5, k, b * 1.01) == "double"
    assert classify(P, 0.5, k, 10 * top) == "triple"
    assert classify(P, 0.5, k, -10 * top) == "triple"


@settings(max_examples=1000, deadline=None)
@given(
    st.lists(st.integers(1, 10**4), min_size=1, max_size=3).filter(lambda k: math.prod(k) >= 2),
    st.floats(-1e3, 1e3, allow_nan=False),
)
def test_partition(k, x):
    size = math.prod(k)
    b, top = truncation_level(P, size, 0.5), truncation_ceiling(P, size, 0.5)
    c = classify(P, 0.5, k, x)
    member = {"primed": abs(x) <= b, "double": b < abs(x) < top, "triple": abs(x) >= top}
    # where the levels are ordered the classes are exactly the three intervals
    if b < top:
        assert [name for name, inside in member.items() if inside] == [c]
    assert int(classify_array(np.array([x]), b, top)[0]) == ["primed", "double", "triple"].index(c)


def test_ordering_threshold_is_sharp():
    for form in ("displayed", "alternative"):
        p = BoundParams(sigma=1.0, delta=0.1, epsilon=0.05)
        n = ordering_threshold(p, 0.5, form)
        assert truncation_level(p, n, 0.5, form) < truncation_ceiling(p, n, 0.5)
        assert truncation_level(p, n - 1, 0.5, form) >= truncation_ceiling(p, n - 1, 0.5)


def test_exponent_examples():
    assert upper_exponent(BoundParams(sigma=2.0, epsilon=2.0, delta=1e-300)) == pytest.approx(1.0)
    a = 0.5
    p = BoundParams(sigma=1.0, epsilon=math.sqrt(1 - a), delta=1e-300, gamma=1e-300)
    assert lower_exponent(p) == pytest.approx(1 - a)
    assert upper_exponent(P) == pytest.approx(0.729)
    assert upper_exponent(P, beta=2.0) == pytest.approx(2 * 0.729)
    assert lower_exponent(P) == pytest.approx(1.21 * 1.1 / 0.9)


@settings(max_examples=100, deadline=None)
@given(st.floats(0.01, 0.9), st.floats(0.01, 0.9), st.floats(0.01, 2.0))
def test_exponent_monotone(d1, d2, g):
    lo, hi = sorted((d1, d2))
    if hi - lo < 1e-6:
        return
    a, b = BoundParams(delta=lo, gamma=g), BoundParams(delta=hi, gamma=g)
    assert upper_exponent(a) > upper_exponent(b)
    assert lower_exponent(a) < lower_exponent(b)
    assert lower_exponent(BoundParams(delta=lo, gamma=g)) < lower_exponent(BoundParams(delta=lo, gamma=g + 0.1))


def test_series_verdict_examples():
    # kappa = 2 at alpha = 0.5 for the plain sets
    assert series_verdict(1.0, "a", 0.5) == "converges"
    assert series_verdict(0.25, "lambda", 0.5) == "diverges"
    assert series_verdict(0.5, "a", 0.5) == "boundary"
    assert series_verdict(0.25, "a_star", 0.5, beta=2.0) == "boundary"
    assert series_verdict(0.0, "a", 0.5) == "diverges"


@pytest.mark.parametrize("beta", [1.0, 2.0, 4.0])
@pytest.mark.parametrize("alpha", [0.3, 0.5, 0.7])
def test_critical_epsilon(alpha, beta):
    p = BoundParams(sigma=1.3)
    eps = critical_epsilon(p, alpha, beta)
    assert eps == pytest.approx(1.3 * math.sqrt((1 - alpha) / (beta * 0.9**3)), rel=1e-10)
    limit = extrapolated_critical_epsilon(p, alpha, beta)
    assert limit == pytest.approx(1.3 * math.sqrt((1 - alpha) / beta), rel=0.01)
    low = critical_epsilon(p, alpha, beta, side="lower")
    assert low == pytest.approx(1.3 * math.sqrt((1 - alpha) * 0.9 / (beta * 1.21 * 1.1)), rel=1e-10)


def test_truncated_point_mass_and_rademacher():
    tm = truncated_moments(FieldSpec.point_mass(0.0), P, 0.5, (10, 10), 10_000)
    assert tm.mean == 0.0 and tm.variance == 0.0
    big = BoundParams(epsilon=0.01)  # b_k is about 10.9 at |k| = 10^4
    tm = truncated_moments(FieldSpec.rademacher(seed=4), big, 0.5, (100, 100), 10_000)
    assert tm.b >= 1.0 and tm.mean_bound == 0.0
    assert tm.variance == pytest.approx(1.0, abs=0.01)


def test_truncated_normal_matches_quadrature():
    tm = truncated_moments(FieldSpec.normal(seed=9), P, 0.5, (10, 10), 200_000)
    b = tm.b
    second = integrate.quad(lambda x: x * x * stats.norm.pdf(x), -b, b)[0]
    assert abs(tm.variance - second) < 3 * tm.variance_se
    assert tm.variance_within_upper and tm.mean_within_bound
    assert truncated_second_moment(FieldSpec.normal(), b)[1] == pytest.approx(second, rel=1e-8)


def test_truncated_second_moment_closed_forms():
    # uniform(-2, 2) restricted to [-1, 1]: int_{-1}^{1} x^2 / 4 dx = 1/6
    assert truncated_second_moment(FieldSpec.uniform(2.0), 1.0)[1] == pytest.approx(1 / 6)
    assert truncated_second_moment(FieldSpec.rademacher(), 2.0)[1] == pytest.approx(1.0)
    assert truncated_second_moment(FieldSpec.rademacher(), 0.5)[1] == 0.0
    assert truncated_second_moment(FieldSpec.point_mass(1.5), 2.0) == pytest.approx((1.5, 2.25))


def test_variance_threshold_normal():
    n = variance_threshold(FieldSpec.normal(), P, 0.5)
    b = truncation_level(P, n, 0.5)
    assert truncated_second_moment(FieldSpec.normal(), b)[1] >= 0.9
    assert n > 1e10


@settings(max_examples=20, deadline=None)
@given(st.sampled_from(["normal", "uniform", "pareto"]), st.integers(2, 10**6))
def test_truncated_variance_below_sigma2(dist, size):
    field = FieldSpec(dist, 4.0 if dist == "pareto" else None, 3, 0)
    tm = truncated_moments(field, P, 0.5, (size,), 10_000)
    assert tm.variance_within_upper


@given(
    st.floats(0.05, 0.9),
    st.floats(0.2, 3.0),
    st.floats(0.2, 3.0),
    st.floats(0.1, 0.9),
    st.floats(2.0, 1e12),
)
def test_kolmogorov_ratio_closed_form(delta, eps, sigma, alpha, size):
    p = BoundParams(sigma=sigma, delta=delta, epsilon=eps)
    want = math.sqrt((1 - delta) / (2 * math.log(size)))
    assert kolmogorov_ratio(p, size, alpha) == pytest.approx(want, rel=1e-9)
    assert kolmogorov_ratio(p, size, alpha, "alternative") == pytest.approx(want * math.sqrt(math.log(size)), rel=1e-9)
