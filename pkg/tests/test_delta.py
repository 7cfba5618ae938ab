import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from lslab.delta import CATALOG, TransformSpec, finite_difference, predicted_limits, transform_trajectory
from lslab.errors import DerivativeOrderError

R2 = math.sqrt(2.0)


def test_hand_derived_limits():
    assert predicted_limits(TransformSpec("identity"), R2) == (R2, -R2)
    up, low = predicted_limits(TransformSpec("square"), R2)
    assert up == pytest.approx(2.0) and low == 0.0
    up, low = predicted_limits(TransformSpec("cube"), R2)
    assert up == pytest.approx(2**1.5) and low == pytest.approx(-(2**1.5))
    assert predicted_limits(TransformSpec("exp"), R2) == pytest.approx((R2, -R2))
    assert predicted_limits(TransformSpec("cosh-1"), R2) == pytest.approx((1.0, 0.0))


@pytest.mark.parametrize("s", [0.3, 1.0, 2.5])
def test_identity_exact(s):
    assert predicted_limits(TransformSpec("identity"), s) == (s, -s)


def test_negative_even_derivative():
    t = TransformSpec("polynomial", coeffs=(0.0, 0.0, -3.0))
    assert predicted_limits(t, 1.0) == (0.0, -3.0)


def test_orders():
    assert TransformSpec("square", 0.0).m == 2
    assert TransformSpec("square", 1.0).m == 1
    assert TransformSpec("cube", 0.0).derivative == 6.0
    assert TransformSpec("polynomial", coeffs=(1, 0, 0, 0, 2)).m == 4
    with pytest.raises(DerivativeOrderError):
        TransformSpec("polynomial", coeffs=(5.0,))
    with pytest.raises(ValueError):
        TransformSpec("sine")


@pytest.mark.parametrize("name", sorted(CATALOG))
@pytest.mark.parametrize("mu", [0.0, 0.4, -0.3])
def test_finite_differences_match(name, mu):
    t = TransformSpec(name, mu)
    for k in range(1, 4):
        exact = CATALOG[name][1](k, mu)
        fd = finite_difference(t.g, mu, k)
        assert fd == pytest.approx(exact, rel=1e-6, abs=1e-6)


def test_trajectory_trivial_cases():
    n = np.arange(2, 50, dtype=float)
    a, b = np.sqrt(n / np.log(n)), n
    for name in ("identity", "square", "exp", "log1p"):
        tr = transform_trajectory(np.zeros_like(n), TransformSpec(name), a, b)
        assert np.all(tr.values == 0.0)
    mu = 0.5
    tr = transform_trajectory(mu * b, TransformSpec("exp", mu), a, b)
    assert np.allclose(tr.values, 0.0)


@settings(max_examples=50, deadline=None)
@given(st.lists(st.floats(-50, 50, allow_nan=False), min_size=1, max_size=60))
def test_square_loses_sign_and_extrema_monotone(us):
    u = np.array(us)
    n = np.arange(3, 3 + len(u), dtype=float)
    tr = transform_trajectory(u, TransformSpec("square"), np.sqrt(n), n)
    assert (tr.values >= 0).all()
    assert (np.diff(tr.running_max) >= 0).all() and (np.diff(tr.running_min) <= 0).all()


def test_uses_mth_power_of_a():
    tr = transform_trajectory([2.0], TransformSpec("cube"), [3.0], [1.0])
    assert tr.values[0] == pytest.approx(27.0 * 8.0)
