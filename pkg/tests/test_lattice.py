import math
from collections import Counter

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import brute_points
from lslab.errors import LatticeOverflowError
from lslab.lattice import (
    LatticeIndex,
    count_equisized,
    count_table,
    cumulative_count,
    enumerate_equisized,
    floor_power,
    subexponential_check,
)


def test_lattice_index_basics():
    n = LatticeIndex((2, 3, 5))
    assert n.d == 3 and n.size() == 30
    assert n.leq((2, 4, 5)) and not n.leq((1, 9, 9))
    with pytest.raises(ValueError):
        LatticeIndex((0, 1))
    with pytest.raises(ValueError):
        LatticeIndex(())


def test_size_overflow():
    with pytest.raises(LatticeOverflowError):
        LatticeIndex((2**32, 2**32)).size()
    assert LatticeIndex((2**31, 2**31)).size() == 2**62


@pytest.mark.parametrize("d,j,expected", [(2, 6, 4), (3, 12, 18), (1, 97, 1), (4, 1, 1)])
def test_count_equisized_examples(d, j, expected):
    assert count_equisized(d, j) == expected


def test_cumulative_examples():
    assert cumulative_count(2, 4) == 8
    assert cumulative_count(1, 12345) == 12345


def test_enumerate_equisized_example():
    assert enumerate_equisized(2, 4) == [(1, 4), (2, 2), (4, 1)]


@pytest.mark.parametrize("d", [1, 2, 3, 4])
def test_counts_match_brute_force(d):
    j_max = 600
    sizes = Counter(math.prod(p) for p in brute_points(d, j_max))
    table = count_table(d, j_max)
    running = 0
    for j in range(1, j_max + 1):
        running += sizes[j]
        assert count_equisized(d, j) == sizes[j] == table.equisized(j)
        assert table.cumulative(j) == running
    assert cumulative_count(d, j_max) == running


def test_enumeration_matches_brute_force():
    pts = brute_points(3, 360)
    for j in (1, 12, 60, 64, 97, 360):
        expected = sorted(p for p in pts if math.prod(p) == j)
        assert enumerate_equisized(3, j) == expected


@settings(max_examples=60, deadline=None)
@given(st.integers(1, 4), st.integers(1, 10**9))
def test_enumeration_count_consistent(d, j):
    if count_equisized(d, j) > 5000:
        return
    pts = enumerate_equisized(d, j)
    assert len(pts) == len(set(pts)) == count_equisized(d, j)
    assert all(p.size() == j for p in pts)
    assert pts == sorted(pts)


@settings(max_examples=40, deadline=None)
@given(st.integers(2, 5), st.integers(2, 3000))
def test_table_invariants(d, j_max):
    t = count_table(d, j_max)
    assert np.array_equal(np.cumsum(t.dj), t.Mj)
    assert (t.dj[1:] >= d).all()


@settings(max_examples=50, deadline=None)
@given(st.integers(2, 4), st.integers(1, 10**5), st.integers(1, 10**5))
def test_multiplicative(d, a, b):
    if math.gcd(a, b) == 1:
        assert count_equisized(d, a * b) == count_equisized(d, a) * count_equisized(d, b)


def test_hyperbola_matches_sieve_large():
    t = count_table(2, 10**5)
    assert cumulative_count(2, 10**5) == t.cumulative(10**5)
    t3 = count_table(3, 20000)
    assert cumulative_count(3, 20000) == t3.cumulative(20000)


def test_overflow_guard():
    with pytest.raises(LatticeOverflowError):
        count_equisized(2, 2**63)


def test_floor_power_exact_roots():
    assert floor_power(1000, 1 / 3) == 10
    assert floor_power(10**6, 0.5) == 1000
    assert list(floor_power(np.array([4, 8, 9]), 0.5)) == [2, 2, 3]


def test_subexponential_ratio_decays():
    rep = subexponential_check(2, 10**5, 0.5)
    assert rep.tail_max(10**4) < rep.max_ratio
    one = subexponential_check(1, 500, 0.3)
    assert one.max_ratio == 1.0 and one.argmax == 1
    assert subexponential_check(2, 100, 1.0).max_ratio <= 1.0
    assert rep.ratios.shape == (10**5,)


def test_two_divisors_at_primes():
    from sympy import primerange

    primes = list(primerange(2, 20000))
    assert all(count_equisized(2, p) == 2 for p in primes)
    assert all(count_equisized(3, p) == 3 for p in primes[:200])
