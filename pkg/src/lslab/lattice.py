"""Counting and enumerating lattice points of Z_+^d by their size.

The size of a point is the product of its coordinates.  ``d(j)`` counts the
ordered d-tuples with product exactly ``j`` (the Piltz divisor function) and
``M(j)`` counts those with product at most ``j``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from itertools import product

import numpy as np
from sympy import factorint

from lslab.errors import LatticeOverflowError

INT64_MAX = 2**63 - 1

__all__ = [
    "INT64_MAX",
    "LatticeIndex",
    "CountTable",
    "SubexponentialReport",
    "count_equisized",
    "cumulative_count",
    "enumerate_equisized",
    "count_table",
    "subexponential_check",
    "floor_power",
]


def _checked(value: int, what: str = "count") -> int:
    if value > INT64_MAX:
        raise LatticeOverflowError(f"{what} {value} exceeds 2^63 - 1")
    return value


class LatticeIndex(tuple):
    """A point of Z_+^d.

    Behaves as a plain tuple of ints (hashing, equality, lexicographic
    ordering) with the lattice partial order available as :meth:`leq`.
    """

    def __new__(cls, coords):
        coords = tuple(int(c) for c in coords)
        if not coords:
            raise ValueError("a lattice index needs at least one coordinate")
        if any(c < 1 for c in coords):
            raise ValueError(f"coordinates must be positive integers, got {coords}")
        return super().__new__(cls, coords)

    @property
    def d(self) -> int:
        return len(self)

    def size(self) -> int:
        return _checked(math.prod(self), "size")

    def leq(self, other) -> bool:
        """Coordinatewise order: every coordinate of self is <= other's."""
        if len(other) != len(self):
            raise ValueError("dimension mismatch")
        return all(a <= b for a, b in zip(self, other))

    def __repr__(self):
        return f"LatticeIndex({tuple(self)!r})"


def floor_power(x, exponent):
    """floor(x ** exponent) for positive x, scalar or array.

    A relative nudge of 1e-12 keeps exact integer powers (e.g. 1000 ** (1/3))
    from flooring one below the true value.
    """
    r = np.asarray(x, dtype=float) ** exponent
    out = np.floor(r * (1.0 + 1e-12)).astype(np.int64)
    return int(out) if out.ndim == 0 else out


def _validate(d: int, j: int) -> None:
    if d < 1:
        raise ValueError(f"dimension must be >= 1, got {d}")
    if j < 1:
        raise ValueError(f"j must be >= 1, got {j}")
    if j > INT64_MAX:
        raise LatticeOverflowError(f"j = {j} exceeds 2^63 - 1")


def count_equisized(d: int, j: int) -> int:
    """Number of ordered d-tuples of positive integers whose product is ``j``.

    Uses multiplicativity: a prime power p^a contributes C(a + d - 1, d - 1).
    """
    _validate(d, j)
    if d == 1 or j == 1:
        return 1
    total = 1
    for a in factorint(j).values():
        total = _checked(total * math.comb(a + d - 1, d - 1))
    return total


@lru_cache(maxsize=None)
def _piltz_sum(d: int, x: int) -> int:
    # Dirichlet hyperbola: M_d(x) = sum_{a <= x} M_{d-1}(x // a), summed over
    # blocks of constant quotient so the work is O(sqrt(x)) per level.
    if x <= 0:
        return 0
    if d == 1:
        return x
    if d == 2:
        r = math.isqrt(x)
        return 2 * sum(x // a for a in range(1, r + 1)) - r * r
    total = 0
    a = 1
    while a <= x:
        q = x // a
        last = x // q
        total += (last - a + 1) * _piltz_sum(d - 1, q)
        a = last + 1
    return total


def cumulative_count(d: int, j: int) -> int:
    """``M(j)``: number of points of Z_+^d with size at most ``j``."""
    _validate(d, j)
    return _checked(_piltz_sum(d, j))


def _compositions(total: int, parts: int):
    # all tuples of `parts` non-negative ints summing to `total`
    if parts == 1:
        yield (total,)
        return
    for first in range(total + 1):
        for rest in _compositions(total - first, parts - 1):
            yield (first,) + rest


def enumerate_equisized(d: int, j: int) -> list[LatticeIndex]:
    """All points of Z_+^d of size ``j``, in lexicographic order.

    Built by spreading each prime's exponent over the d coordinates.
    """
    _validate(d, j)
    factors = sorted(factorint(j).items())
    per_prime = [
        [tuple(p**e for e in comp) for comp in _compositions(a, d)] for p, a in factors
    ]
    points = []
    for choice in product(*per_prime):
        coords = [1] * d
        for powers in choice:
            for k in range(d):
                coords[k] *= powers[k]
        points.append(LatticeIndex(coords))
    points.sort()
    return points


@dataclass(frozen=True)
class CountTable:
    """``d(j)`` and ``M(j)`` for j = 1..j_max (index 0 holds j = 1)."""

    d: int
    dj: np.ndarray
    Mj: np.ndarray

    @property
    def j_max(self) -> int:
        return len(self.dj)

    def j(self) -> np.ndarray:
        return np.arange(1, self.j_max + 1, dtype=np.int64)

    def equisized(self, j: int) -> int:
        return int(self.dj[j - 1])

    def cumulative(self, j: int) -> int:
        return int(self.Mj[j - 1])


def _convolve_with_one(prev: np.ndarray) -> np.ndarray:
    # (prev * 1)(n) = sum over divisors a of n of prev(a)
    n = len(prev)
    out = np.zeros_like(prev)
    r = math.isqrt(n)
    for a in range(1, r + 1):
        out[a - 1 :: a] += prev[a - 1]
    # for a > r the number of multiples m = n // a is small; group by m
    a = r + 1
    while a <= n:
        m = n // a
        last = n // m
        avals = np.arange(a, last + 1, dtype=np.int64)
        for t in range(1, m + 1):
            out[t * avals - 1] += prev[avals - 1]
        a = last + 1
    return out


def count_table(d: int, j_max: int) -> CountTable:
    """Sieve ``d(j)`` for all j <= j_max by repeated Dirichlet convolution."""
    _validate(d, j_max)
    dj = np.ones(j_max, dtype=np.int64)
    for _ in range(d - 1):
        dj = _convolve_with_one(dj)
    Mj = np.cumsum(dj)
    if Mj[-1] < 0:
        raise LatticeOverflowError("cumulative count overflowed int64")
    dj.flags.writeable = False
    Mj.flags.writeable = False
    return CountTable(d=d, dj=dj, Mj=Mj)


@dataclass(frozen=True)
class SubexponentialReport:
    delta: float
    max_ratio: float
    argmax: int
    ratios: np.ndarray

    def tail_max(self, j_from: int) -> float:
        """Largest ratio d(j)/j^delta over j >= j_from."""
        return float(self.ratios[j_from - 1 :].max())


def subexponential_check(d: int, j_max: int, delta: float) -> SubexponentialReport:
    """Scan d(j) / j^delta over 1..j_max; the caller judges the decay."""
    if delta <= 0:
        raise ValueError("delta must be positive")
    table = count_table(d, j_max)
    ratios = table.dj / table.j().astype(float) ** delta
    k = int(np.argmax(ratios))
    return SubexponentialReport(delta, float(ratios[k]), k + 1, ratios)
