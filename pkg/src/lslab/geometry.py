"""Subsequence index sets of base points and their geometric properties.

Each set is built from a one-dimensional term sequence t_1 < t_2 < ... :

* ``lambda``       t_1 = 1, t_2 = 2, t_i = (i / log i)^(1/(1-alpha)) for i >= 3
                   (consecutive windows overlap, covering the axis)
* ``a``            t_i = i^(1/(1-alpha)) (consecutive windows are disjoint)
* ``lambda_star``, ``a_star``
                   t_i = i^(beta/(1-alpha)) * (log+ i)^beta2
* ``diagonal``     the points (t_i, ..., t_i) of the starred sequence
* ``boundary``     (t_j, k) for lambda terms with j >= 3 and k = 1..M (d = 2)
* ``full``         every lattice point

Inequalities are checked twice: on the real-valued terms and on the floored
integer terms the lattice actually uses.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from lslab.errors import PreconditionError
from lslab.lattice import LatticeIndex, floor_power

__all__ = [
    "KINDS",
    "SubsequenceSpec",
    "InequalityReport",
    "GapStats",
    "terms_real",
    "terms_floored",
    "generate",
    "generate_array",
    "overlap_check",
    "disjointness_check",
    "gap_stats",
    "lambda_term",
    "discrepancy_cardinality",
    "discrepancy_scale",
]

KINDS = ("lambda", "lambda_star", "a", "a_star", "diagonal", "boundary", "full")


@dataclass(frozen=True)
class SubsequenceSpec:
    kind: str = "a"
    alpha: float = 0.5
    beta: float = 1.0
    beta2: float = 0.0
    M: int = 1
    d: int = 2

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown subsequence kind {self.kind!r}")
        if not 0 < self.alpha < 1:
            raise ValueError("alpha must lie in (0, 1)")
        if self.beta < 1:
            raise ValueError("beta must be >= 1")
        if self.d < 1:
            raise ValueError("d must be >= 1")
        if self.kind == "boundary" and (self.d != 2 or self.M < 1):
            raise ValueError("boundary sets are two-dimensional with M >= 1")

    @property
    def exponent(self) -> float:
        """Power of i in the term sequence."""
        if self.kind in ("lambda_star", "a_star", "diagonal"):
            return self.beta / (1.0 - self.alpha)
        return 1.0 / (1.0 - self.alpha)


def terms_real(spec: SubsequenceSpec, i) -> np.ndarray:
    """Real-valued terms t_i (vectorized, i >= 1)."""
    i = np.asarray(i, dtype=float)
    kappa = spec.exponent
    if spec.kind in ("lambda", "boundary"):
        with np.errstate(divide="ignore", invalid="ignore"):
            t = (i / np.log(i)) ** kappa
        return np.where(i == 1, 1.0, np.where(i == 2, 2.0, t))
    t = i**kappa
    if spec.kind in ("lambda_star", "a_star", "diagonal") and spec.beta2 != 0:
        with np.errstate(divide="ignore"):
            t = t * np.maximum(np.log(i), 1.0) ** spec.beta2
    return t


def lambda_term(i, alpha: float):
    """(i / log i)^(1/(1-alpha)) with the fixed starting values 1 and 2."""
    return terms_real(SubsequenceSpec("lambda", alpha), i)


_FLOOR_LIMIT = 2.0**62


def terms_floored(spec: SubsequenceSpec, i) -> np.ndarray:
    """Integer parts of the terms; raises once a term no longer fits in int64."""
    t = terms_real(spec, i)
    if np.any(t >= _FLOOR_LIMIT):
        raise OverflowError("floored term exceeds the int64 range")
    return np.floor(t * (1.0 + 1e-12)).astype(np.int64)


def _floored_scan(spec, i, t, t_next, ok_real, strict_less):
    # Beyond int64 the integer part cannot be formed; there the relative
    # effect of flooring is below double precision, so the real verdict stands.
    fits = t_next < _FLOOR_LIMIT
    ok = ok_real.copy()
    if fits.any():
        f = terms_floored(spec, i[fits])
        f_next = terms_floored(spec, i[fits] + 1)
        reach = f + _widths(f, spec.alpha)
        ok[fits] = reach < f_next if strict_less else reach > f_next
    return ok


def _widths(t, alpha):
    return np.maximum(1, floor_power(np.asarray(t, dtype=np.int64), alpha))


def _term_list(spec: SubsequenceSpec, limit: int) -> np.ndarray:
    # distinct floored terms <= limit, ascending
    if spec.kind == "full":
        return np.arange(1, limit + 1, dtype=np.int64)
    if limit < 1:
        return np.zeros(0, dtype=np.int64)
    # the terms grow at least like i / log i, so i_max is bounded by ~limit*log
    i_hi = 16
    while terms_real(spec, i_hi) <= limit:
        i_hi *= 2
    t = terms_floored(spec, np.arange(1, i_hi + 1))
    t = t[t <= limit]
    return np.unique(t)


def _sort_points(pts: np.ndarray) -> np.ndarray:
    sizes = np.prod(pts, axis=1)
    keys = [pts[:, k] for k in reversed(range(pts.shape[1]))] + [sizes]
    return pts[np.lexsort(keys)]


def _products(terms: np.ndarray, d: int, budget: int) -> np.ndarray:
    coords = terms[:, None]
    prods = terms.copy()
    for _ in range(d - 1):
        counts = np.searchsorted(terms, budget // prods, side="right")
        total = int(counts.sum())
        owner = np.repeat(np.arange(len(prods)), counts)
        starts = np.repeat(np.cumsum(counts) - counts, counts)
        pick = np.arange(total) - starts
        coords = np.hstack([coords[owner], terms[pick][:, None]])
        prods = prods[owner] * terms[pick]
    return coords


def generate_array(spec: SubsequenceSpec, budget: int) -> np.ndarray:
    """Base points with size <= budget as an (N, d) int64 array.

    Rows are ordered by size with lexicographic tie-breaks.
    """
    d = spec.d
    if budget < 1:
        return np.zeros((0, d), dtype=np.int64)
    if spec.kind == "diagonal":
        root = int(math.floor(budget ** (1.0 / d) * (1 + 1e-12)))
        t = [x for x in _term_list(spec, root + 1).tolist() if x**d <= budget]
        t = np.asarray(t, dtype=np.int64)
        return np.repeat(t[:, None], d, axis=1)
    if spec.kind == "boundary":
        i_hi = 16
        while terms_real(spec, i_hi) <= budget:
            i_hi *= 2
        t = np.unique(terms_floored(spec, np.arange(3, i_hi + 1)))
        k = np.arange(1, spec.M + 1, dtype=np.int64)
        pts = np.stack(np.broadcast_arrays(t[:, None], k[None, :]), axis=-1).reshape(-1, 2)
        pts = pts[pts[:, 0] * pts[:, 1] <= budget]
        return _sort_points(pts)
    terms = _term_list(spec, budget)
    if len(terms) == 0:
        return np.zeros((0, d), dtype=np.int64)
    return _sort_points(_products(terms, d, budget))


def generate(spec: SubsequenceSpec, budget: int) -> list[LatticeIndex]:
    """Base points of the set with size <= budget, in increasing size."""
    return [LatticeIndex(row) for row in generate_array(spec, budget).tolist()]


@dataclass(frozen=True)
class InequalityReport:
    """Outcome of a termwise inequality scan over i_range."""

    i_range: tuple[int, int]
    all_hold: bool
    first_failure: int | None
    all_hold_floored: bool
    first_failure_floored: int | None


def _first_false(i, ok):
    bad = np.flatnonzero(~ok)
    return (True, None) if len(bad) == 0 else (False, int(i[bad[0]]))


def overlap_check(spec: SubsequenceSpec, i_range) -> InequalityReport:
    """Check t_i + t_i^alpha > t_{i+1} for consecutive lambda terms."""
    if spec.kind != "lambda":
        raise PreconditionError("overlap is a property of the lambda sequence")
    lo, hi = i_range
    if lo < 3:
        raise PreconditionError("overlap is claimed for i >= 3")
    i = np.arange(lo, hi + 1)
    t = terms_real(spec, i)
    t_next = terms_real(spec, i + 1)
    ok = t + t**spec.alpha > t_next
    ok_f = _floored_scan(spec, i, t, t_next, ok, strict_less=False)
    return InequalityReport((lo, hi), *_first_false(i, ok), *_first_false(i, ok_f))


def disjointness_check(spec: SubsequenceSpec, i_range) -> InequalityReport:
    """Check t_i + t_i^alpha < t_{i+1}, so windows at consecutive terms are disjoint."""
    if spec.kind not in ("a", "a_star", "diagonal"):
        raise PreconditionError("disjointness applies to the a, a_star and diagonal sets")
    lo, hi = i_range
    if lo < 1:
        raise PreconditionError("i starts at 1")
    i = np.arange(lo, hi + 1)
    t = terms_real(spec, i)
    t_next = terms_real(spec, i + 1)
    ok = t + t**spec.alpha < t_next
    ok_f = _floored_scan(spec, i, t, t_next, ok, strict_less=True)
    return InequalityReport((lo, hi), *_first_false(i, ok), *_first_false(i, ok_f))


@dataclass(frozen=True)
class GapStats:
    """Gaps between consecutive lambda terms against their predicted growth.

    All fields are arrays aligned with ``i``.
    """

    i: np.ndarray
    gap: np.ndarray
    width_gap: np.ndarray
    predicted_gap: np.ndarray

    @property
    def ratio(self) -> np.ndarray:
        return self.gap / self.predicted_gap

    @property
    def width_ratio(self) -> np.ndarray:
        return self.width_gap / self.gap


def gap_stats(spec: SubsequenceSpec, i_range) -> GapStats:
    if spec.kind != "lambda":
        raise PreconditionError("gap statistics are defined for the lambda sequence")
    lo, hi = i_range
    if lo < 2:
        raise PreconditionError("gap statistics start at i = 2")
    a = spec.alpha
    i = np.arange(lo, hi + 1)
    fi = i.astype(float)
    t = terms_real(spec, i)
    t_next = terms_real(spec, i + 1)
    predicted = fi ** (a / (1 - a)) / np.log(fi) ** (1 / (1 - a)) / (1 - a)
    return GapStats(i, t_next - t, t_next**a - t**a, predicted)


def _lambda_floor(alpha, j):
    return int(terms_floored(SubsequenceSpec("lambda", alpha), j))


def discrepancy_cardinality(alpha: float, j: int, k: int, m: int, n: int) -> int:
    """Number of cells in the symmetric difference of two windows.

    Compares the window at (m, n) with the window at the bracketing lambda
    corner (m_j, n_k); widths are floored.  Requires m_j <= m <= m_{j+1} and
    n_k <= n <= n_{k+1}.
    """
    mj, mj1 = _lambda_floor(alpha, j), _lambda_floor(alpha, j + 1)
    nk, nk1 = _lambda_floor(alpha, k), _lambda_floor(alpha, k + 1)
    if not (mj <= m <= mj1 and nk <= n <= nk1):
        raise PreconditionError(f"({m}, {n}) lies outside the cell [{mj}, {mj1}] x [{nk}, {nk1}]")
    w = lambda x: max(1, floor_power(x, alpha))
    wm, wn, wmj, wnk = w(m), w(n), w(mj), w(nk)
    return (
        (m + wm - mj - wmj) * wn
        + (mj + wmj - m) * (n + wn - nk - wnk)
        + wmj * (n - nk)
        + (m - mj) * (nk + wnk - n)
    )


def discrepancy_scale(alpha: float, j: int, k: int) -> float:
    """m_j^alpha n_k^alpha (1/log j + 1/log k) on real-valued terms."""
    if j < 2 or k < 2:
        raise PreconditionError("j, k >= 2 needed for the logarithms")
    mj, nk = lambda_term(j, alpha), lambda_term(k, alpha)
    return float(mj**alpha * nk**alpha * (1 / math.log(j) + 1 / math.log(k)))
