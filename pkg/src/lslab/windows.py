"""Delayed sums over incremental boxes ("windows") of a random field.

A window at base point n with exponent alpha is the box
``n < i <= n + w`` with widths ``w_k = max(1, floor(n_k ** alpha))``.
Every window is summed directly from the field sampler; there is no global
prefix table, so base points can sit arbitrarily far out on the lattice.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property
from itertools import product

import numpy as np

from lslab.errors import BudgetExceededError, PreconditionError
from lslab.field import FieldSpec, sample_box
from lslab.lattice import LatticeIndex, floor_power

__all__ = [
    "DEFAULT_CELL_BUDGET",
    "WindowSpec",
    "WindowValue",
    "LevyReport",
    "window_widths",
    "window_sum",
    "max_window",
    "max_prefix",
    "local_prefix",
    "box_sum",
    "box_max",
    "levy_inequality_check",
]

DEFAULT_CELL_BUDGET = 10_000_000


def window_widths(base, alpha: float) -> tuple[int, ...]:
    return tuple(max(1, floor_power(n, alpha)) for n in base)


@dataclass(frozen=True)
class WindowSpec:
    base: LatticeIndex
    alpha: float

    def __post_init__(self):
        if not 0 < self.alpha < 1:
            raise ValueError(f"alpha must lie in (0, 1), got {self.alpha}")
        if not isinstance(self.base, LatticeIndex):
            object.__setattr__(self, "base", LatticeIndex(self.base))

    @cached_property
    def widths(self) -> tuple[int, ...]:
        return window_widths(self.base, self.alpha)

    @property
    def volume(self) -> int:
        return math.prod(self.widths)

    @property
    def size(self) -> int:
        return self.base.size()

    def norm_real(self) -> float:
        """sqrt(2 |n|^alpha log|n|) with the real-valued power of the size."""
        n = self.size
        return math.sqrt(2.0 * n**self.alpha * math.log(n))

    def norm_floored(self) -> float:
        """Same normalizer with the window volume in place of |n|^alpha."""
        return math.sqrt(2.0 * self.volume * math.log(self.size))


@dataclass(frozen=True)
class WindowValue:
    sum: float
    volume: int
    norm_real: float
    norm_floored: float

    @property
    def stat(self) -> float:
        """The normalized delayed sum; nan at |n| = 1 where the norm vanishes."""
        return self.sum / self.norm_real if self.norm_real > 0 else math.nan


def _check_budget(volume: int, cell_budget) -> None:
    if cell_budget is not None and volume > cell_budget:
        raise BudgetExceededError(volume, cell_budget)


def window_sum(field: FieldSpec, w: WindowSpec, cell_budget=DEFAULT_CELL_BUDGET) -> WindowValue:
    """Sum of X_i over the window of ``w``, exactly rounded (math.fsum)."""
    _check_budget(w.volume, cell_budget)
    cells = sample_box(field, w.base, w.widths)
    total = math.fsum(cells.ravel().tolist())
    return WindowValue(total, w.volume, w.norm_real(), w.norm_floored())


def local_prefix(values: np.ndarray) -> np.ndarray:
    """Prefix sums of a box, zero-padded so P[0, ...] = 0 along every axis."""
    P = np.zeros(tuple(s + 1 for s in values.shape))
    P[tuple(slice(1, None) for _ in values.shape)] = values
    for ax in range(values.ndim):
        np.cumsum(P, axis=ax, out=P)
    return P


def box_sum(P: np.ndarray, lower, upper) -> float:
    """Sum over lower < i <= upper from a padded prefix array (2^d corners)."""
    total = 0.0
    d = len(lower)
    for corner in product((0, 1), repeat=d):
        idx = tuple(upper[k] if c else lower[k] for k, c in enumerate(corner))
        sign = -1.0 if (d - sum(corner)) % 2 else 1.0
        total += sign * P[idx]
    return total


def max_window(
    field: FieldSpec, w: WindowSpec, two_sided: bool = False, cell_budget=DEFAULT_CELL_BUDGET
) -> float:
    """max over 0 <= k <= widths of T_{n, n+k}, or of |T_{n, n+k}|.

    The empty window (any k_j = 0) has value 0 and is part of the range.
    """
    _check_budget(w.volume, cell_budget)
    return box_max(sample_box(field, w.base, w.widths), two_sided)


def box_max(cells: np.ndarray, two_sided: bool = False) -> float:
    """Max of the anchored sub-box sums of ``cells``, empty box included.

    The full box enters with its exactly rounded sum, so the result never
    falls below the plain window sum even in the last bit.
    """
    P = local_prefix(cells)
    full = math.fsum(cells.ravel().tolist())
    if two_sided:
        return max(float(np.abs(P).max()), abs(full))
    return max(float(P.max()), full)


def max_prefix(field: FieldSpec, n, two_sided: bool = False, cell_budget=DEFAULT_CELL_BUDGET):
    """max over 1 <= k <= n of S_k, the partial sums anchored at the origin."""
    n = LatticeIndex(n)
    _check_budget(math.prod(n), cell_budget)
    P = local_prefix(sample_box(field, (0,) * len(n), n))
    inner = P[tuple(slice(1, None) for _ in n)]
    return float(np.abs(inner).max() if two_sided else inner.max())


@dataclass(frozen=True)
class LevyReport:
    lhs: float
    lhs_se: float
    rhs: float
    rhs_se: float
    reps: int

    @property
    def margin(self) -> float:
        return self.rhs - self.lhs

    @property
    def holds(self) -> bool:
        """lhs <= rhs within three combined standard errors."""
        return self.lhs <= self.rhs + 3.0 * math.hypot(self.lhs_se, self.rhs_se)


def levy_inequality_check(field: FieldSpec, n, x: float, mc_reps: int, chunk_cells: int = 2_000_000):
    """Monte Carlo estimates of both sides of the Levy-type maximal bound.

    lhs = P(max_{k <= n} S_k > x), rhs = 2^d P(S_n > x - d sqrt(2 Var S_n)).
    Replication ids ``field.replication_id + r`` for r < mc_reps make up the
    independent copies of the field.
    """
    n = LatticeIndex(n)
    cells = math.prod(n)
    if cells > 10_000:
        raise PreconditionError("levy check needs |n| <= 10^4 for full enumeration")
    d = len(n)
    shift = x - d * math.sqrt(2.0 * cells * field.variance())
    hits_max = 0
    hits_end = 0
    step = max(1, chunk_cells // cells)
    for start in range(0, mc_reps, step):
        reps = field.replication_id + np.arange(start, min(start + step, mc_reps))
        vals = sample_box(field, (0,) * d, n, replications=reps)
        P = vals
        for ax in range(1, d + 1):
            P = np.cumsum(P, axis=ax)
        flat = P.reshape(len(reps), -1)
        hits_max += int(np.count_nonzero(flat.max(axis=1) > x))
        hits_end += int(np.count_nonzero(flat[:, -1] > shift))
    p = hits_max / mc_reps
    q = hits_end / mc_reps
    scale = 2.0**d
    return LevyReport(
        lhs=p,
        lhs_se=math.sqrt(p * (1 - p) / mc_reps),
        rhs=scale * q,
        rhs_se=scale * math.sqrt(q * (1 - q) / mc_reps),
        reps=mc_reps,
    )
