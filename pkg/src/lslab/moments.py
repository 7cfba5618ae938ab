"""Tail series over the lattice and the moment conditions they are equivalent to.

The series sum_n P(|X| > |n|^a (log|n|)^kappa) collapses to a one-dimensional
sum weighted by d(j), because the summand depends on n only through |n|.
Verdicts are analytic: the tail decay rate of the field is compared with the
growth of M(j), and partial sums are reported only as corroboration.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from lslab.field import FieldSpec, moment_functional, sample_points
from lslab.geometry import SubsequenceSpec, generate_array
from lslab.lattice import count_table

__all__ = [
    "TailSeriesSpec",
    "TailSeriesResult",
    "EquivalenceReport",
    "NecessityResult",
    "tail_series",
    "series_side_finite",
    "lemma32_equivalence_report",
    "moment_condition",
    "necessity_condition",
    "necessity_tail_statistic",
]


@dataclass(frozen=True)
class TailSeriesSpec:
    d: int
    alpha: float
    kappa: float
    field: FieldSpec
    j_max: int = 10_000

    def __post_init__(self):
        if self.j_max < 2:
            raise ValueError("j_max must be at least 2")
        if self.alpha <= 0:
            raise ValueError("alpha must be positive")
        if self.d < 1:
            raise ValueError("d must be >= 1")


@dataclass(frozen=True)
class TailSeriesResult:
    j: np.ndarray
    dj: np.ndarray
    terms: np.ndarray
    partial_sums: np.ndarray
    growth: float
    verdict: str

    @property
    def total(self) -> float:
        return float(self.partial_sums[-1])


def _thresholds(j: np.ndarray, alpha: float, kappa: float) -> np.ndarray:
    jf = j.astype(float)
    with np.errstate(divide="ignore"):
        logs = np.power(np.log(jf), kappa)  # 0**0 = 1 keeps kappa = 0 exact at j = 1
    return np.power(jf, alpha) * logs


def series_side_finite(field: FieldSpec, alpha: float, kappa: float, d: int) -> bool:
    """Whether sum_j d(j) P(|X| > j^a (log j)^kappa) is finite, by decay algebra.

    For a tail P(|X| > x) ~ c x^-t the summand behaves like
    d(j) j^{-a t} (log j)^{-kappa t}; with sum_{j<=x} d(j) ~ x (log x)^{d-1}
    this converges iff a t > 1, or a t = 1 and d - 1 - kappa t < -1.
    Light and bounded tails always converge.
    """
    t = field.tail_exponent()
    if field.scale == 0 or math.isinf(t):
        return True
    at = alpha * t
    if not math.isclose(at, 1.0, rel_tol=1e-12):
        return at > 1.0
    return d - 1 - kappa * t < -1


def moment_condition(field: FieldSpec, alpha: float, kappa: float, d: int) -> float:
    """E|X|^{1/a} (log+|X|)^{d-1-kappa/a}."""
    return moment_functional(field, 1.0 / alpha, d - 1 - kappa / alpha)


def necessity_condition(field: FieldSpec, alpha: float, d: int) -> EquivalenceReport:
    """Both sides for the threshold sqrt(|n|^a log|n|) = |n|^{a/2} (log|n|)^{1/2}.

    The moment side is E|X|^{2/a} (log+|X|)^{d-1-1/a}.
    """
    return lemma32_equivalence_report(field, alpha / 2.0, 0.5, d)


def _growth(partial: np.ndarray) -> float:
    # increment over the last decade relative to the decade before it;
    # near 0 for converging tails, near or above 1 for log-type divergence
    n = len(partial)
    a, b = n // 100, n // 10
    if a < 1:
        return math.nan
    prev = partial[b - 1] - partial[a - 1]
    last = partial[-1] - partial[b - 1]
    if prev == 0:
        return 0.0 if last == 0 else math.inf
    return float(last / prev)


def tail_series(spec: TailSeriesSpec) -> TailSeriesResult:
    table = count_table(spec.d, spec.j_max)
    j = table.j()
    terms = table.dj * np.asarray(spec.field.tail_prob(_thresholds(j, spec.alpha, spec.kappa)), float)
    partial = np.cumsum(terms.astype(np.longdouble)).astype(float)
    partial[-1] = math.fsum(terms.tolist())
    series = series_side_finite(spec.field, spec.alpha, spec.kappa, spec.d)
    moment = math.isfinite(moment_condition(spec.field, spec.alpha, spec.kappa, spec.d))
    if series != moment:
        verdict = "inconclusive"
    else:
        verdict = "converging" if series else "diverging"
    return TailSeriesResult(j, table.dj, terms, partial, _growth(partial), verdict)


@dataclass(frozen=True)
class EquivalenceReport:
    moment_value: float
    moment_finite: bool
    series_finite: bool

    @property
    def agree(self) -> bool:
        return self.moment_finite == self.series_finite


def lemma32_equivalence_report(field: FieldSpec, alpha: float, kappa: float, d: int) -> EquivalenceReport:
    """Evaluate both sides of the tail-series / moment equivalence separately."""
    value = moment_condition(field, alpha, kappa, d)
    return EquivalenceReport(value, math.isfinite(value), series_side_finite(field, alpha, kappa, d))


@dataclass(frozen=True)
class NecessityResult:
    """Running max of |X_n| / sqrt(|n|^a log|n|) along an index set.

    ``terminal[r, b]`` is replication r's running max over |n| <= budgets[b].
    ``trajectories`` holds the full running max per replication when kept.
    """

    budgets: tuple[int, ...]
    sizes: np.ndarray
    terminal: np.ndarray
    trajectories: np.ndarray | None


def necessity_tail_statistic(
    field: FieldSpec,
    alpha: float,
    index_set: SubsequenceSpec,
    budgets,
    mc_reps: int,
    keep_trajectories: bool = False,
) -> NecessityResult:
    """Per-replication running max of the single-summand statistic.

    Points of size 1 are skipped because the normalizer vanishes there.
    Replication r uses ``field.replication_id + r``.
    """
    budgets = tuple(sorted(int(b) for b in np.atleast_1d(budgets)))
    pts = generate_array(index_set, budgets[-1])
    sizes = pts.prod(axis=1)
    keep = sizes >= 2
    pts, sizes = pts[keep], sizes[keep]
    fs = sizes.astype(float)
    norm = np.sqrt(fs**alpha * np.log(fs))
    cut = np.searchsorted(sizes, budgets, side="right")
    terminal = np.zeros((mc_reps, len(budgets)))
    trajs = np.zeros((mc_reps, len(sizes))) if keep_trajectories else None
    for r in range(mc_reps):
        x = sample_points(field.with_replication(field.replication_id + r), pts)
        run = np.maximum.accumulate(np.abs(x) / norm) if len(x) else x
        for b, c in enumerate(cut):
            terminal[r, b] = run[c - 1] if c > 0 else 0.0
        if trajs is not None:
            trajs[r] = run
    return NecessityResult(budgets, sizes, terminal, trajs)
