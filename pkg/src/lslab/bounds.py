"""Three-way truncation of the summands and the exponent algebra behind the
Borel-Cantelli series.

A summand X_k is split at two levels that both grow with |k|:

    b_k                           (primed part:  |x| <= b_k)
    delta * sqrt(|k|^a log|k|)    (triple part:  |x| >= this)

with the double-primed part in between.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np
from scipy import integrate, optimize

from lslab.errors import PreconditionError
from lslab.field import FieldSpec, sample_replications

__all__ = [
    "BoundParams",
    "TruncatedMoments",
    "truncation_level",
    "truncation_ceiling",
    "ordering_threshold",
    "classify",
    "classify_array",
    "truncated_second_moment",
    "truncated_moments",
    "variance_threshold",
    "kolmogorov_ratio",
    "upper_exponent",
    "lower_exponent",
    "series_verdict",
    "lemma33_kappa",
    "critical_epsilon",
    "extrapolated_critical_epsilon",
]

FORMS = ("displayed", "alternative")
PRIMED, DOUBLE, TRIPLE = "primed", "double", "triple"


@dataclass(frozen=True)
class BoundParams:
    sigma: float = 1.0
    delta: float = 0.1
    epsilon: float = 1.0
    gamma: float = 0.1
    eta: float = 0.1

    def __post_init__(self):
        for name in ("sigma", "delta", "epsilon", "gamma", "eta"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if not self.delta < 1:
            raise ValueError("delta must be below 1")


def _check_size(size):
    if size < 2:
        raise PreconditionError(f"|n| must be at least 2, got {size}")


def truncation_level(params: BoundParams, size: float, alpha: float, form: str = "displayed") -> float:
    """b_n = (sigma delta / eps) sqrt(|n|^a) / log|n|.

    ``form="alternative"`` divides by sqrt(log|n|) instead, i.e. uses
    sqrt(|n|^a / log|n|).
    """
    _check_size(size)
    if form not in FORMS:
        raise ValueError(f"form must be one of {FORMS}")
    lg = math.log(size)
    scale = params.sigma * params.delta / params.epsilon
    root = math.sqrt(size**alpha)
    return scale * root / (lg if form == "displayed" else math.sqrt(lg))


def truncation_ceiling(params: BoundParams, size: float, alpha: float) -> float:
    """delta sqrt(|n|^a log|n|), the lower edge of the triple-primed class."""
    _check_size(size)
    return params.delta * math.sqrt(size**alpha * math.log(size))


def ordering_threshold(params: BoundParams, alpha: float, form: str = "displayed") -> int:
    """Smallest |n| >= 2 from which b_n < delta sqrt(|n|^a log|n|) holds for good.

    The ratio of the two levels is (sigma/eps) / (log|n|)^p with p = 3/2 for
    the displayed form and p = 1 for the alternative, so it is monotone.
    """
    p = 1.5 if form == "displayed" else 1.0
    need = (params.sigma / params.epsilon) ** (1.0 / p)  # log|n| must exceed this
    n = max(2, math.floor(math.exp(need)))
    while truncation_level(params, n, alpha, form) >= truncation_ceiling(params, n, alpha):
        n += 1
    while n > 2 and truncation_level(params, n - 1, alpha, form) < truncation_ceiling(params, n - 1, alpha):
        n -= 1
    return n


def classify(params: BoundParams, alpha: float, k, x: float, form: str = "displayed") -> str:
    """Which of the three parts a value x at index k belongs to.

    Primed takes precedence, so the classes partition the line even for the
    small |k| where b_k exceeds the upper level.
    """
    size = math.prod(k)
    ax = abs(x)
    if ax <= truncation_level(params, size, alpha, form):
        return PRIMED
    if ax >= truncation_ceiling(params, size, alpha):
        return TRIPLE
    return DOUBLE


def classify_array(values: np.ndarray, b, ceiling) -> np.ndarray:
    """Vectorized classification: 0 primed, 1 double, 2 triple.

    ``b`` and ``ceiling`` broadcast against ``values``.
    """
    a = np.abs(values)
    out = np.where(a >= ceiling, 2, 1).astype(np.int8)
    out[a <= b] = 0
    return out


def _breakpoints(field: FieldSpec):
    s = abs(field.scale)
    if field.distribution == "rademacher":
        return [s]
    if field.distribution == "point_mass":
        return [abs(field.param) * s]
    if field.distribution == "pareto":
        return [s]
    if field.distribution == "uniform":
        return [field.param * s]
    return []


def truncated_second_moment(field: FieldSpec, b: float) -> tuple[float, float]:
    """(E X', E X'^2) for X' = X 1{|X| <= b}, from the tail function.

    Uses E X'^2 = int_0^b 2x (P(|X| > x) - P(|X| > b)) dx; every built-in
    family is symmetric except the point mass, whose mean is handled directly.
    """
    if b <= 0:
        return 0.0, 0.0
    tail_b = float(field.tail_prob(b))
    f = lambda x: 2.0 * x * (float(field.tail_prob(x)) - tail_b)
    pts = [p for p in _breakpoints(field) if 0 < p < b]
    second = integrate.quad(f, 0.0, b, points=pts or None, limit=200)[0]
    mean = 0.0
    if field.distribution == "point_mass":
        c = field.param * field.scale
        mean = c if abs(c) <= b else 0.0
    return mean, max(second, 0.0)


@dataclass(frozen=True)
class TruncatedMoments:
    """Monte Carlo moments of the primed part with the reference bounds."""

    b: float
    mean: float
    mean_se: float
    variance: float
    variance_se: float
    mean_bound: float
    variance_upper: float
    variance_lower: float
    reps: int

    @property
    def variance_within_upper(self) -> bool:
        return self.variance <= self.variance_upper + 3.0 * self.variance_se

    @property
    def variance_above_lower(self) -> bool:
        return self.variance >= self.variance_lower - 3.0 * self.variance_se

    @property
    def mean_within_bound(self) -> bool:
        return abs(self.mean) <= self.mean_bound + 3.0 * self.mean_se


def truncated_moments(
    field: FieldSpec,
    params: BoundParams,
    alpha: float,
    k,
    mc_reps: int,
    form: str = "displayed",
) -> TruncatedMoments:
    """Mean and variance of X'_k estimated from ``mc_reps`` replications.

    The companion mean bound is E X^2 1{|X| > b} / b (Markov on the discarded
    tail), estimated from the same draws; the variance bounds are sigma^2 and
    sigma^2 (1 - delta).
    """
    if mc_reps < 10_000:
        raise PreconditionError("truncated moments need at least 10^4 replications")
    size = math.prod(k)
    b = truncation_level(params, size, alpha, form)
    x = sample_replications(field, k, np.arange(mc_reps))
    keep = np.abs(x) <= b
    xp = np.where(keep, x, 0.0)
    mean = float(xp.mean())
    dev2 = (xp - mean) ** 2
    var = float(dev2.mean())
    sig2 = field.variance()
    lost = np.where(keep, 0.0, x * x)
    return TruncatedMoments(
        b=b,
        mean=mean,
        mean_se=float(xp.std() / math.sqrt(mc_reps)),
        variance=var,
        variance_se=float(dev2.std() / math.sqrt(mc_reps)),
        mean_bound=float(lost.mean() / b) if b > 0 else math.inf,
        variance_upper=sig2,
        variance_lower=sig2 * (1.0 - params.delta),
        reps=mc_reps,
    )


def variance_threshold(
    field: FieldSpec, params: BoundParams, alpha: float, form: str = "displayed", max_log_size: float = 700.0
) -> float | None:
    """Smallest |n| on a geometric grid from which Var X'_n >= sigma^2 (1 - delta).

    The level b_n increases in |n| beyond e^{2/alpha}, and the truncated
    variance increases in b, so the first crossing after that point is final.
    Returns None if no crossing occurs below e^{max_log_size}.
    """
    target = field.variance() * (1.0 - params.delta)
    start = max(math.log(2.0), 2.0 / alpha)
    for lg in np.arange(start, max_log_size, 0.05):
        size = math.exp(lg)
        b = truncation_level(params, size, alpha, form)
        m1, m2 = truncated_second_moment(field, b)
        if m2 - m1 * m1 >= target:
            return size
    return None


def kolmogorov_ratio(params: BoundParams, size: float, alpha: float, form: str = "displayed") -> float:
    """b_n / (c_n sqrt(Var T')) for the upper exponential bound.

    Uses x = eps (1 - delta) sqrt(2 log|n|), c_n = 2 delta / x and the
    variance floor sigma^2 (1 - delta) |n|^a.  The bound needs this ratio to
    vanish; for the displayed form it equals sqrt((1 - delta) / (2 log|n|)).
    Reported only, never asserted.
    """
    b = truncation_level(params, size, alpha, form)
    x = params.epsilon * (1.0 - params.delta) * math.sqrt(2.0 * math.log(size))
    c = 2.0 * params.delta / x
    return b / (c * params.sigma * math.sqrt((1.0 - params.delta) * size**alpha))


def upper_exponent(params: BoundParams, beta: float = 1.0) -> float:
    """beta eps^2 (1 - delta)^3 / sigma^2: the |n|-power in the upper tail bound."""
    p = params
    return beta * p.epsilon**2 * (1.0 - p.delta) ** 3 / p.sigma**2


def lower_exponent(params: BoundParams, beta: float = 1.0) -> float:
    """beta eps^2 (1 + delta)^2 (1 + gamma) / (sigma^2 (1 - delta))."""
    p = params
    return beta * p.epsilon**2 * (1.0 + p.delta) ** 2 * (1.0 + p.gamma) / (p.sigma**2 * (1.0 - p.delta))


SERIES_KINDS = ("lambda", "a", "lambda_star", "a_star")


def lemma33_kappa(kind: str, alpha: float, beta: float = 1.0) -> float:
    """kappa = 1/(1-a) for the plain sets, beta/(1-a) for the starred ones."""
    if kind not in SERIES_KINDS:
        raise ValueError(f"kind must be one of {SERIES_KINDS}")
    if not 0 < alpha < 1:
        raise ValueError("alpha must lie in (0, 1)")
    return (beta if kind.endswith("_star") else 1.0) / (1.0 - alpha)


def series_verdict(exponent: float, kind: str, alpha: float, beta: float = 1.0, rel_tol: float = 1e-12) -> str:
    """converges / diverges / boundary for sum over the set of |n|^-exponent."""
    if exponent < 0:
        raise ValueError("exponent must be non-negative")
    critical = 1.0 / lemma33_kappa(kind, alpha, beta)
    if math.isclose(exponent, critical, rel_tol=rel_tol, abs_tol=0.0):
        return "boundary"
    return "converges" if exponent > critical else "diverges"


def critical_epsilon(params: BoundParams, alpha: float, beta: float = 1.0, side: str = "upper") -> float:
    """The eps at which the exponent sits exactly on the kappa = beta/(1-a) boundary.

    Found by root bracketing; ``side`` picks the upper or lower exponent.
    """
    expo = upper_exponent if side == "upper" else lower_exponent
    kind = "a_star" if beta != 1.0 else "a"
    kappa = lemma33_kappa(kind, alpha, beta)
    g = lambda eps: expo(replace(params, epsilon=eps)) * kappa - 1.0
    hi = params.sigma
    while g(hi) < 0:
        hi *= 2.0
    return optimize.brentq(g, 1e-12, hi, xtol=1e-15, rtol=1e-14)


def extrapolated_critical_epsilon(
    params: BoundParams, alpha: float, beta: float = 1.0, side: str = "upper", deltas=None
) -> float:
    """Intercept at delta = 0 of a quadratic fit of critical eps over a delta grid."""
    deltas = np.linspace(0.01, 0.1, 10) if deltas is None else np.asarray(deltas, float)
    eps = [critical_epsilon(replace(params, delta=float(dl)), alpha, beta, side) for dl in deltas]
    coef = np.polynomial.polynomial.polyfit(deltas, eps, 2)
    return float(coef[0])
