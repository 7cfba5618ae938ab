"""Index-keyed i.i.d. random fields on Z_+^d.

Every variate is a pure function of ``(master_seed, replication_id, coords)``:
the tuple is hashed to 64 uniform bits with a chain of SplitMix64 finalizers
and then pushed through an inverse CDF.  No state is carried between calls, so
any window anywhere on the lattice can be generated on demand, in any order,
from any thread.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np
from scipy import integrate, special

from lslab.errors import IntegrationAccuracyError, PreconditionError

__all__ = [
    "DISTRIBUTIONS",
    "FieldSpec",
    "log_plus",
    "sample",
    "sample_points",
    "sample_box",
    "sample_replications",
    "moment_functional",
]

DISTRIBUTIONS = ("normal", "rademacher", "pareto", "point_mass", "uniform")

# default value of the single shape parameter per family
_DEFAULT_PARAM = {
    "normal": 1.0,  # sigma
    "rademacher": None,
    "pareto": 3.0,  # tail exponent t of P(|X| > x) = x^-t, x >= 1
    "point_mass": 0.0,  # the atom c
    "uniform": 1.0,  # half-width a of U(-a, a)
}

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)


def _mix(z):
    z = z + _GOLDEN
    z = (z ^ (z >> np.uint64(30))) * _M1
    z = (z ^ (z >> np.uint64(27))) * _M2
    return z ^ (z >> np.uint64(31))


@dataclass(frozen=True)
class FieldSpec:
    """Distribution, seed and replication that define a field {X_k}.

    ``scale`` multiplies every variate after sampling and ``shift`` is added
    last; both default to the identity.  Moment and tail computations assume
    ``shift == 0``.
    """

    distribution: str = "normal"
    param: float | None = None
    master_seed: int = 0
    replication_id: int = 0
    scale: float = 1.0
    shift: float = 0.0

    def __post_init__(self):
        if self.distribution not in DISTRIBUTIONS:
            raise ValueError(f"unknown distribution {self.distribution!r}")
        if self.param is None and _DEFAULT_PARAM[self.distribution] is not None:
            object.__setattr__(self, "param", _DEFAULT_PARAM[self.distribution])
        if self.distribution in ("normal", "uniform") and not self.param > 0:
            raise ValueError(f"{self.distribution} needs a positive parameter")
        if self.distribution == "pareto" and not self.param > 0:
            raise ValueError("pareto tail exponent must be positive")
        if not 0 <= self.master_seed < 2**64:
            raise ValueError("master_seed must fit in 64 bits")
        if self.replication_id < 0:
            raise ValueError("replication_id must be non-negative")

    # convenience constructors
    @classmethod
    def normal(cls, sigma=1.0, seed=0, replication=0):
        return cls("normal", sigma, seed, replication)

    @classmethod
    def rademacher(cls, seed=0, replication=0):
        return cls("rademacher", None, seed, replication)

    @classmethod
    def pareto(cls, tail, seed=0, replication=0):
        return cls("pareto", tail, seed, replication)

    @classmethod
    def point_mass(cls, value, seed=0, replication=0):
        return cls("point_mass", value, seed, replication)

    @classmethod
    def uniform(cls, half_width=1.0, seed=0, replication=0):
        return cls("uniform", half_width, seed, replication)

    def with_replication(self, replication_id: int) -> "FieldSpec":
        return replace(self, replication_id=int(replication_id))

    def rescaled(self, factor: float) -> "FieldSpec":
        return replace(self, scale=self.scale * factor)

    def mean(self) -> float:
        base = self.param if self.distribution == "point_mass" else 0.0
        return self.shift + self.scale * base

    def variance(self) -> float:
        s2 = self.scale**2
        dist = self.distribution
        if dist == "normal":
            return s2 * self.param**2
        if dist == "rademacher":
            return s2
        if dist == "point_mass":
            return 0.0
        if dist == "uniform":
            return s2 * self.param**2 / 3.0
        t = self.param
        return s2 * t / (t - 2.0) if t > 2 else math.inf

    @property
    def sigma(self) -> float:
        return math.sqrt(self.variance())

    def tail_prob(self, x):
        """P(|X| > x), vectorized over ``x`` (requires ``shift == 0``)."""
        if self.shift != 0:
            raise PreconditionError("tail probabilities assume an unshifted field")
        x = np.asarray(x, dtype=float) / abs(self.scale) if self.scale else np.asarray(x, float)
        dist = self.distribution
        if self.scale == 0 or (dist == "point_mass" and self.param == 0):
            return np.where(x < 0, 1.0, 0.0)
        if dist == "normal":
            return special.erfc(np.maximum(x, 0.0) / (self.param * math.sqrt(2.0)))
        if dist == "rademacher":
            return np.where(x < 1.0, 1.0, 0.0)
        if dist == "point_mass":
            return np.where(x < abs(self.param), 1.0, 0.0)
        if dist == "uniform":
            return np.clip(1.0 - x / self.param, 0.0, 1.0)
        with np.errstate(divide="ignore"):
            return np.where(x < 1.0, 1.0, np.maximum(x, 1.0) ** (-self.param))

    def tail_exponent(self) -> float:
        """Polynomial decay rate of P(|X| > x); inf for light or bounded tails."""
        return self.param if self.distribution == "pareto" else math.inf


def _prefix(spec: FieldSpec, d: int, replication=None):
    rep = spec.replication_id if replication is None else replication
    with np.errstate(over="ignore"):
        h = _mix(np.asarray([spec.master_seed], dtype=np.uint64))
        h = _mix(h ^ np.asarray(rep, dtype=np.uint64))
        return _mix(h ^ np.uint64(d))


def _values(spec: FieldSpec, h: np.ndarray) -> np.ndarray:
    dist = spec.distribution
    if dist == "point_mass":
        out = np.full(h.shape, float(spec.param))
    elif dist == "rademacher":
        out = np.where(h >> np.uint64(63), 1.0, -1.0)
    else:
        # 53 high bits -> open interval (0, 1)
        u = ((h >> np.uint64(11)).astype(np.float64) + 0.5) * 2.0**-53
        if dist == "normal":
            out = spec.param * special.ndtri(u)
        elif dist == "uniform":
            out = spec.param * (2.0 * u - 1.0)
        else:
            sign = np.where(h & np.uint64(1), 1.0, -1.0)
            out = sign * u ** (-1.0 / spec.param)
    if spec.scale != 1.0:
        out = out * spec.scale
    if spec.shift != 0.0:
        out = out + spec.shift
    return out


def _hash_points(spec: FieldSpec, coords: np.ndarray, replication=None) -> np.ndarray:
    coords = np.asarray(coords, dtype=np.int64)
    d = coords.shape[-1]
    h = _prefix(spec, d, replication)
    with np.errstate(over="ignore"):
        for k in range(d):
            h = _mix(h ^ coords[..., k].astype(np.uint64))
    return h


def sample(spec: FieldSpec, k) -> float:
    """The variate X_k of the field at lattice point ``k``."""
    return float(sample_points(spec, np.asarray([tuple(k)]))[0])


def sample_points(spec: FieldSpec, coords) -> np.ndarray:
    """Variates at an ``(N, d)`` array of lattice points."""
    coords = np.asarray(coords, dtype=np.int64)
    if coords.ndim != 2:
        raise ValueError("coords must have shape (N, d)")
    return _values(spec, _hash_points(spec, coords))


def sample_replications(spec: FieldSpec, k, replications) -> np.ndarray:
    """X_k for many replication ids at one point (ignores spec.replication_id)."""
    reps = np.asarray(replications, dtype=np.uint64)
    coords = np.asarray(tuple(k), dtype=np.int64)
    h = _prefix(spec, len(coords), reps)
    with np.errstate(over="ignore"):
        for c in coords:
            h = _mix(h ^ np.uint64(c))
    return _values(spec, h)


def sample_box(spec: FieldSpec, corner, widths, replications=None) -> np.ndarray:
    """Variates on the box corner < i <= corner + widths, shaped ``widths``.

    With ``replications`` (an array of ids) a leading axis over those
    replications is added.  The hash is built axis by axis with
    broadcasting, so only the last axis pays the full per-cell cost.
    """
    corner = tuple(int(c) for c in corner)
    widths = tuple(int(w) for w in widths)
    d = len(corner)
    if replications is None:
        h = _prefix(spec, d).reshape(())
    else:
        h = _prefix(spec, d, np.asarray(replications, dtype=np.uint64))
    with np.errstate(over="ignore"):
        for c0, w in zip(corner, widths):
            axis = np.arange(c0 + 1, c0 + w + 1, dtype=np.uint64)
            h = _mix(h[..., np.newaxis] ^ axis)
    return _values(spec, h)


def log_plus(x):
    """max(log x, 1), the logarithm convention used in all moment conditions."""
    with np.errstate(divide="ignore"):
        return np.maximum(np.log(x), 1.0)


def _quad(f, a, b, **kw):
    value, err = integrate.quad(f, a, b, limit=500, epsabs=0.0, epsrel=1e-11, **kw)
    if not math.isfinite(value) or err > 1e-7 * max(abs(value), 1e-300):
        raise IntegrationAccuracyError(f"quadrature on [{a}, {b}] did not converge (err={err})")
    return value


def moment_functional(spec: FieldSpec, p: float, q: float) -> float:
    """E |X|^p (log+ |X|)^q, or ``inf`` when the expectation diverges.

    Divergence is decided from the tail exponent; finite values come from
    closed forms for bounded families and quadrature otherwise.
    """
    if p <= 0:
        raise ValueError("p must be positive")
    if spec.shift != 0:
        raise PreconditionError("moment functional assumes an unshifted field")
    s = abs(spec.scale)
    dist = spec.distribution

    def g(x):
        return x**p * log_plus(x) ** q

    if s == 0:
        return 0.0
    if dist == "point_mass":
        c = abs(spec.param) * s
        return float(g(c)) if c > 0 else 0.0
    if dist == "rademacher":
        return float(g(s))
    if dist == "uniform":
        a = spec.param * s
        if a <= math.e:
            return a**p / (p + 1.0)
        head = math.e ** (p + 1.0) / (p + 1.0)
        return (head + _quad(lambda x: x**p * math.log(x) ** q, math.e, a)) / a
    if dist == "normal":
        sig = spec.param * s
        dens = lambda x: math.exp(-0.5 * (x / sig) ** 2) / (sig * math.sqrt(2 * math.pi))
        inner = _quad(lambda x: x**p * dens(x), 0.0, math.e)
        outer = _quad(lambda x: x**p * math.log(x) ** q * dens(x), math.e, math.inf)
        return 2.0 * (inner + outer)
    # pareto: |X| = s * Y with P(Y > y) = y^-t, y >= 1
    t = spec.param
    if p > t or (p == t and q >= -1):
        return math.inf
    # substitute y = e^u: integrand t s^p e^{(p - t) u} log+(s e^u)^q
    ls = math.log(s)
    f = lambda u: t * s**p * math.exp((p - t) * u) * max(ls + u, 1.0) ** q
    knee = max(1.0 - ls, 0.0)
    head = _quad(f, 0.0, knee) if knee > 0 else 0.0
    return head + _quad(f, knee, math.inf)
