"""Delta-method transforms of normalized statistics.

If a_n (U_n / b_n - mu) has extreme limit points +-scale, then for smooth g
whose first non-vanishing derivative at mu has order m,

    a_n^m (g(U_n / b_n) - g(mu))

has extreme limit points driven by g^(m)(mu) / m! * scale^m.  For even m the
sign is lost and the lower limit is 0.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from numpy.polynomial import polynomial as P

from lslab.errors import DerivativeOrderError

__all__ = [
    "CATALOG",
    "TransformSpec",
    "Trajectory",
    "finite_difference",
    "predicted_limits",
    "transform_trajectory",
]

_MAX_ORDER = 8


def _poly(coeffs):
    c = np.asarray(coeffs, dtype=float)
    return (lambda x: P.polyval(x, c)), (lambda k, mu: float(P.polyval(mu, P.polyder(c, k))))


def _exp_deriv(k, mu):
    return math.exp(mu)


def _log1p_deriv(k, mu):
    return (-1.0) ** (k - 1) * math.factorial(k - 1) / (1.0 + mu) ** k


def _cosh_deriv(k, mu):
    return math.cosh(mu) if k % 2 == 0 else math.sinh(mu)


# name -> (function, k-th derivative at mu)
CATALOG = {
    "identity": _poly([0.0, 1.0]),
    "square": _poly([0.0, 0.0, 1.0]),
    "cube": _poly([0.0, 0.0, 0.0, 1.0]),
    "exp": (np.exp, _exp_deriv),
    "log1p": (np.log1p, _log1p_deriv),
    "cosh-1": ((lambda x: np.cosh(x) - 1.0), _cosh_deriv),
}


def finite_difference(g, mu: float, k: int, h: float = 0.05, levels: int = 3) -> float:
    """k-th derivative of g at mu: central differences refined by Richardson steps."""

    def central(step):
        total = 0.0
        for i in range(k + 1):
            total += (-1) ** i * math.comb(k, i) * float(g(mu + (k / 2 - i) * step))
        return total / step**k

    row = [central(h / 2**j) for j in range(levels)]
    for p in range(1, levels):
        f = 4.0**p
        row = [(f * row[j + 1] - row[j]) / (f - 1.0) for j in range(len(row) - 1)]
    return row[0]


@dataclass(frozen=True)
class TransformSpec:
    """A catalog function g (or a polynomial) expanded at mu.

    ``m`` and ``derivative`` (g^(m)(mu)) are derived analytically and then
    re-checked with finite differences.
    """

    name: str = "identity"
    mu: float = 0.0
    coeffs: tuple[float, ...] | None = None
    m: int = field(init=False)
    derivative: float = field(init=False)

    def __post_init__(self):
        if self.name == "polynomial":
            if not self.coeffs:
                raise ValueError("polynomial transforms need coefficients")
            g, deriv = _poly(self.coeffs)
        elif self.name in CATALOG:
            g, deriv = CATALOG[self.name]
        else:
            raise ValueError(f"unknown transform {self.name!r}")
        if self.name == "log1p" and self.mu <= -1:
            raise ValueError("log1p needs mu > -1")
        for k in range(1, _MAX_ORDER + 1):
            value = deriv(k, self.mu)
            if value != 0.0:
                break
        else:
            raise DerivativeOrderError(f"no non-vanishing derivative up to order {_MAX_ORDER}")
        object.__setattr__(self, "m", k)
        object.__setattr__(self, "derivative", value)
        self.verify()

    def g(self, x):
        fn = _poly(self.coeffs)[0] if self.name == "polynomial" else CATALOG[self.name][0]
        return fn(x)

    def verify(self, rel: float = 1e-6) -> None:
        """Check the derivative order numerically; raise DerivativeOrderError."""
        scale = max(1.0, abs(self.derivative))
        for k in range(1, self.m):
            fd = finite_difference(self.g, self.mu, k)
            if abs(fd) > rel * scale:
                raise DerivativeOrderError(f"derivative of order {k} is {fd:.3g}, expected 0")
        fd = finite_difference(self.g, self.mu, self.m)
        if abs(fd - self.derivative) > rel * scale:
            raise DerivativeOrderError(
                f"order-{self.m} derivative {fd!r} disagrees with {self.derivative!r}"
            )


def predicted_limits(t: TransformSpec, scale: float) -> tuple[float, float]:
    """(limsup, liminf) of the transformed statistic given base limits +-scale."""
    if scale <= 0:
        raise ValueError("scale must be positive")
    if t.m == 1:
        c = scale * abs(t.derivative)
        return c, -c
    c = scale**t.m * t.derivative / math.factorial(t.m)
    if t.m % 2:
        return abs(c), -abs(c)
    return (c, 0.0) if c > 0 else (0.0, c)


@dataclass(frozen=True)
class Trajectory:
    values: np.ndarray
    running_max: np.ndarray
    running_min: np.ndarray


def transform_trajectory(u, t: TransformSpec, a, b) -> Trajectory:
    """a_n^m (g(U_n / b_n) - g(mu)) with running max and min.

    ``a`` is the square-root normalizer, so a_n^m carries the m-th power.
    """
    u, a, b = (np.asarray(v, dtype=float) for v in (u, a, b))
    if (a <= 0).any() or (b <= 0).any():
        raise ValueError("normalizing sequences must be positive")
    vals = a**t.m * (np.asarray(t.g(u / b), dtype=float) - float(t.g(t.mu)))
    if len(vals) == 0:
        return Trajectory(vals, vals, vals)
    return Trajectory(vals, np.maximum.accumulate(vals), np.minimum.accumulate(vals))
