"""Heavy-tailed test distributions with closed-form tails.

Two families are provided:

* ``pareto``: ``F(x) = 1 - x**-r`` on ``x >= 1``, density ``r x**-(r+1)``.
* ``zeta_diff``: integer-valued, ``p_n = (n+1)**-r - (n+2)**-r`` for ``n >= 0``,
  so that ``P(X > n) = (n+2)**-r``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError

PARETO = "pareto"
ZETA_DIFF = "zeta_diff"


@dataclass(frozen=True)
class Distribution:
    kind: str
    r: float

    def __post_init__(self):
        if self.kind not in (PARETO, ZETA_DIFF):
            raise DomainError(f"unknown distribution kind {self.kind!r}")
        if not self.r > 0:
            raise DomainError("tail exponent r must be positive")
        if self.kind == ZETA_DIFF and float(self.r) != int(self.r):
            raise DomainError("zeta_diff requires a positive integer r")

    @property
    def support_start(self) -> float:
        return 1.0 if self.kind == PARETO else 0.0

    @property
    def is_discrete(self) -> bool:
        return self.kind == ZETA_DIFF

    @property
    def mean(self) -> float:
        """Expected value; ``inf`` when ``r <= 1``."""
        if self.r <= 1:
            return math.inf
        if self.kind == PARETO:
            return self.r / (self.r - 1.0)
        # sum_n P(X > n) = sum_{m>=2} m**-r
        from scipy.special import zeta

        return float(zeta(self.r) - 1.0)

    def to_json(self) -> str:
        return json.dumps({"kind": self.kind, "r": self.r})

    @classmethod
    def from_dict(cls, d: dict) -> "Distribution":
        try:
            kind, r = d["kind"], d["r"]
        except KeyError as exc:
            raise DomainError(f"distribution spec missing key {exc}") from None
        extra = set(d) - {"kind", "r"}
        if extra:
            raise DomainError(f"unknown distribution keys {sorted(extra)}")
        if kind == ZETA_DIFF:
            r = int(r) if float(r) == int(r) else r
        return cls(kind, r)

    @classmethod
    def from_json(cls, text: str) -> "Distribution":
        return cls.from_dict(json.loads(text))


def pareto(r: float) -> Distribution:
    return Distribution(PARETO, float(r))


def zeta_diff(r: int) -> Distribution:
    return Distribution(ZETA_DIFF, int(r) if float(r) == int(r) else r)


def tail(dist: Distribution, x):
    """Exact ``P(X > x)``; accepts scalars or arrays."""
    xa = np.asarray(x, dtype=float)
    if np.any(xa < 0) or np.any(np.isnan(xa)):
        raise DomainError("tail requires x >= 0")
    r = dist.r
    if dist.kind == PARETO:
        out = np.where(xa >= 1.0, np.maximum(xa, 1.0) ** -r, 1.0)
    else:
        out = (np.floor(xa) + 2.0) ** -r
    return float(out) if np.ndim(out) == 0 else out


def density(dist: Distribution, x):
    """Closed-form density of the continuous family."""
    if dist.kind != PARETO:
        raise DomainError("density is defined for the continuous family; use pmf")
    xa = np.asarray(x, dtype=float)
    if np.any(xa < 1.0):
        raise DomainError("x below support start 1")
    out = dist.r * xa ** -(dist.r + 1.0)
    return float(out) if np.ndim(out) == 0 else out


def pmf(dist: Distribution, n):
    if dist.kind != ZETA_DIFF:
        raise DomainError("pmf is defined for the discrete family; use density")
    na = np.asarray(n)
    if np.any(na < 0) or np.any(na != np.floor(na)):
        raise DomainError("pmf requires a nonnegative integer n")
    na = na.astype(float)
    out = (na + 1.0) ** -dist.r - (na + 2.0) ** -dist.r
    return float(out) if np.ndim(out) == 0 else out


def pmf_array(dist: Distribution, N: int) -> np.ndarray:
    """``p_0 .. p_N``; the missing mass is exactly ``tail(dist, N)``."""
    return pmf(dist, np.arange(N + 1))


def quantile(dist: Distribution, u):
    """Generalized inverse CDF ``inf{x : F(x) >= u}``."""
    ua = np.asarray(u, dtype=float)
    if np.any((ua < 0) | (ua >= 1)):
        raise DomainError("quantile requires u in [0, 1)")
    base = (1.0 - ua) ** (-1.0 / dist.r)
    if dist.kind == PARETO:
        out = base
    else:
        # smallest n with F(n) = 1 - (n+2)**-r >= u; the closed form can be
        # off by one after rounding, so settle it against F itself
        n = np.maximum(np.ceil(base - 2.0), 0.0)
        cdf = lambda m: 1.0 - (m + 2.0) ** -dist.r
        n = np.where(cdf(n) < ua, n + 1.0, n)
        n = np.where((n > 0) & (cdf(n - 1.0) >= ua), n - 1.0, n)
        out = n
    return float(out) if np.ndim(out) == 0 else out


def sample(dist: Distribution, count: int, seed: int) -> np.ndarray:
    if count < 1:
        raise DomainError("count must be >= 1")
    u = np.random.default_rng(seed).random(count)
    return np.asarray(quantile(dist, u), dtype=float).reshape(count)


def empirical_tail(samples, x: float) -> float:
    arr = np.asarray(samples, dtype=float)
    if arr.size == 0:
        raise DomainError("empirical_tail needs at least one sample")
    return float(np.count_nonzero(arr > x)) / arr.size


def tail_table(dist: Distribution, x_max: float, x_min: float = 1.0, per_decade: int = 10) -> np.ndarray:
    """Rows ``(x, P(X > x), local log-log slope)`` on a geometric grid."""
    if not 0 < x_min < x_max:
        raise DomainError("need 0 < x_min < x_max")
    count = max(3, int(round(per_decade * math.log10(x_max / x_min))) + 1)
    x = np.geomspace(x_min, x_max, count)
    t = tail(dist, x)
    slope = np.gradient(np.log(t), np.log(x))
    return np.c_[x, t, slope]
