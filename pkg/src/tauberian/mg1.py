"""Stationary distribution of the M/G/1-type chain with heavy-tailed jumps from level 0.

Row 0 of the transition matrix is ``b``; row ``i >= 1`` is ``a`` shifted to
start at column ``i - 1``.  The stationary pgf is

    pi(z) = pi_0 (z B(z) - A(z)) / (z - A(z)),

and ``pi(1) = 1`` forces ``pi_0 = (1 - abar) / (1 + bbar - abar)`` with
``abar = A'(1)``, ``bbar = B'(1)``.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field

import mpmath as mp
import numpy as np
import scipy.sparse
import scipy.sparse.linalg

from .distributions import ZETA_DIFF, Distribution, pmf_array, tail
from .errors import AccuracyError, DomainError, InstabilityError, NumericError, SingularityError
from .tailbound import decay_rate_estimate

SERIES_TOL = 1e-12
CLIP_TOL = 1e-10


@dataclass(frozen=True)
class Mg1Model:
    """``a`` is an explicit (light) coefficient list; ``b`` a list or a lattice member.

    When ``b_dist`` is set, ``b_coeffs`` is a finite prefix and tails and the
    pgf of ``b`` come from the closed forms of the member.
    """

    a_coeffs: np.ndarray
    b_coeffs: np.ndarray
    pi0: float | None = None
    b_dist: Distribution | None = None
    mean_a: float = field(init=False)
    mean_b: float = field(init=False)

    def __post_init__(self):
        a = np.asarray(self.a_coeffs, dtype=float)
        b = np.asarray(self.b_coeffs, dtype=float)
        for name, c in (("a", a), ("b", b)):
            if c.ndim != 1 or c.size == 0 or np.any(c < 0):
                raise DomainError(f"{name} must be a nonempty nonnegative sequence")
        if abs(a.sum() - 1.0) > SERIES_TOL * 10:
            raise DomainError(f"a sums to {a.sum():.15g}, not 1")
        if self.b_dist is None and abs(b.sum() - 1.0) > SERIES_TOL * 10:
            raise DomainError(f"b sums to {b.sum():.15g}, not 1")
        if self.b_dist is not None:
            if self.b_dist.kind != ZETA_DIFF:
                raise DomainError("b_dist must be a lattice member")
            if not np.allclose(b, pmf_array(self.b_dist, b.size - 1), rtol=1e-14, atol=0):
                raise DomainError("b_coeffs do not match b_dist")
        object.__setattr__(self, "a_coeffs", a)
        object.__setattr__(self, "b_coeffs", b)
        object.__setattr__(self, "mean_a", float(np.arange(a.size) @ a))
        mb = self.b_dist.mean if self.b_dist is not None else float(np.arange(b.size) @ b)
        object.__setattr__(self, "mean_b", mb)
        if self.pi0 is not None and not 0 < self.pi0 <= 1:
            raise DomainError("pi0 must lie in (0, 1]")

    @classmethod
    def build(cls, a, b, normalize: bool = True, b_terms: int = 10 ** 5) -> "Mg1Model":
        """``b`` may be a coefficient list or a lattice ``Distribution``."""
        if isinstance(b, Distribution):
            m = cls(np.asarray(a, dtype=float), pmf_array(b, b_terms), None, b)
        else:
            m = cls(np.asarray(a, dtype=float), np.asarray(b, dtype=float))
        return m.with_pi0(normalize_pi0(m)) if normalize else m

    def with_pi0(self, pi0: float) -> "Mg1Model":
        return Mg1Model(self.a_coeffs, self.b_coeffs, pi0, self.b_dist)

    def b_tail_geq(self, n: np.ndarray) -> np.ndarray:
        """``P(B >= n)`` for integer ``n >= 0``."""
        n = np.asarray(n, dtype=float)
        if self.b_dist is not None:
            return np.where(n <= 0, 1.0, tail(self.b_dist, np.maximum(n - 1.0, 0.0)))
        b = self.b_coeffs
        suffix = np.concatenate([np.cumsum(b[::-1])[::-1], [0.0]])
        return suffix[np.minimum(n.astype(int), b.size)]

    def a_tail_geq(self, n: np.ndarray) -> np.ndarray:
        a = self.a_coeffs
        suffix = np.concatenate([np.cumsum(a[::-1])[::-1], [0.0]])
        return suffix[np.minimum(np.asarray(n, dtype=int), a.size)]


def geometric(mean: float, tol: float = SERIES_TOL) -> np.ndarray:
    """Geometric law on ``{0, 1, ...}`` with the given mean, truncated at tail mass ``tol``."""
    if mean <= 0:
        raise DomainError("mean must be positive")
    q = mean / (1.0 + mean)
    n = int(math.ceil(math.log(tol) / math.log(q)))
    a = (1 - q) * q ** np.arange(n)
    a[-1] += 1.0 - a.sum()  # fold the neglected mass into the last cell
    return a


def normalize_pi0(model: Mg1Model) -> float:
    """``pi_0 = (1 - abar) / (1 + bbar - abar)`` from ``pi(1) = 1``."""
    abar, bbar = model.mean_a, model.mean_b
    if abar >= 1:
        raise InstabilityError(f"load abar = {abar:.6g} >= 1 (formula limit would give "
                               f"pi_0 = {(1 - abar) / (1 + bbar - abar):.6g})")
    if not math.isfinite(bbar):
        raise DomainError("b has infinite mean")
    return (1.0 - abar) / (1.0 + bbar - abar)


def _series(c: np.ndarray, z: complex, mass_left: float) -> complex:
    if mass_left * abs(z) ** c.size > SERIES_TOL:
        raise AccuracyError("coefficient list too short at this |z|", achieved=mass_left * abs(z) ** c.size)
    return complex(np.polynomial.polynomial.polyval(z, c))


def pgf_b(model: Mg1Model, z: complex) -> complex:
    if model.b_dist is not None and z != 0:
        zz = mp.mpc(z)
        return complex((zz - 1) / zz ** 2 * mp.polylog(int(model.b_dist.r), zz) + 1 / zz)
    rest = 0.0 if model.b_dist is None else float(tail(model.b_dist, model.b_coeffs.size - 1))
    return _series(model.b_coeffs, z, rest)


def pk_pgf(model: Mg1Model, z: complex) -> complex:
    z = complex(z)
    if model.pi0 is None:
        raise DomainError("model is not normalized")
    if abs(z) >= 1:
        raise DomainError("need |z| < 1")
    A = _series(model.a_coeffs, z, 0.0)
    den = z - A
    if abs(den) < 1e-12:
        raise SingularityError(f"z - A(z) vanishes at z = {z}")
    return model.pi0 * (z * pgf_b(model, z) - A) / den


def pi_coefficients(model: Mg1Model, N: int) -> np.ndarray:
    """``pi_0 .. pi_N`` by series division of ``pi(z)``.

    Dividing numerator and denominator by ``z - 1`` turns the division into

        a_0 pi_n = pi_0 P(B >= n) + sum_{k=1}^{n-1} P(A >= k+1) pi_{n-k},

    a triangular recursion with nonnegative terms only.
    """
    if model.pi0 is None:
        raise DomainError("model is not normalized")
    if not 1 <= N <= 10 ** 6:
        raise DomainError("N must lie in [1, 1e6]")
    a0 = model.a_coeffs[0]
    if a0 == 0:
        raise DomainError("a_0 = 0: the chain never moves down")
    n = np.arange(N + 1)
    bt = model.b_tail_geq(n)
    w = model.a_tail_geq(n + 1)  # w[k] = P(A >= k+1)
    pi = np.zeros(N + 1)
    pi[0] = model.pi0
    for m in range(1, N + 1):
        conv = np.dot(w[m - 1:0:-1], pi[1:m]) if m > 1 else 0.0
        pi[m] = (model.pi0 * bt[m] + conv) / a0
    if np.any(pi < -CLIP_TOL):
        raise NumericError("negative stationary coefficient")
    pi = np.maximum(pi, 0.0)
    if pi.sum() > 1 + 1e-9:
        raise NumericError(f"coefficients sum to {pi.sum():.12g} > 1")
    return pi


def transition_block(model: Mg1Model, N: int) -> scipy.sparse.csr_matrix:
    """Northwest ``(N+1) x (N+1)`` corner of the transition matrix (sparse)."""
    rows, cols, vals = [], [], []
    k = min(N + 1, model.b_coeffs.size)
    rows.append(np.zeros(k, dtype=int))
    cols.append(np.arange(k))
    vals.append(model.b_coeffs[:k])
    a = model.a_coeffs
    for i in range(1, N + 1):
        k = min(a.size, N + 2 - i)
        rows.append(np.full(k, i))
        cols.append(np.arange(i - 1, i - 1 + k))
        vals.append(a[:k])
    r, c, v = (np.concatenate(x) for x in (rows, cols, vals))
    return scipy.sparse.csr_matrix((v, (r, c)), shape=(N + 1, N + 1))


def chain_oracle(model: Mg1Model, N: int) -> np.ndarray:
    """Stationary vector of the truncated chain, renormalized to sum 1.

    Levels only move down by one, so the balance equations of columns
    ``0 .. N-1`` involve levels ``<= N`` alone; together with the
    normalization they fix ``pi_0 .. pi_N`` up to the mass beyond ``N``.
    """
    if not 1 <= N <= 10 ** 4:
        raise DomainError("N must lie in [1, 1e4]")
    P = transition_block(model, N)
    M = (P - scipy.sparse.identity(N + 1)).T.tocsr()[:N]
    M = scipy.sparse.vstack([M, np.ones((1, N + 1))]).tocsc()
    rhs = np.zeros(N + 1)
    rhs[-1] = 1.0
    with np.errstate(all="ignore"):
        pi = scipy.sparse.linalg.spsolve(M, rhs)
    if not np.all(np.isfinite(pi)):
        raise NumericError("truncated chain is singular")
    return pi


@dataclass
class Mg1Report:
    eta_pi: float
    eta_b: float
    verdict: bool
    pi0: float
    eta_pi_pmf: float
    transfer_verdict: bool
    pi: list

    def to_json(self) -> str:
        return json.dumps({"eta_pi": self.eta_pi, "eta_b": self.eta_b, "pi0": self.pi0,
                           "verdict": self.verdict, "eta_pi_pmf": self.eta_pi_pmf,
                           "transfer_verdict": self.transfer_verdict})

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["n", "pi_n"])
        for k, v in enumerate(self.pi):
            w.writerow([k, repr(float(v))])
        return buf.getvalue()


def mg1_tail_report(model: Mg1Model, N: int, tol: float = 0.15) -> Mg1Report:
    """Decay rates of ``P(pi > n)`` and ``P(B > n)`` over the top decade below ``N``.

    ``verdict`` compares the two tail rates directly.  The pgf has a pole
    ``1/(z - A(z))`` at ``z = 1`` that lowers the order of the singularity
    of ``B`` by one, so ``transfer_verdict`` checks ``eta_pi = eta_b + 1``;
    ``eta_pi_pmf`` is the rate of ``pi_n`` itself.
    """
    if model.b_dist is None or model.b_dist.r < 2:
        raise DomainError("needs a lattice b with r >= 2")
    pi = pi_coefficients(model, N)
    # P(pi > n): suffix sums keep tiny tail values accurate
    suffix = np.cumsum(pi[::-1])[::-1]
    mass = 1.0 - pi.sum()
    n = np.unique(np.geomspace(max(2, N // 1000), N // 2, 40).astype(int))
    tail_pi = suffix[n + 1] + mass
    eta_pi = decay_rate_estimate(np.c_[n, tail_pi]).eta
    eta_b = decay_rate_estimate(np.c_[n, tail(model.b_dist, n.astype(float))]).eta
    eta_pmf = decay_rate_estimate(np.c_[n, pi[n]]).eta
    return Mg1Report(eta_pi, eta_b, abs(eta_pi - eta_b) <= tol, float(model.pi0), eta_pmf,
                     abs(eta_pi - (eta_b + 1)) <= tol, pi.tolist())
