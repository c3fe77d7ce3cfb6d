"""Laplace-Stieltjes transforms and their singular behaviour at ``s = 0``.

For the catalog families the transform has one of two local forms

    phi(s) = alpha(s) s**r log s + beta(s)     (integer r)
    phi(s) = alpha(s) s**r + beta(s)           (non-integer r)

with ``alpha``, ``beta`` analytic.  Principal branches of ``log`` and of
``s**r`` are used throughout, restricted to ``Re s >= 0``.
"""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass, field
from typing import Callable, Sequence

import mpmath as mp
import numpy as np
from scipy import integrate
from scipy.special import gamma

from .distributions import PARETO, Distribution, pmf, tail
from .errors import AccuracyError, AmbiguityError, DomainError, NumericError

POWER_LOG = "power_log"
PURE_POWER = "pure_power"


def _is_int(r: float) -> bool:
    return float(r) == int(r)


@dataclass(frozen=True)
class SingularityForm:
    kind: str
    r: float
    alpha: tuple
    beta: tuple
    residual: float | None = field(default=None, compare=False)
    runner_up: tuple | None = field(default=None, compare=False)

    def __post_init__(self):
        if self.kind not in (POWER_LOG, PURE_POWER):
            raise DomainError(f"unknown singularity kind {self.kind!r}")
        if (self.kind == POWER_LOG) != _is_int(self.r):
            raise DomainError("power_log needs integer r, pure_power non-integer r")
        object.__setattr__(self, "alpha", tuple(float(a) for a in self.alpha))
        object.__setattr__(self, "beta", tuple(float(b) for b in self.beta))
        if not self.alpha or self.alpha[0] == 0:
            raise DomainError("alpha_0 must be nonzero")

    @property
    def order(self) -> int:
        return min(len(self.alpha), len(self.beta))

    def singular(self, s):
        s = np.asarray(s, dtype=complex)
        a = np.polyval(self.alpha[::-1], s)
        base = s ** self.r
        return a * base * np.log(s) if self.kind == POWER_LOG else a * base

    def __call__(self, s):
        s = np.asarray(s, dtype=complex)
        return self.singular(s) + np.polyval(self.beta[::-1], s)

    def to_json(self) -> str:
        return json.dumps({"kind": self.kind, "r": self.r, "alpha": list(self.alpha), "beta": list(self.beta)})

    @classmethod
    def from_json(cls, text: str) -> "SingularityForm":
        d = json.loads(text)
        return cls(d["kind"], d["r"], tuple(d["alpha"]), tuple(d["beta"]))


# ---------------------------------------------------------------------------
# evaluation


def _check_s(s: complex, allow_axis: bool = False):
    s = complex(s)
    if s.real < 0 or (s.real == 0 and not allow_axis) or s == 0:
        raise DomainError("need Re s > 0" + (" (or Re s = 0, s != 0)" if allow_axis else ""))
    return s


def phi_quadrature(dist: Distribution, s: complex, rel_tol: float = 1e-10) -> complex:
    """``int e^{-s x} dF(x)`` by adaptive quadrature or direct summation."""
    s = _check_s(s)
    if not 1e-14 < rel_tol < 1e-2:
        raise DomainError("rel_tol must lie in (1e-14, 1e-2)")
    if dist.kind == PARETO:
        return _pareto_quadrature(dist.r, s, rel_tol)
    return _zeta_series(dist, s, rel_tol)


def _pareto_quadrature(r: float, s: complex, rel_tol: float) -> complex:
    # quad warns when it cannot reach its internal target; the summed error
    # estimate is checked against rel_tol below instead
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        return _pareto_panels(r, s, rel_tol)


def _pareto_panels(r: float, s: complex, rel_tol: float) -> complex:
    sig, tau = s.real, s.imag
    f = lambda x: r * x ** (-r - 1.0) * math.exp(-sig * x)
    total, err = 0.0 + 0.0j, 0.0
    # panels [1, 2), [2, 4), ... until the tail bound e^{-sig T} T^{-r} is negligible
    a = 1.0
    while True:
        b = 2.0 * a
        if tau == 0:
            v, e = integrate.quad(f, a, b, epsabs=0, epsrel=max(rel_tol * 1e-2, 1e-13), limit=200)
            total += v
        else:
            vc, ec = integrate.quad(f, a, b, weight="cos", wvar=tau, epsabs=0, epsrel=max(rel_tol * 1e-2, 1e-13), limit=400)
            vs, es = integrate.quad(f, a, b, weight="sin", wvar=tau, epsabs=0, epsrel=max(rel_tol * 1e-2, 1e-13), limit=400)
            v, e = vc - 1j * vs, ec + es
            total += v
        err += e
        a = b
        bound = math.exp(-sig * a) * a ** -r
        if bound <= 0.1 * rel_tol * abs(total):
            break
        if a > 1e300:
            raise AccuracyError("quadrature range exhausted", achieved=bound)
    if err > rel_tol * abs(total):
        raise AccuracyError(f"quadrature error {err:.2e} above tolerance", achieved=err / abs(total))
    return complex(total)


def _zeta_series(dist: Distribution, s: complex, rel_tol: float, n_max: int = 5 * 10 ** 7) -> complex:
    total = 0.0 + 0.0j
    comp = 0.0 + 0.0j
    chunk = 1 << 16
    start = 0
    while True:
        n = np.arange(start, start + chunk, dtype=float)
        part = np.sum(pmf(dist, n) * np.exp(-s * n))
        # Kahan step keeps the long sum at full precision
        y = part - comp
        t = total + y
        comp = (t - total) - y
        total = t
        start += chunk
        bound = tail(dist, start - 1) * math.exp(-s.real * start)
        if bound <= rel_tol * abs(total):
            return complex(total)
        if start >= n_max:
            raise AccuracyError("series did not reach tolerance", achieved=bound / abs(total))
        chunk = min(chunk * 2, 1 << 22)


def phi_exact(dist: Distribution, s: complex) -> complex:
    """Closed form; valid on ``Re s >= 0`` away from ``s = 0``.

    Pareto: ``r E_{r+1}(s)`` (generalized exponential integral).
    zeta_diff: ``p(z) = (z-1)/z**2 Li_r(z) + 1/z`` at ``z = e^{-s}``.
    """
    s = _check_s(s, allow_axis=True)
    if dist.kind == PARETO:
        return complex(dist.r * mp.expint(dist.r + 1, mp.mpc(s)))
    z = mp.exp(-mp.mpc(s))
    return complex((z - 1) / z ** 2 * mp.polylog(int(dist.r), z) + 1 / z)


def ls_function(dist: Distribution, method: str = "exact") -> Callable[[complex], complex]:
    if method == "exact":
        return lambda s: phi_exact(dist, s)
    if method == "quadrature":
        return lambda s: phi_quadrature(dist, s)
    raise DomainError(f"unknown method {method!r}")


def pgf_to_ls(coeffs: Sequence[float], s: complex, rel_tol: float = 1e-10,
              tail_mass: float | None = None) -> complex:
    """``p(e^{-s}) = sum_n p_n e^{-s n}`` from a finite coefficient list.

    Mass missing beyond the list (``tail_mass``, default ``1 - sum``) bounds
    the truncation error by ``tail_mass * |e^{-s N}|``.
    """
    s = _check_s(s)
    p = np.asarray(coeffs, dtype=float)
    if np.any(p < 0) or p.sum() > 1.0 + 1e-12:
        raise DomainError("coefficients must be nonnegative with sum <= 1")
    N = p.size
    missing = max(0.0, 1.0 - p.sum()) if tail_mass is None else tail_mass
    val = complex(np.sum(p * np.exp(-s * np.arange(N))))
    bound = missing * math.exp(-s.real * N)
    if bound > rel_tol * max(abs(val), 1e-300):
        raise AccuracyError("coefficient list too short for the tolerance", achieved=bound / abs(val))
    return val


# ---------------------------------------------------------------------------
# canonical singular parts of L(t^{-(r+1)} 1{t>=1})


def canonical_coefficient(r: float) -> float:
    """Coefficient ``c`` with ``L(t^{-(r+1)} 1{t>=1})(s) = c s^r [log s] + analytic``."""
    if r <= 0:
        raise DomainError("r must be positive")
    if _is_int(r):
        r = int(r)
        return (-1) ** (r + 1) / math.factorial(r)
    r0 = math.floor(r)
    return (-1) ** (r0 + 1) * math.pi / (gamma(r + 1) * math.sin(math.pi * (r - r0)))


def canonical_power_log(r: int, s):
    if r <= 0 or not _is_int(r):
        raise DomainError("canonical_power_log needs a positive integer r")
    s = np.asarray(s, dtype=complex)
    return canonical_coefficient(r) * s ** int(r) * np.log(s)


def canonical_pure_power(r: float, s):
    if r <= 0 or _is_int(r):
        raise DomainError("canonical_pure_power needs a positive non-integer r")
    s = np.asarray(s, dtype=complex)
    return canonical_coefficient(r) * s ** r


def canonical_analytic_coeffs(r: float, order: int) -> np.ndarray:
    """Taylor coefficients of the analytic part of ``E_{r+1}(s)``."""
    out = np.empty(order)
    for k in range(order):
        if _is_int(r) and k == int(r):
            out[k] = (-1) ** k * float(mp.digamma(k + 1)) / math.factorial(k)
        else:
            out[k] = -((-1) ** k) / (math.factorial(k) * (k - r))
    return out


def exact_form(dist: Distribution, order: int) -> SingularityForm:
    """Series coefficients of the catalog transforms, derived analytically."""
    r = dist.r
    if dist.kind == PARETO:
        kind = POWER_LOG if _is_int(r) else PURE_POWER
        alpha = np.zeros(order)
        alpha[0] = r * canonical_coefficient(r)
        return SingularityForm(kind, r, tuple(alpha), tuple(r * canonical_analytic_coeffs(r, order)))
    r = int(r)
    P = np.polynomial.polynomial
    k = np.arange(order)
    # e^s (e^s - 1)/s
    ratio = (2.0 ** (k + 1) - 1.0) / np.array([math.factorial(j + 1) for j in k])
    alpha = (-1) ** (r + 1) / math.factorial(r - 1) * ratio
    # Li_r(e^{-s}) minus its log term, as a power series in s
    li = np.empty(order)
    for j in k:
        if j == r - 1:
            li[j] = (-1) ** j * float(mp.harmonic(r - 1)) / math.factorial(j)
        else:
            li[j] = float(mp.zeta(r - j)) * (-1) ** j / math.factorial(j)
    em1 = np.array([(-1) ** j / math.factorial(j) for j in k])  # e^{-s}
    em1[0] -= 1.0
    e2 = np.array([2.0 ** j / math.factorial(j) for j in k])
    e1 = np.array([1.0 / math.factorial(j) for j in k])
    beta = P.polymul(P.polymul(em1, e2)[:order], li)[:order] + e1
    return SingularityForm(POWER_LOG, r, tuple(alpha), tuple(beta))


# ---------------------------------------------------------------------------
# fitting


def _design(s: np.ndarray, r: float, n_alpha: int, n_beta: int) -> np.ndarray:
    cols = []
    log = np.log(s)
    for k in range(n_alpha):
        col = s ** (r + k)
        cols.append(col * log if _is_int(r) else col)
    for n in range(n_beta):
        cols.append(s ** n)
    return np.column_stack(cols)


def _lstsq(A: np.ndarray, y: np.ndarray, cond_max: float, r: float):
    norms = np.linalg.norm(A, axis=0)
    An = A / norms
    cond = np.linalg.cond(An)
    if cond > cond_max:
        raise NumericError(f"design matrix condition {cond:.2e} for r={r}")
    coef, *_ = np.linalg.lstsq(An, y, rcond=None)
    coef /= norms
    return coef, float(np.sqrt(np.mean((A @ coef - y) ** 2)))


def _beta_terms(r: float, order: int) -> int:
    # the analytic part must reach past degree floor(r) to separate it from s**r
    return max(order, math.floor(r) + 2)


def _nested(r1: float, r2: float, order: int) -> bool:
    gap = abs(r2 - r1)
    return gap == int(gap) and 0 < gap < order and _is_int(r1) == _is_int(r2)


def _break_nested_tie(tied, s, y, order, cond_max, ratio, floor):
    """Rank tied candidates by a single-singular-term fit, where nested models stop overlapping."""
    single = []
    for f in tied:
        r = f[1]
        res = _lstsq(_design(s, r, 1, _beta_terms(r, order)), y, cond_max, r)[1]
        single.append((max(res, floor), f))
    single.sort(key=lambda p: p[0])
    (best, win), (second, other) = single[0], single[1]
    if second < ratio * best or not all(_nested(win[1], f[1], order) for _, f in single[1:]):
        raise AmbiguityError(
            f"r={win[1]} (residual {win[0]:.2e}) vs r={other[1]} (residual {other[0]:.2e})",
            best=(win[1], win[0]), runner_up=(other[1], other[0]),
        )
    return [win]


def fit_singularity(samples, r_candidates=(0.5, 1, 1.5, 2, 2.5, 3), order: int = 3,
                    cond_max: float = 1e12, ambiguity_ratio: float = 2.0) -> SingularityForm:
    """Least-squares fit of both local forms for each candidate exponent.

    ``samples`` are ``(s, value)`` pairs with real ``s > 0``.  Each candidate
    is fitted with ``order`` terms of ``alpha`` and a polynomial ``beta`` that
    reaches past degree ``floor(r)``; the smallest RMS residual wins.

    When ``r2 - r1`` is a positive integer below ``order`` the ``r1`` model
    contains the leading term of ``r2`` and both can fit equally well.  Such a
    tie is broken by refitting with a single singular term, where the models
    no longer overlap.  Residuals of the winner and the runner-up are kept on
    the returned form.
    """
    data = np.array([(float(np.real(s)), float(np.real(v))) for s, v in samples])
    s, y = data[:, 0], data[:, 1]
    if s.size < 20 or s.max() / s.min() < 10:
        raise DomainError("need >= 20 samples spanning at least one decade")
    if np.any(s <= 0):
        raise DomainError("samples must lie on the positive real axis")
    if order < 1:
        raise DomainError("order must be >= 1")
    if len(set(map(float, r_candidates))) < 2:
        raise DomainError("need at least two distinct candidate exponents")
    fits = []
    for r in r_candidates:
        r = float(r)
        coef, res = _lstsq(_design(s, r, order, _beta_terms(r, order)), y, cond_max, r)
        fits.append((res, r, coef))
    # residuals at rounding level carry no information about the exponent
    floor = 64 * np.finfo(float).eps * np.max(np.abs(y))
    fits = [(max(res, floor), r, coef) for res, r, coef in fits]
    fits.sort(key=lambda f: f[0])
    tied = [f for f in fits if f[0] < ambiguity_ratio * fits[0][0]]
    if len(tied) > 1:
        tied = _break_nested_tie(tied, s, y, order, cond_max, ambiguity_ratio, floor)
    res, r, coef = tied[0]
    res2, r2, _ = next(f for f in fits if f[1] != r)
    n_beta = _beta_terms(r, order)
    if _is_int(r):
        r = int(r)
    kind = POWER_LOG if _is_int(r) else PURE_POWER
    return SingularityForm(kind, r, tuple(coef[:order]), tuple(coef[order:order + n_beta]),
                           residual=res, runner_up=(r2, res2))


def sample_real_axis(phi: Callable[[complex], complex], s_min: float = 1e-4, s_max: float = 1e-2,
                     count: int = 40):
    s = np.geomspace(s_min, s_max, count)
    return [(float(x), complex(phi(x))) for x in s]


def sign_check(form: SingularityForm):
    """Parity rule for ``alpha_0``; returns ``(ok, message)``."""
    a0 = form.alpha[0]
    if form.kind == POWER_LOG:
        parity = int(form.r)
        rule = "r"
    else:
        parity = math.floor(form.r)
        rule = "floor(r)"
    want_positive = parity % 2 == 1
    ok = (a0 > 0) == want_positive
    need = ">0" if want_positive else "<0"
    msg = f"{form.kind} r={form.r}: {rule}={parity} requires alpha_0{need}, got {a0:+.6g}"
    return ok, msg
