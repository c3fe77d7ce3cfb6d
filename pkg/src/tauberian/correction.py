"""Correction functions ``g*`` and ``h*`` that absorb the leading terms of ``phi``.

``g*(t) = sum_k g_k t^{-(r+k+1)}`` on ``t >= 1`` has transform
``G*(s) = sum_k g_k E_{r+k+1}(s)``; the ``g_k`` are chosen so that its singular
part reproduces ``alpha_0 .. alpha_{L-1}``.  ``h*(t) = sum_k d_k k e^{-kt}`` has
transform ``H*(s) = sum_k d_k k/(s+k)`` and fixes the first ``L`` Taylor
coefficients of the analytic part.  What is left over is

    xi(s) = phi(s) - G*(s) - H*(s) = O(s^L |log s|)      as s -> 0.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Callable, Sequence

import mpmath as mp
import numpy as np
import scipy.linalg

from .errors import AccuracyError, DomainError, InvariantError, NumericError
from .ls_transform import POWER_LOG, PURE_POWER, SingularityForm, canonical_coefficient

L_CAP = 6
FIT_WINDOW = (1e-3, 1e-1)
SIGMA_SCHEDULE = (1e-4, 5e-5, 2.5e-5)


@dataclass(frozen=True)
class CorrectionPair:
    g: tuple
    d: tuple
    r: float
    kind: str
    tilde_beta: tuple

    def __post_init__(self):
        for name in ("g", "d", "tilde_beta"):
            object.__setattr__(self, name, tuple(float(v) for v in getattr(self, name)))
        if self.kind not in (POWER_LOG, PURE_POWER):
            raise DomainError(f"unknown singularity kind {self.kind!r}")
        if not len(self.g) == len(self.d) == len(self.tilde_beta) >= 1:
            raise InvariantError("g, d and tilde_beta must all have length L >= 1")
        if self.g[0] <= 0:
            raise InvariantError(f"g_0 = {self.g[0]:.6g} must be positive")

    @property
    def L(self) -> int:
        return len(self.g)

    def to_json(self) -> str:
        return json.dumps({"r": self.r, "kind": self.kind, "g": list(self.g), "d": list(self.d),
                           "tilde_beta": list(self.tilde_beta)})

    @classmethod
    def from_json(cls, text: str) -> "CorrectionPair":
        o = json.loads(text)
        return cls(tuple(o["g"]), tuple(o["d"]), o["r"], o["kind"], tuple(o["tilde_beta"]))


def default_L(r: float, odd: bool = False, cap: int = L_CAP) -> int:
    """``max(ceil(r), 2)``, bumped to the next odd integer when ``odd``."""
    L = max(math.ceil(r), 2)
    if odd and L % 2 == 0:
        L += 1
    if L > cap:
        raise DomainError(f"L = {L} exceeds the cap {cap}")
    return L


def g_coefficients(form: SingularityForm, L: int) -> np.ndarray:
    if L < 1 or len(form.alpha) < L:
        raise DomainError(f"need 1 <= L <= {len(form.alpha)} alpha coefficients")
    alpha = np.asarray(form.alpha[:L])
    g = np.array([alpha[k] / canonical_coefficient(form.r + k) for k in range(L)])
    if g[0] <= 0:
        raise InvariantError(f"g_0 = {g[0]:.6g} <= 0; alpha_0 has the wrong sign for r={form.r}")
    return g


def g_star(pair: CorrectionPair, t):
    ta = np.asarray(t, dtype=float)
    safe = np.maximum(ta, 1.0)
    total = sum(gk * safe ** -(pair.r + k + 1.0) for k, gk in enumerate(pair.g))
    out = np.where(ta >= 1.0, total, 0.0)
    return float(out) if np.ndim(out) == 0 else out


def vandermonde(L: int) -> np.ndarray:
    """Row ``k`` (``k = 1..L``) holds the powers ``(-1/k)^n``, ``n = 0..L-1``."""
    if L < 1:
        raise DomainError("L must be >= 1")
    x = -1.0 / np.arange(1, L + 1)
    return np.vander(x, L, increasing=True)


def solve_h_coeffs(beta: Sequence[float], tilde_beta: Sequence[float]) -> np.ndarray:
    """``d`` with ``sum_k d_k (-1/k)^n = beta_n - tilde_beta_n`` for ``n < L``."""
    rhs = np.asarray(beta, dtype=float) - np.asarray(tilde_beta, dtype=float)
    if rhs.ndim != 1 or len(beta) != len(tilde_beta):
        raise DomainError("beta and tilde_beta must have equal length")
    VT = vandermonde(rhs.size).T
    try:
        d = scipy.linalg.solve(VT, rhs)  # LU with partial pivoting
    except (scipy.linalg.LinAlgError, ValueError) as exc:
        raise NumericError(f"Vandermonde solve failed: {exc}") from None
    resid = np.max(np.abs(VT @ d - rhs)) if rhs.size else 0.0
    if not np.isfinite(resid) or resid > 1e-10:
        raise NumericError(f"Vandermonde residual {resid:.2e} above 1e-10")
    return d


def h_star(d: Sequence[float], t):
    ta = np.asarray(t, dtype=float)
    if np.any(ta < 0):
        raise DomainError("h_star requires t >= 0")
    out = sum(dk * k * np.exp(-k * ta) for k, dk in enumerate(d, start=1)) + 0.0 * ta
    return float(out) if np.ndim(out) == 0 else out


def H_star(d: Sequence[float], s):
    s = np.asarray(s, dtype=complex)
    out = sum(dk * k / (s + k) for k, dk in enumerate(d, start=1)) + 0.0 * s
    return complex(out) if np.ndim(out) == 0 else out


def G_star(g: Sequence[float], r: float, s) -> complex:
    """``sum_k g_k E_{r+k+1}(s)``; valid on ``Re s >= 0``, ``s != 0``."""
    z = mp.mpc(complex(s))
    return complex(sum(gk * mp.expint(r + k + 1, z) for k, gk in enumerate(g)))


def G_star_singular(g: Sequence[float], r: float, s):
    s = np.asarray(s, dtype=complex)
    log = np.log(s) if float(r) == int(r) else 1.0
    return sum(gk * canonical_coefficient(r + k) * s ** (r + k) * log for k, gk in enumerate(g))


def fit_remainder(g: Sequence[float], r: float, degree: int = 10, tol: float = 1e-6) -> np.ndarray:
    """Power-series coefficients of ``G*`` minus its singular part.

    The remainder is entire, so a polynomial of moderate ``degree`` fitted on
    ``s`` in ``[1e-3, 1e-1]`` reproduces it to rounding level.
    """
    s = np.geomspace(*FIT_WINDOW, 60)
    rem = np.array([G_star(g, r, x).real for x in s]) - G_star_singular(g, r, s).real
    x = s / FIT_WINDOW[1]  # scaled abscissa keeps the Vandermonde system tame
    coef = np.polynomial.polynomial.polyfit(x, rem, degree)
    resid = np.max(np.abs(np.polynomial.polynomial.polyval(x, coef) - rem))
    if resid > tol:
        raise AccuracyError(f"remainder fit residual {resid:.2e} above {tol:.0e}", achieved=resid)
    return coef / FIT_WINDOW[1] ** np.arange(degree + 1)


def tilde_beta_coefficients(form: SingularityForm, g: Sequence[float], L: int,
                            degree: int = 10, tol: float = 1e-6) -> np.ndarray:
    """First ``L`` Taylor coefficients of the analytic part of ``G*``."""
    if len(g) != L:
        raise DomainError("g must have L entries")
    return fit_remainder(g, form.r, max(degree, L - 1), tol)[:L]


def build_correction(form: SingularityForm, L: int | None = None, odd: bool = False) -> CorrectionPair:
    if L is None:
        L = default_L(form.r, odd=odd)
    if L > L_CAP:
        raise DomainError(f"L = {L} exceeds the cap {L_CAP}")
    if len(form.beta) < L:
        raise DomainError(f"form carries {len(form.beta)} beta coefficients, need {L}")
    g = g_coefficients(form, L)
    tb = tilde_beta_coefficients(form, g, L)
    d = solve_h_coeffs(form.beta[:L], tb)
    return CorrectionPair(tuple(g), tuple(d), form.r, form.kind, tuple(tb))


def phi_star(pair: CorrectionPair, s) -> complex:
    return G_star(pair.g, pair.r, s) + H_star(pair.d, s)


def xi(phi: Callable[[complex], complex], pair: CorrectionPair, s, schedule=SIGMA_SCHEDULE) -> complex:
    """``phi(s) - G*(s) - H*(s)``.

    On the imaginary axis the value is the limit from the right, taken by
    Richardson extrapolation over ``Re s`` in ``schedule`` (each step halves
    ``Re s``), so ``phi`` only needs to be defined for ``Re s > 0``.
    """
    s = complex(s)
    if s.real < 0:
        raise DomainError("xi is only continuous on Re s >= 0")
    if s == 0:
        return 0j
    if s.real > 0:
        return complex(phi(s)) - phi_star(pair, s)
    vals = [complex(phi(complex(sig, s.imag))) - phi_star(pair, complex(sig, s.imag)) for sig in schedule]
    # Neville table for a value linear-then-quadratic in sigma
    sig = np.asarray(schedule, dtype=float)
    table = list(vals)
    for level in range(1, len(table)):
        for i in range(len(table) - level):
            a, b = sig[i], sig[i + level]
            table[i] = (b * table[i] - a * table[i + 1]) / (b - a)
    return table[0]


def positivity_threshold(pair: CorrectionPair, t_max: float = 1e4, count: int = 200_000) -> float:
    """Smallest grid point ``T_0`` after which ``g* + h*`` stays positive up to ``t_max``."""
    t = np.geomspace(1.0, t_max, count)
    f = g_star(pair, t) + h_star(pair.d, t)
    bad = np.nonzero(f <= 0)[0]
    if bad.size == 0:
        return 1.0
    if bad[-1] == t.size - 1:
        raise InvariantError("g* + h* is not positive at the end of the scan")
    return float(t[bad[-1] + 1])
