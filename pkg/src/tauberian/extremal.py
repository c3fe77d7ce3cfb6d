"""Majorants and minorants of the truncated exponential and their transforms.

Time domain
-----------
``E_w(t) = exp(-w t)`` for ``t >= 0`` and 0 otherwise is sandwiched by

    M_w(t) = (sin(pi t)/pi)**2 * Q_w(t)
    m_w(t) = M_w(t) - sinc(t)**2

with ``Q_w(t) = sum_{n>=0} e^{-nw}/(t-n)**2 - w sum_{n>=1} e^{-nw} (1/(t-n) - 1/t)``.
Both are entire of exponential type ``2 pi``; rescaling ``t -> delta t / 2 pi``
with ``w = 2 pi sigma / delta`` gives type ``delta`` and ``L``-th powers give
type ``L delta``.

``w = 0`` is allowed and gives the pointwise limit, a majorant/minorant pair
of the unit step.

Frequency domain
----------------
Fourier transforms use ``F f(tau) = int f(t) exp(-i tau t) dt``.  The base
transforms are closed form; powers are obtained by convolving the per-factor
transforms on a uniform grid.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from math import comb

import numpy as np
from scipy.signal import fftconvolve
from scipy.special import bernoulli

from .errors import AccuracyError, DomainError

TWO_PI = 2.0 * math.pi

# Euler-Maclaurin correction order and the distance from t beyond which the
# Q-series summand is smooth enough for it.
_EM_ORDER = 6
_EM_GAP = 30
_B2K = [float(b) for b in bernoulli(2 * _EM_ORDER)[2::2]]
_DIRECT_OMEGA = 0.5


@dataclass(frozen=True)
class ExtremalSpec:
    L: int
    sigma: float
    delta: float
    omega: float = field(init=False)

    def __post_init__(self):
        if int(self.L) != self.L or self.L < 1:
            raise DomainError("L must be a positive integer")
        if self.sigma < 0 or self.delta <= 0:
            raise DomainError("need sigma >= 0 and delta > 0")
        object.__setattr__(self, "omega", TWO_PI * self.sigma / self.delta)

    def scale(self, t):
        return self.delta * np.asarray(t, dtype=float) / TWO_PI


@dataclass(frozen=True)
class GridFunction:
    """Uniform samples ``values[j]`` at ``start + j * step``."""

    start: float
    step: float
    values: np.ndarray

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=complex)
        if self.step <= 0 or vals.ndim != 1 or vals.size < 2:
            raise DomainError("GridFunction needs step > 0 and at least 2 samples")
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)

    @property
    def points(self) -> np.ndarray:
        return self.start + self.step * np.arange(self.values.size)

    def __call__(self, tau):
        """Linear interpolation, zero outside the grid."""
        tau = np.asarray(tau, dtype=float)
        pts = self.points
        re = np.interp(tau, pts, self.values.real, left=0.0, right=0.0)
        im = np.interp(tau, pts, self.values.imag, left=0.0, right=0.0)
        return re + 1j * im

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write(f"# start={self.start!r} step={self.step!r} n={self.values.size}\n")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["t", "re", "im"])
        for t, v in zip(self.points, self.values):
            w.writerow([repr(float(t)), repr(float(v.real)), repr(float(v.imag))])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str) -> "GridFunction":
        lines = text.splitlines()
        meta = dict(kv.split("=") for kv in lines[0].lstrip("# ").split())
        rows = list(csv.reader(lines[2:]))
        vals = np.array([float(a) + 1j * float(b) for _, a, b in rows])
        if len(vals) != int(meta["n"]):
            raise DomainError("CSV row count does not match header")
        return cls(float(meta["start"]), float(meta["step"]), vals)


# ---------------------------------------------------------------------------
# time domain


def E_omega(omega: float, t):
    t = np.asarray(t, dtype=float)
    out = np.where(t >= 0, np.exp(-omega * np.maximum(t, 0.0)), 0.0)
    return float(out) if out.ndim == 0 else out


def _geom_norm(omega: float) -> float:
    """``omega / (1 - exp(-omega))``, equal to 1 at ``omega = 0``."""
    return 1.0 if omega == 0 else omega / -math.expm1(-omega)


def _h_derivative(m: int, n, t, omega: float):
    """m-th derivative in n of ``exp(-n omega) / (n - t)``."""
    d = n - t
    acc = np.zeros_like(d)
    for j in range(m + 1):
        acc = acc + comb(m, j) * (-omega) ** (m - j) * (-1) ** j * math.factorial(j) * d ** (-1 - j)
    return np.exp(-n * omega) * acc


def _em_segment(a, b, t, omega: float):
    """Euler-Maclaurin value of ``sum_{n=a}^{b} f(n)`` with ``f = -h'``.

    ``b`` may be ``inf``.  Requires every n in ``[a, b]`` to be at least
    ``_EM_GAP`` away from ``t``.
    """
    fin = np.isfinite(b)
    bb = np.where(fin, b, t + 1e9)
    h_a = _h_derivative(0, a, t, omega)
    h_b = np.where(fin, _h_derivative(0, bb, t, omega), 0.0)
    f_a = -_h_derivative(1, a, t, omega)
    f_b = np.where(fin, -_h_derivative(1, bb, t, omega), 0.0)
    total = (h_a - h_b) + 0.5 * (f_a + f_b)
    for k in range(1, _EM_ORDER + 1):
        coef = _B2K[k - 1] / math.factorial(2 * k)
        da = -_h_derivative(2 * k, a, t, omega)
        db = np.where(fin, -_h_derivative(2 * k, bb, t, omega), 0.0)
        total = total + coef * (db - da)
    return total


def majorant1(omega: float, t):
    """``M_w(t)``; ``omega = 0`` gives the step-function limit."""
    if omega < 0:
        raise DomainError("omega must be >= 0")
    t = np.asarray(t, dtype=float)
    scalar = t.ndim == 0
    t = np.atleast_1d(t)
    s = np.sin(math.pi * t)
    s2 = s * s / math.pi ** 2
    out = s * np.sinc(t) / math.pi * _geom_norm(omega)

    if omega > _DIRECT_OMEGA:
        n_max = int(math.ceil(40.0 / omega)) + 1
        for n in range(n_max + 1):
            d = t - n
            out = out + math.exp(-n * omega) * (
                np.sinc(d) ** 2 - omega / math.pi * np.sin(math.pi * d) * np.sinc(d)
            )
        return float(out[0]) if scalar else out

    ft = np.floor(t)
    # terms near t, summed with the removable singularity resolved by sinc
    for j in range(-_EM_GAP, _EM_GAP + 2):
        n = ft + j
        ok = n >= 0
        d = t - n
        term = np.exp(-np.where(ok, n, 0.0) * omega) * (
            np.sinc(d) ** 2 - omega / math.pi * np.sin(math.pi * d) * np.sinc(d)
        )
        out = out + np.where(ok, term, 0.0)
    upper_start = np.maximum(0.0, ft + _EM_GAP + 2)
    q = _em_segment(upper_start, np.full_like(t, np.inf), t, omega)
    lower_end = ft - _EM_GAP - 1
    has_lower = lower_end >= 0
    if np.any(has_lower):
        low = _em_segment(np.zeros_like(t), np.where(has_lower, lower_end, 0.0), t + np.where(has_lower, 0.0, -1e6), omega)
        q = q + np.where(has_lower, low, 0.0)
    out = out + s2 * q
    return float(out[0]) if scalar else out


def majorant1_series(omega: float, t, abs_tol: float = 1e-12, n_max: int = 10 ** 6):
    """Plain truncated series for ``M_w``; slow reference path.

    Truncation uses the geometric bound ``e^{-N w} / (1 - e^{-w})`` on the
    neglected weights.
    """
    if omega <= 0:
        raise DomainError("series path requires omega > 0")
    tail_w = lambda N: math.exp(-N * omega) / -math.expm1(-omega)
    N = int(math.ceil(max(0.0, -math.log(abs_tol * -math.expm1(-omega)) / omega)))
    if N > n_max or tail_w(N) > abs_tol:
        raise AccuracyError(f"need {N} terms, more than n_max={n_max}", achieved=tail_w(min(N, n_max)))
    t = np.atleast_1d(np.asarray(t, dtype=float))
    out = np.sin(math.pi * t) * np.sinc(t) / math.pi * _geom_norm(omega)
    for n in range(N + 1):
        d = t - n
        out = out + math.exp(-n * omega) * (
            np.sinc(d) ** 2 - omega / math.pi * np.sin(math.pi * d) * np.sinc(d)
        )
    return out if out.size > 1 else float(out[0])


def minorant1(omega: float, t):
    t = np.asarray(t, dtype=float)
    return majorant1(omega, t) - np.sinc(t) ** 2


def majorantL(spec: ExtremalSpec, t):
    return majorant1(spec.omega, spec.scale(t)) ** spec.L


def minorantL(spec: ExtremalSpec, t):
    if spec.L % 2 == 0:
        raise DomainError("minorant powers need odd L")
    return minorant1(spec.omega, spec.scale(t)) ** spec.L


# ---------------------------------------------------------------------------
# frequency domain


def hat_q1(tau):
    """Transform of ``sinc(t)**2``: the triangle ``1 - |tau|/2pi`` on ``[-2pi, 2pi)``."""
    tau = np.asarray(tau, dtype=float)
    out = np.where((tau >= -TWO_PI) & (tau < TWO_PI), 1.0 - np.abs(tau) / TWO_PI, 0.0)
    return float(out) if out.ndim == 0 else out


def hat_q2(tau):
    """Transform of ``sin(pi t)**2 / (pi t)``: ``i/2`` on ``[-2pi, 0)``, ``-i/2`` on ``[0, 2pi)``."""
    tau = np.asarray(tau, dtype=float)
    out = np.where((tau >= -TWO_PI) & (tau < 0), 0.5j, 0j)
    out = np.where((tau >= 0) & (tau < TWO_PI), -0.5j, out)
    return complex(out) if out.ndim == 0 else out


def _geo(omega, tau):
    return 1.0 / -np.expm1(-(omega + 1j * np.asarray(tau, dtype=float)))


def hat_M1(omega: float, tau):
    if omega <= 0:
        raise DomainError("omega must be positive")
    tau = np.asarray(tau, dtype=float)
    g = _geo(omega, tau)
    out = g * hat_q1(tau) - omega / math.pi * (g - _geo(omega, 0.0)) * hat_q2(tau)
    return complex(out) if out.ndim == 0 else out


def hat_m1(omega: float, tau):
    if omega <= 0:
        raise DomainError("omega must be positive")
    tau = np.asarray(tau, dtype=float)
    g = _geo(omega, tau)
    out = (g - 1.0) * hat_q1(tau) - omega / math.pi * (g - _geo(omega, 0.0)) * hat_q2(tau)
    return complex(out) if out.ndim == 0 else out


def _base_grid(n: int):
    """Nodes ``k * 2pi/n`` on ``[-2pi, 2pi]``; jumps sit on nodes."""
    k = np.arange(-n, n + 1)
    return k * (TWO_PI / n), TWO_PI / n



def _factor_grids(omega: float, n: int, which: str):
    """Per-factor transforms ``A`` (modulated part) and ``B`` (constant part).

    ``M_w = sum_n e^{-nw} u_w(t - n) + c v_w(t)`` so its transform is
    ``A + B`` with ``A = u_hat * geo`` and ``B = c * v_hat``.  For the minorant
    the ``n = 0`` term is removed.
    """
    tau, h = _base_grid(n)
    q1 = np.where(np.abs(tau) <= TWO_PI, 1.0 - np.abs(tau) / TWO_PI, 0.0)
    q2 = np.where(tau < 0, 0.5j, -0.5j)
    q2[n] = 0.0  # jump at 0: mean of +-i/2
    q2[0] *= 0.5
    q2[-1] *= 0.5
    u = q1 - omega / math.pi * q2
    v = omega / math.pi * q2
    g = _geo(omega, tau)
    c = 1.0 / -math.expm1(-omega)
    if which == "majorant":
        return u * g, c * v, h
    if which == "minorant":
        return u * (g - 1.0), (c - 1.0) * v, h
    raise DomainError("which must be 'majorant' or 'minorant'")


def _convolve(a: np.ndarray, b: np.ndarray, h: float, fast: bool = True) -> np.ndarray:
    if fast and a.size * b.size > 4096:
        return fftconvolve(a, b) * h
    return np.convolve(a, b) * h


def _conv_power(a: np.ndarray, k: int, h: float, fast: bool = True):
    """k-fold convolution power; ``None`` stands for the unit (Dirac) element."""
    out = None
    for _ in range(k):
        out = a.copy() if out is None else _convolve(out, a, h, fast)
    return out


def _pad_center(a: np.ndarray, size: int) -> np.ndarray:
    pad = (size - a.size) // 2
    return np.pad(a, (pad, pad))


def _check_step(n: int):
    if n < 256:
        raise AccuracyError(f"grid step 2pi/{n} is coarser than 2pi/256", achieved=TWO_PI / n)


def _hat_power(omega: float, L: int, n: int, which: str, fast: bool) -> GridFunction:
    if omega <= 0:
        raise DomainError("omega must be positive")
    if which == "minorant" and L % 2 == 0:
        raise DomainError("minorant powers need odd L")
    _check_step(n)
    A, B, h = _factor_grids(omega, n, which)
    size = 2 * L * n + 1
    total = np.zeros(size, dtype=complex)
    for l in range(L + 1):
        pa = _conv_power(A, l, h, fast)
        pb = _conv_power(B, L - l, h, fast)
        if pa is None:
            term = pb
        elif pb is None:
            term = pa
        else:
            term = _convolve(pa, pb, h, fast)
        total += comb(L, l) * _pad_center(term, size)
    total /= TWO_PI ** (L - 1)
    return GridFunction(-TWO_PI * L, h, total)


def hat_ML(omega: float, L: int, n: int = 1024, fast: bool = True) -> GridFunction:
    """Transform of ``M_w**L`` on ``[-2pi L, 2pi L]`` with step ``2pi/n``.

    Sum over ``l`` of ``binom(L, l) A^{*l} * B^{*(L-l)} / (2pi)^(L-1)`` where
    ``A`` carries the factor ``1/(1 - e^{-(w + i tau)})`` inside every
    convolution factor.  ``fast=False`` forces direct summation.
    """
    return _hat_power(omega, L, n, "majorant", fast)


def hat_mL(omega: float, L: int, n: int = 1024, fast: bool = True) -> GridFunction:
    return _hat_power(omega, L, n, "minorant", fast)


# -- sigma -> 0 limit ---------------------------------------------------------


@dataclass(frozen=True)
class LimitTransform:
    """Limit transform in the unscaled variable: grid part plus point masses.

    ``atoms`` holds ``(weight, location)`` pairs of Dirac masses that the
    grid cannot represent.
    """

    grid: GridFunction
    atoms: tuple

    def __call__(self, tau):
        return self.grid(tau)


def _limit_factor(n: int, which: str):
    """Regular part ``F`` of the limit base transform; the rest is ``pi * delta``.

    ``F = q1_hat / (1 - e^{-i tau}) + q2_hat / pi`` (majorant) taken as a
    principal value at 0.  Node 0 gets the mean of the bounded part, so
    convolution sums act as symmetric principal-value sums.
    """
    tau, h = _base_grid(n)
    inner = tau[1:-1]
    q1 = 1.0 - np.abs(inner) / TWO_PI
    q2 = np.where(inner < 0, 0.5j, -0.5j) / math.pi
    with np.errstate(divide="ignore", invalid="ignore"):
        geo = 0.5 - 0.5j / np.tan(inner / 2.0)
        if which == "minorant":
            geo = geo - 1.0
        elif which != "majorant":
            raise DomainError("which must be 'majorant' or 'minorant'")
        vals = q1 * geo + q2
    # the -i/tau pole is odd; the bounded remainder is continuous with value +-1/2
    vals[n - 1] = 0.5 if which == "majorant" else -0.5
    # q1-cot product and q2/pi cancel at the edges
    return np.concatenate([[0j], vals, [0j]]), h


def _limit_raw(L: int, n: int, which: str) -> np.ndarray:
    F, h = _limit_factor(n, which)
    size = 2 * L * n + 1
    total = np.zeros(size, dtype=complex)
    for j in range(1, L + 1):
        total += comb(L, j) * math.pi ** (L - j) * _pad_center(_conv_power(F, j, h), size)
    return total / TWO_PI ** (L - 1)


def hat_limit_unscaled(L: int, which: str = "majorant", n: int = 2048) -> LimitTransform:
    """``lim_{w->0}`` of the transform of ``M_w**L`` (or ``m_w**L``).

    The principal-value sums carry an O(h) error; two resolutions are
    combined by one Richardson step.
    """
    if which == "minorant" and L % 2 == 0:
        raise DomainError("minorant powers need odd L")
    _check_step(n)
    coarse = _limit_raw(L, n, which)
    fine = _limit_raw(L, 2 * n, which)
    vals = 2.0 * fine[::2] - coarse
    atom = math.pi ** L / TWO_PI ** (L - 1)
    return LimitTransform(GridFunction(-TWO_PI * L, TWO_PI / n, vals), ((atom, 0.0),))


def hat_limit(L: int, delta: float, tau, which: str = "majorant", n: int = 2048, _cache={}):
    """``lim_{sigma->0}`` of the transform of the rescaled power, for ``tau != 0``."""
    tau = np.asarray(tau, dtype=float)
    if np.any(tau == 0):
        raise DomainError("the limit transform is singular at tau = 0")
    if np.any(np.abs(tau) > L * delta * (1 + 1e-12)):
        raise DomainError("tau outside [-L delta, L delta]")
    key = (L, which, n)
    if key not in _cache:
        _cache[key] = hat_limit_unscaled(L, which, n)
    lt = _cache[key]
    out = TWO_PI / delta * lt(TWO_PI * tau / delta)
    return complex(out) if out.ndim == 0 else out


def transform_quadrature(omega: float, L: int, tau, which: str = "majorant",
                         half_width: float = 800.0, step: float = 1.0 / 64):
    """Direct Fourier quadrature of ``M_w**L`` (or ``m_w**L``) from time samples.

    The power is band-limited to ``[-2pi L, 2pi L]``, so the plain trapezoid
    sum is alias-free for ``step < 1/(2L)``.  Beyond ``half_width`` the right
    tail is replaced by ``exp(-L w t)`` summed in closed form; the left tail
    decays like ``t**(-2L)`` and is dropped.
    """
    if step * 2 * L >= 1:
        raise DomainError("step too coarse for the band limit")
    tau = np.atleast_1d(np.asarray(tau, dtype=float))
    t = np.arange(-half_width, half_width + step / 2, step)
    f = majorant1(omega, t) if which == "majorant" else minorant1(omega, t)
    f = f ** L
    out = np.empty(tau.size, dtype=complex)
    for i, x in enumerate(tau):
        out[i] = step * np.sum(f * np.exp(-1j * x * t))
    z = np.exp(-(L * omega + 1j * tau) * step)
    J = round(half_width / step)
    out += step * z ** (J + 1) / (1.0 - z)
    return out
