"""Tail bounds from extremal kernels, decay-rate estimation and side checks.

For a kernel ``K`` sandwiching the step ``1{u >= 0}`` the identity

    int K(t - x) dF(t) = int K(t - x) f*(t) dt + (1/2pi) int K^(-tau) xi(i tau) e^{i x tau} dtau

splits the kernel integral against ``F`` into an explicit part ``T1`` (with
``f* = g* + h*``) and an oscillatory part ``T2`` that only sees ``xi`` on
the band ``[-L delta, L delta]``.  With the majorant power the sum bounds
``P(X >= x)`` from above; with an odd minorant power it bounds ``P(X > x)``
from below.  Kernels are taken in the limit of vanishing tilt, where the
step is sandwiched directly.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import mpmath as mp
import numpy as np
import scipy.special
import scipy.stats
from scipy.interpolate import CubicSpline

from .correction import CorrectionPair, build_correction, default_L, h_star, g_star, phi_star
from .distributions import PARETO, Distribution, pmf_array, tail
from .errors import AccuracyError, DomainError, InvariantError
from .extremal import TWO_PI, hat_limit_unscaled
from .ls_transform import fit_singularity, phi_exact, pgf_to_ls, sample_real_axis, sign_check

SIGMA2_SCHEDULE = (1e-2, 1e-3, 1e-4)
KERNEL_REACH = 200       # kernel support kept on each side of x, in periods 2pi/delta
GAUSS_NODES = (16, 24)   # coarse and fine rule on every panel
XI_NODES = 400           # spline nodes for xi(i tau) on (0, L delta]
PROFILE_GRID = 8192      # transform grid points per unit band; T2 error ~ n^{-3/2}


def default_delta(dist: Distribution, L: int) -> float:
    """Kernel scale ``delta`` for power ``L``.

    Lattice members repeat with period ``2pi i``, so ``L delta`` is held to a
    tenth of that distance.  The Pareto transform has no other singularity
    on the axis and the band is set to ``L delta = 1``.
    """
    if L < 1:
        raise DomainError("L must be >= 1")
    if dist.kind == PARETO:
        return 1.0 / L
    return 0.1 * TWO_PI / L


# -- time-domain kernels --------------------------------------------------------


def step_remainder1(u, which: str = "majorant"):
    """``k(u) - 1{u >= 0}`` for the vanishing-tilt majorant (or minorant) of the step.

    The majorant is ``sum_{n>=0} sinc^2(u-n) + sin(pi u) sinc(u)/pi``; the
    reflection formula for the trigamma function turns the sum into a
    smooth expression on each side of 0.
    """
    if which not in ("majorant", "minorant"):
        raise DomainError("which must be 'majorant' or 'minorant'")
    u0 = np.asarray(u, dtype=float)
    u = np.atleast_1d(u0)
    s = np.sin(math.pi * u)
    out = s * np.sinc(u) / math.pi
    s2 = s * s / math.pi ** 2
    pos = u >= 0
    far = u <= -0.5
    near = ~pos & ~far
    out[pos] -= s2[pos] * scipy.special.polygamma(1, 1.0 + u[pos])
    out[far] += s2[far] * scipy.special.polygamma(1, -u[far])
    out[near] += 1.0 - s2[near] * scipy.special.polygamma(1, 1.0 + u[near])
    if which == "minorant":
        out = out - np.sinc(u) ** 2
    return out.reshape(u0.shape)


def kernel_remainder(L: int, delta: float, u, which: str = "majorant"):
    """``K(u) - 1{u >= 0}`` with ``K(u) = k(delta u / 2pi)^L``."""
    v = delta * np.asarray(u, dtype=float) / TWO_PI
    k = step_remainder1(v, which) + (v >= 0)
    return k ** L - (v >= 0)


def _far_bounds(L: int, reach: float, which: str):
    """Bounds on ``|k^L - 1{u>=0}|`` beyond ``reach`` periods, left and right of 0.

    The majorant deviates from the step by at most ``1/(pi u)^2`` on both
    sides; the minorant subtracts ``sinc^2`` on top, doubling the bound.
    """
    q = (1.0 if which == "majorant" else 2.0) / (math.pi * reach) ** 2
    return q ** L, (1.0 + q) ** L - 1.0


# -- explicit term ----------------------------------------------------------------


@dataclass(frozen=True)
class Density:
    """A density (or point masses) against which the kernel is integrated.

    ``right_mass(a)`` is ``int_a^inf f``; ``abs_mass(a, b)`` bounds
    ``int_a^b |f|``; ``breaks`` are points where ``f`` is not smooth.
    """

    f: Callable
    right_mass: Callable[[float], float]
    abs_mass: Callable[[float, float], float]
    breaks: tuple = ()
    atoms: Callable | None = None  # n -> p_n on the integers, replaces f when set


def correction_density(pair: CorrectionPair) -> Density:
    g, d, r = pair.g, pair.d, pair.r

    def right_mass(a):
        a1 = max(a, 1.0)
        gm = sum(gk * a1 ** -(r + k) / (r + k) for k, gk in enumerate(g))
        a0 = max(a, 0.0)
        return gm + sum(dk * math.exp(-k * a0) for k, dk in enumerate(d, start=1))

    def abs_mass(a, b):
        a1 = max(a, 1.0)
        gm = sum(abs(gk) * a1 ** -(r + k) / (r + k) for k, gk in enumerate(g)) if b > 1 else 0.0
        return gm + sum(abs(dk) * math.exp(-k * max(a, 0.0)) for k, dk in enumerate(d, start=1))

    f = lambda t: g_star(pair, t) + h_star(pair.d, t)
    return Density(f, right_mass, abs_mass, breaks=(0.0, 1.0))


def distribution_density(dist: Distribution) -> Density:
    """``dF`` itself, for the direct evaluation of ``int K(t - x) dF(t)``."""
    if dist.kind == PARETO:
        r = dist.r
        return Density(lambda t: np.where(t >= 1, r * np.maximum(t, 1.0) ** (-r - 1), 0.0),
                       lambda a: float(tail(dist, max(a, 1.0))) if a > 1 else 1.0,
                       lambda a, b: float(tail(dist, max(a, 1.0))) if b > 1 else 0.0,
                       breaks=(1.0,))
    # P(X >= a) on the integers
    right = lambda a: 1.0 if a <= 0 else float(tail(dist, math.ceil(a) - 1.0))
    return Density(None, right, lambda a, b: right(a), atoms=lambda n: _zeta_pmf(dist, n))


def _zeta_pmf(dist: Distribution, n):
    n = np.asarray(n, dtype=float)
    return (n + 1.0) ** -dist.r - (n + 2.0) ** -dist.r


def _gauss_panels(f, edges, nodes):
    xg, wg = np.polynomial.legendre.leggauss(nodes)
    a, b = edges[:-1, None], edges[1:, None]
    t = 0.5 * (b - a) * xg + 0.5 * (a + b)
    return float(np.sum(0.5 * (b - a) * wg * f(t)))


def kernel_integral(den: Density, L: int, delta: float, x: float, which: str = "majorant",
                    reach: float = KERNEL_REACH, rel_tol: float = 1e-7):
    """``int K(t - x) dmu(t)`` and a bound on its truncation and quadrature error.

    ``K = 1{u>=0} + R``: the step part is ``den.right_mass(x)``; ``R`` is
    integrated over ``reach`` kernel periods on each side and the rest is
    bounded with ``_far_bound``.
    """
    period = TWO_PI / delta
    lo, hi = x - reach * period, x + reach * period
    left, right = _far_bounds(L, reach, which)
    far = left * den.abs_mass(-math.inf, lo) * (lo > 0) + right * den.abs_mass(hi, math.inf)
    step = den.right_mass(x)
    R = lambda t: kernel_remainder(L, delta, t - x, which)
    if den.atoms is not None:
        n = np.arange(max(0.0, math.ceil(lo)), math.floor(hi) + 1.0)
        return step + math.fsum(R(n) * den.atoms(n)), far
    start = max(lo, min(den.breaks, default=0.0))
    cuts = sorted({start, hi, x, *[b for b in den.breaks if start < b < hi]})
    # uniform panels follow the kernel oscillation, geometric ones the decay of f
    geo = np.geomspace(1.0, hi, max(2, int(math.log(hi) / math.log(1.5)) + 1)) if hi > 1 else []
    edges = np.concatenate([np.arange(start, hi, period / 2), geo, [0.5], cuts])
    edges = np.unique(edges[(edges >= start) & (edges <= hi)])
    g = lambda t: R(t) * den.f(t)
    coarse, fine = (_gauss_panels(g, edges, n) for n in GAUSS_NODES)
    err = abs(fine - coarse)
    if err > rel_tol * max(abs(step + fine), den.abs_mass(x, math.inf), 1e-300):
        raise AccuracyError(f"kernel integral at x={x:g} unresolved ({err:.2e})", achieved=err)
    return step + fine, far + err


# -- oscillatory term ---------------------------------------------------------------


def xi_axis(dist: Distribution, pair: CorrectionPair, tau) -> np.ndarray:
    """``xi(i tau)`` from the closed-form transform; ``xi(0) = 0``."""
    out = np.zeros(np.shape(tau), dtype=complex)
    for i, t in np.ndenumerate(np.asarray(tau, dtype=float)):
        if t != 0:
            s = 1j * t
            out[i] = phi_exact(dist, s) - phi_star(pair, s)
    return out


@dataclass
class OscillatoryProfile:
    """``P_j = K^(-v_j) xi(i delta v_j / 2pi)`` on the transform grid (unscaled ``v``)."""

    v: np.ndarray
    values: np.ndarray
    step: float
    delta: float

    def __call__(self, x):
        """``(1/2pi) int P(v) e^{i w v} dv``, ``w = x delta / 2pi``, for the piecewise-linear ``P``."""
        x = np.atleast_1d(np.asarray(x, dtype=float))
        w = x * self.delta / TWO_PI
        sums = np.exp(1j * np.outer(w, self.v)) @ self.values
        filon = self.step * np.sinc(w * self.step / TWO_PI) ** 2  # np.sinc(y) = sin(pi y)/(pi y)
        return (filon * sums).real / TWO_PI


_PROFILES: dict = {}


def oscillatory_profile(dist: Distribution, pair: CorrectionPair, delta: float,
                        which: str = "majorant", n: int = PROFILE_GRID, xi_nodes: int = XI_NODES):
    key = (dist, pair, delta, which, n, xi_nodes)
    if key in _PROFILES:
        return _PROFILES[key]
    L = pair.L
    lt = hat_limit_unscaled(L, which, n)
    v = lt.grid.points
    hat = lt.grid.values[::-1]  # K^(-v) on the symmetric grid
    band = L * delta
    tau_nodes = np.linspace(0.0, band, xi_nodes + 1)
    xs = xi_axis(dist, pair, tau_nodes)
    sp_re, sp_im = CubicSpline(tau_nodes, xs.real), CubicSpline(tau_nodes, xs.imag)
    tau = np.abs(delta * v / TWO_PI)
    xv = sp_re(np.minimum(tau, band)) + 1j * np.sign(v) * sp_im(np.minimum(tau, band))
    vals = hat * xv
    vals[v == 0] = 0.0  # the atom at 0 meets xi(0) = 0
    prof = OscillatoryProfile(v, vals, lt.grid.step, delta)
    _PROFILES[key] = prof
    return prof


# -- bounds -------------------------------------------------------------------------


def _check_args(pair: CorrectionPair, L: int, x: float):
    if L != pair.L:
        raise DomainError(f"kernel power L={L} differs from the correction order {pair.L}")
    if L < pair.r:
        raise DomainError(f"need L >= r = {pair.r}")
    if not x > 2.0:
        raise DomainError("x must exceed support start + 1")


def bound_terms(dist, pair, delta, x, which="majorant"):
    """``(T1, T2, error bound on T1)`` at a single ``x``."""
    _check_args(pair, pair.L, x)
    t1, err = kernel_integral(correction_density(pair), pair.L, delta, x, which)
    t2 = float(oscillatory_profile(dist, pair, delta, which)(x)[0])
    return t1, t2, err


def upper_bound(dist: Distribution, pair: CorrectionPair, delta: float, x: float) -> float:
    """Upper bound on ``P(X >= x)`` (hence on ``P(X > x)``)."""
    t1, t2, err = bound_terms(dist, pair, delta, x, "majorant")
    return t1 + t2 + err


def lower_bound(dist: Distribution, pair: CorrectionPair, delta: float, x: float) -> float:
    """Lower bound on ``P(X > x)``; needs an odd kernel power."""
    if pair.L % 2 == 0:
        raise DomainError("minorant powers need odd L")
    t1, t2, err = bound_terms(dist, pair, delta, x, "minorant")
    return t1 + t2 - err


def direct_kernel_integral(dist: Distribution, L: int, delta: float, x: float, which="majorant"):
    """``int K(t - x) dF(t)`` computed from ``F`` itself."""
    return kernel_integral(distribution_density(dist), L, delta, x, which)


# -- exponential tilt -----------------------------------------------------------------


def tilted_tail(dist: Distribution, a: float, x: float) -> float:
    """``e^{a x} int_{[x, inf)} e^{-a t} dF(t)``; tends to ``P(X >= x)`` as ``a -> 0``."""
    if a <= 0 or x <= 0:
        raise DomainError("need a > 0 and x > 0")
    if dist.kind == PARETO:
        r = dist.r
        lo = max(x, 1.0)
        v = r * mp.exp(a * x) * mp.power(a, r) * mp.gammainc(-r, a * lo)
        return float(v)
    # summation by parts against P(X > n) = (n+2)^{-r} leaves a Lerch series
    n0 = math.ceil(x)
    with mp.workdps(30):
        q = mp.exp(-a)
        rest = mp.lerchphi(q, dist.r, n0 + 2)
        v = mp.exp(-a * (n0 - x)) * (mp.mpf(n0 + 1) ** -dist.r + mp.expm1(-a) * rest)
    return float(v)


# -- decay rate -----------------------------------------------------------------------


@dataclass(frozen=True)
class DecayFit:
    eta: float
    stderr: float
    window: tuple


def decay_rate_estimate(tail_values: Sequence) -> DecayFit:
    """Slope of ``log p`` against ``log x`` over the top decade of the data."""
    arr = np.asarray(tail_values, dtype=float)
    if arr.ndim != 2 or arr.shape[1] != 2:
        raise DomainError("expected (x, p) pairs")
    x, p = arr[:, 0], arr[:, 1]
    if np.any(p <= 0) or np.any(x <= 0):
        raise DomainError("all x and p must be positive")
    order = np.argsort(x)
    x, p = x[order], p[order]
    if x.size < 10 or x[-1] < 100 * x[0]:
        raise DomainError("need at least 10 points spanning two decades")
    keep = x >= x[-1] / 10
    if keep.sum() < 3:
        raise DomainError("fewer than 3 points in the top decade")
    lx, lp = np.log(x[keep]), np.log(p[keep])
    res = scipy.stats.linregress(lx, lp)
    return DecayFit(float(res.slope), float(res.stderr), (float(x[keep][0]), float(x[-1])))


# -- reports --------------------------------------------------------------------------


@dataclass
class BoundReport:
    x_grid: list
    upper: list
    lower: list
    scaled_upper: list
    scaled_lower: list
    eta_estimate: float
    r_predicted: float
    params: dict
    tail_exact: list = field(default_factory=list)
    extras: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {"x_grid": self.x_grid, "upper": self.upper, "lower": self.lower,
                "scaled_upper": self.scaled_upper, "scaled_lower": self.scaled_lower,
                "eta_estimate": self.eta_estimate, "r_predicted": self.r_predicted,
                "params": self.params, "tail_exact": self.tail_exact, "extras": self.extras}

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_json(cls, text: str) -> "BoundReport":
        return cls(**json.loads(text))

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["x", "lower", "upper", "tail_exact", "scaled_lower", "scaled_upper"])
        exact = self.tail_exact or [float("nan")] * len(self.x_grid)
        for row in zip(self.x_grid, self.lower, self.upper, exact, self.scaled_lower, self.scaled_upper):
            w.writerow([repr(float(v)) for v in row])
        return buf.getvalue()


def x_grid(window: tuple, per_decade: int = 4) -> np.ndarray:
    lo, hi = window
    if not 2.0 < lo < hi:
        raise DomainError("window must satisfy 2 < lo < hi")
    count = max(10, int(round(per_decade * math.log10(hi / lo))) + 1)
    return np.geomspace(lo, hi, count)


def fitted_form(dist: Distribution, order: int = 3, pgf_terms: int = 200_000):
    """Singularity form fitted from real-axis samples of ``phi``.

    Pareto members are sampled from the closed-form transform, lattice
    members through their generating function.
    """
    if dist.kind == PARETO:
        phi = lambda s: phi_exact(dist, s)
    else:
        coeffs = pmf_array(dist, pgf_terms)
        rest = float(tail(dist, pgf_terms - 1))
        phi = lambda s: pgf_to_ls(coeffs, s, tail_mass=rest)
    return fit_singularity(sample_real_axis(phi), order=order)


def bound_report(dist: Distribution, pair: CorrectionPair, xs, delta: float | None = None,
                 r: float | None = None) -> BoundReport:
    r = pair.r if r is None else r
    L = pair.L
    delta = default_delta(dist, L) if delta is None else delta
    xs = np.asarray(xs, dtype=float)
    up, lo, t2_up = [], [], []
    for x in xs:
        t1, t2, err = bound_terms(dist, pair, delta, x, "majorant")
        up.append(t1 + t2 + err)
        t2_up.append(abs(t2) / abs(t1))
        lo.append(lower_bound(dist, pair, delta, x) if L % 2 else float("nan"))
    up, lo = np.array(up), np.array(lo)
    exact = np.array([float(tail(dist, x)) for x in xs])
    top = xs >= xs[-1] / 10
    fits = {"upper": decay_rate_estimate(np.c_[xs, up])}
    if np.all(lo[top] > 0):
        fits["lower"] = decay_rate_estimate(np.c_[xs[lo > 0], lo[lo > 0]]) if np.sum(lo > 0) >= 10 else None
    fits["tail"] = decay_rate_estimate(np.c_[xs, exact])
    good = [f.eta for k, f in fits.items() if k != "tail" and f is not None]
    tilted = {repr(s2): [tilted_tail(dist, L * s2, x) for x in xs] for s2 in SIGMA2_SCHEDULE}
    extras = {
        "eta": {k: (None if f is None else f.eta) for k, f in fits.items()},
        "eta_stderr": {k: (None if f is None else f.stderr) for k, f in fits.items()},
        "C_upper": float(np.max(up[top] * xs[top] ** r)),
        "c_lower": float(np.min(lo[top] * xs[top] ** r)) if L % 2 else None,
        "t2_ratio_top": float(np.max(np.array(t2_up)[top])),
        "tilted_tail": tilted,
    }
    params = {"L": L, "delta": delta, "sigma2_schedule": list(SIGMA2_SCHEDULE), "sigma2_used": 0.0}
    return BoundReport(xs.tolist(), up.tolist(), lo.tolist(), (up * xs ** r).tolist(),
                       (lo * xs ** r).tolist(), float(np.mean(good)), float(-r), params,
                       exact.tolist(), extras)


def theorem_check(dist: Distribution, L: int | None = None, x_window=(10.0, 1e4),
                  per_decade: int = 4, tol: float | None = None) -> BoundReport:
    """Fit, correct and bound; check the decay rate and the scaled-bound window.

    Raises ``InvariantError`` when the sign rule, the decay rate or the
    boundedness of the scaled bounds fails.
    """
    form = fitted_form(dist)
    ok, msg = sign_check(form)
    if not ok:
        raise InvariantError(f"sign check failed: {msg}")
    L = default_L(form.r, odd=True) if L is None else L
    pair = build_correction(form, L)
    rep = bound_report(dist, pair, x_grid(x_window, per_decade), r=form.r)
    tol = 0.05 * max(1.0, form.r) if tol is None else tol
    rep.extras["kind"] = form.kind
    rep.extras["tol"] = tol
    if abs(rep.eta_estimate + form.r) > tol:
        raise InvariantError(f"decay rate {rep.eta_estimate:.4f} outside -{form.r} +- {tol}")
    c = rep.extras["c_lower"]
    if rep.extras["C_upper"] <= 0 or (c is not None and c <= 0):
        raise InvariantError("scaled bounds not bounded away from 0 on the top decade")
    return rep


# -- appendix integrals -----------------------------------------------------------------


def appendix_integral(case: str, params: tuple, x: float) -> float:
    """``int_1^{x-1} (x-t)^{-n1} t^{-n2} dt`` (A1) or ``int_0^{x-1} e^{-kt} (x-t)^{-n} dt`` (A2)."""
    with mp.workdps(30):  # tanh-sinh error estimates are unreliable at double precision
        return _appendix_integral(case, params, mp.mpf(x))


def _appendix_integral(case, params, x):
    if case == "A1":
        n1, n2 = params
        if int(n1) != n1 or int(n2) != n2 or n1 < 2 or n2 < 2:
            raise DomainError("A1 needs integers n1, n2 >= 2")
        if x <= 2:
            raise DomainError("A1 needs x > 2")
        f = lambda t: (x - t) ** -n1 * t ** -n2
        # geometric breakpoints resolve the power-law ends
        steps = [mp.mpf(2) ** j for j in range(int(mp.log(x / 2, 2)) + 1) if 2 ** j < x / 2]
        pts = sorted({x / 2, *steps, *[x - s for s in steps]})
    elif case == "A2":
        k, n = params
        if k <= 0 or int(n) != n or n < 0:
            raise DomainError("A2 needs k > 0 and an integer n >= 0")
        if x <= 1:
            raise DomainError("A2 needs x > 1")
        f = lambda t: mp.exp(-k * t) * (x - t) ** -n
        pts = sorted({mp.mpf(0), x - 1, *[min(c / mp.mpf(k), x - 1) for c in (1, 4, 10, 20, 40)]})
    else:
        raise DomainError(f"unknown appendix case {case!r}")
    val, err = mp.quad(f, pts, error=True)
    if err > 1e-10 * abs(val) + mp.mpf(10) ** -30:
        raise AccuracyError(f"appendix quadrature unresolved at x={x}", achieved=float(err))
    return float(val)


def appendix_asymptotics(case: str, params: tuple, xs) -> np.ndarray:
    """Scaled sequence: A1 times ``x^min(n1, n2)``, A2 times ``x^n``."""
    power = min(params) if case == "A1" else params[1]
    return np.array([appendix_integral(case, params, x) * float(x) ** power for x in xs])


# -- Korevaar cross-check ---------------------------------------------------------------


def korevaar_estimates(tail_fn: Callable, phi: Callable, r: float, xs):
    """``(F(x) - 1) x^r`` and ``(phi(1/x) - 1) x^r / Gamma(1 - r)`` on ``xs``."""
    if not 0 < r < 1:
        raise DomainError("need 0 < r < 1")
    xs = np.asarray(xs, dtype=float)
    left = np.array([-tail_fn(x) * x ** r for x in xs])
    right = np.array([(complex(phi(1.0 / x)).real - 1.0) * x ** r / math.gamma(1.0 - r) for x in xs])
    return left, right


def korevaar_check(dist: Distribution, xs=(1e2, 1e3, 1e4)):
    from .ls_transform import phi_quadrature

    if dist.kind != PARETO or not 0 < dist.r < 1:
        raise DomainError("needs a pure-power member with 0 < r < 1")
    return korevaar_estimates(lambda x: float(tail(dist, x)), lambda s: phi_quadrature(dist, s), dist.r, xs)
