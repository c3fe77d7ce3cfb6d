"""Numerical lemma checks: extremal kernels, correction matching and sign rules.

Each check returns a ``Check`` with the achieved discrepancy next to its
tolerance, so reports record what was actually reached.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import mpmath as mp
import numpy as np
from scipy import integrate

from .correction import build_correction, vandermonde
from .distributions import Distribution, pareto, zeta_diff
from .extremal import (TWO_PI, E_omega, ExtremalSpec, hat_limit, hat_M1, hat_m1, hat_ML, hat_mL,
                       majorant1, majorantL, minorantL, transform_quadrature)
from .ls_transform import canonical_analytic_coeffs, canonical_coefficient, exact_form, sign_check
from .tailbound import fitted_form


@dataclass(frozen=True)
class Check:
    lemma: str
    name: str
    passed: bool
    achieved: float
    tolerance: float
    detail: str = ""

    def to_dict(self) -> dict:
        return asdict(self)


def _check(lemma, name, achieved, tol, detail="", smaller=True):
    ok = bool(achieved <= tol) if smaller else bool(achieved >= tol)
    return Check(lemma, name, ok, float(achieved), float(tol), detail)


# -- extremal kernels -----------------------------------------------------------


def shell_integral(omega: float, powers, a: float, b: float, points: int = 100001) -> dict:
    """``int |M^L|`` over ``a <= |t| <= b`` for each ``L`` in ``powers``."""
    out = dict.fromkeys(powers, 0.0)
    for t in (np.linspace(-b, -a, points), np.linspace(a, b, points)):
        m = majorant1(omega, t)
        for L in powers:
            out[L] += integrate.simpson(np.abs(m) ** L, x=t)
    return out


def check_integrability(omegas=(0.1, 1.0), powers=(1, 2, 3), tol: float = 1e-4):
    """``int |M^L|`` converges: the shell ``10^2 <= |t| <= 10^3`` carries less than ``tol``.

    For ``L = 1`` the left tail decays only like ``1/(pi t)^2``, so that shell
    holds about ``1e-3``; the same tolerance is applied one decade further out.
    """
    checks = []
    for omega in omegas:
        near = shell_integral(omega, powers, 1e2, 1e3)
        far = shell_integral(omega, (1,), 1e3, 1e4)
        for L in powers:
            if L >= 2:
                checks.append(_check("8", f"shell 1e2..1e3 L={L} omega={omega}", near[L], tol))
            else:
                checks.append(_check("8", f"shell 1e3..1e4 L=1 omega={omega}", far[1], tol,
                                     f"shell 1e2..1e3 holds {near[1]:.3e}"))
    return checks


def check_sandwich(count: int = 10 ** 4, seed: int = 0, tol: float = 1e-10, t_range=(-60.0, 60.0)):
    rng = np.random.default_rng(seed)
    checks = []
    for L in (1, 3):
        for sigma in (0.05, 0.5):
            for delta in (0.5, 2.0):
                spec = ExtremalSpec(L, sigma, delta)
                t = rng.uniform(*t_range, count)
                target = E_omega(L * sigma, t)
                bad = np.sum(majorantL(spec, t) < target - tol) + np.sum(minorantL(spec, t) > target + tol)
                checks.append(_check("10", f"sandwich L={L} sigma={sigma} delta={delta}", int(bad), 0))
    return checks


def check_closed_form_transforms(omegas=(0.3, 1.0), count: int = 20, seed: int = 1, tol: float = 1e-3):
    rng = np.random.default_rng(seed)
    checks = []
    for omega in omegas:
        tau = rng.uniform(-1.2 * TWO_PI, 1.2 * TWO_PI, count)
        for which, closed in (("majorant", hat_M1), ("minorant", hat_m1)):
            err = np.max(np.abs(closed(omega, tau) - transform_quadrature(omega, 1, tau, which)))
            checks.append(_check("12", f"closed-form {which} omega={omega}", err, tol))
    return checks


def check_power_transforms(omega: float = 0.5, L: int = 3, tol: float = 1e-3):
    tau = np.array([1.0, -4.0, 7.0, 12.0, -15.0])
    checks = []
    for which, grid in (("majorant", hat_ML), ("minorant", hat_mL)):
        err = np.max(np.abs(grid(omega, L)(tau) - transform_quadrature(omega, L, tau, which)))
        checks.append(_check("13", f"grid transform L={L} {which}", err, tol))
    return checks


def check_support(omega: float = 0.5, L: int = 3, ratio: float = 1e-4):
    """Direct transform of ``M^L`` outside ``[-2pi L, 2pi L]`` relative to its peak."""
    out = TWO_PI * L * np.array([1.05, 1.3, 2.0, -1.05, -1.3, -2.0])
    checks = []
    for which in ("majorant", "minorant"):
        peak = abs(transform_quadrature(omega, L, [0.0], which)[0])
        worst = np.max(np.abs(transform_quadrature(omega, L, out, which)))
        checks.append(_check("11", f"support L={L} {which}", worst / peak, ratio))
    return checks


def check_limits(delta: float = 1.0, sigma: float = 1e-5, tol: float = 1e-3):
    checks = []
    omega = TWO_PI * sigma / delta
    for L, which in ((1, "majorant"), (2, "majorant"), (3, "majorant"), (3, "minorant")):
        tau = np.array([L * delta / 2, -0.3 * delta, 0.9 * L * delta])
        small = TWO_PI / delta * transform_quadrature(omega, L, TWO_PI * tau / delta, which)
        rel = np.max(np.abs(hat_limit(L, delta, tau, which) - small) / np.abs(small))
        checks.append(_check("14/15", f"limit L={L} {which}", rel, tol))
    return checks


def extremal_suite(seed: int = 0):
    return (check_integrability() + check_sandwich(seed=seed) + check_support()
            + check_closed_form_transforms(seed=seed + 1)
            + check_power_transforms() + check_limits())


# -- correction matching --------------------------------------------------------


CORRECTION_MEMBERS = (pareto(1), pareto(0.5), zeta_diff(2))


def correction_checks(dist: Distribution, L: int, alpha_tol=1e-8, beta_tol=1e-6, vdm_tol=1e-10):
    """Singular and analytic matching of ``phi*`` against the exact expansion of ``phi``."""
    form = exact_form(dist, 6)
    pair = build_correction(form, L)
    g = np.asarray(pair.g)
    # singular part of G*: g_k times the log/power coefficient of E_{r+k+1}
    alpha_err = max(abs(gk * canonical_coefficient(form.r + k) - form.alpha[k]) for k, gk in enumerate(g))
    # analytic part of G* from the closed-form expansion of each E_{r+k+1}
    tb_exact = sum(gk * canonical_analytic_coeffs(form.r + k, L) for k, gk in enumerate(g))
    # Taylor coefficients of H*(s) = sum_k d_k k/(s+k) are sum_k d_k (-1/k)^n
    VT = vandermonde(L).T
    d = np.asarray(pair.d)
    beta = np.asarray(form.beta[:L])
    beta_err = np.max(np.abs(VT @ d + tb_exact - beta))
    vdm = np.max(np.abs(VT @ d - (beta - np.asarray(pair.tilde_beta))))
    tag = f"{dist.kind} r={dist.r} L={L}"
    return [_check("6", f"alpha match {tag}", alpha_err, alpha_tol),
            _check("7", f"beta match {tag}", beta_err, beta_tol),
            _check("7", f"Vandermonde residual {tag}", vdm, vdm_tol)]


def correction_suite(members=CORRECTION_MEMBERS, L_max: int = 4):
    checks = []
    for dist in members:
        for L in range(max(1, math.ceil(dist.r)), L_max + 1):
            checks += correction_checks(dist, L)
    return checks


# -- sign rules -------------------------------------------------------------------


SIGN_MEMBERS = (pareto(1), pareto(2), pareto(0.5), pareto(1.5), zeta_diff(1), zeta_diff(2))


def sign_suite(members=SIGN_MEMBERS):
    checks = []
    for dist in members:
        form = fitted_form(dist)
        ok, msg = sign_check(form)
        checks.append(Check("4/5", f"sign {dist.kind} r={dist.r}", bool(ok), float(form.alpha[0]), 0.0, msg))
    return checks


def canonical_log_coefficient(r: int = 1, s: float = 1e-6) -> float:
    """Coefficient of ``s^r log s`` in ``E_{r+1}(s)``, extracted numerically.

    The analytic part is subtracted term by term from a high-precision
    exponential integral; what is left is divided by ``s^r log s``.
    """
    with mp.workdps(40):
        ss = mp.mpf(s)
        val = mp.expint(r + 1, ss)
        for k in range(r + 3):
            if k == r:
                val -= (-1) ** k * mp.digamma(k + 1) / mp.factorial(k) * ss ** k
            else:
                val -= -((-1) ** k) / (mp.factorial(k) * (k - r)) * ss ** k
        return float(val / (ss ** r * mp.log(ss)))


SUITES = {"extremal": extremal_suite, "correction": correction_suite, "signs": sign_suite}


def run_suite(name: str, seed: int = 0):
    """Checks of one suite (or ``"all"``); ``seed`` drives the random extremal samples."""
    if name != "all" and name not in SUITES:
        raise KeyError(name)
    names = list(SUITES) if name == "all" else [name]
    out = []
    for n in names:
        out += SUITES[n](seed) if n == "extremal" else SUITES[n]()
    return out
