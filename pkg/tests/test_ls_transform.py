import math

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate

from tauberian.distributions import pareto, pmf_array, tail, zeta_diff
from tauberian.errors import AmbiguityError, DomainError
from tauberian.ls_transform import (
    POWER_LOG,
    PURE_POWER,
    SingularityForm,
    canonical_coefficient,
    canonical_power_log,
    canonical_pure_power,
    exact_form,
    fit_singularity,
    ls_function,
    pgf_to_ls,
    phi_exact,
    phi_quadrature,
    sample_real_axis,
    sign_check,
)

SQRT_PI = math.sqrt(math.pi)
CATALOG = [pareto(1), pareto(2), pareto(0.5), pareto(1.5), zeta_diff(1), zeta_diff(2), zeta_diff(3)]


# ---------------------------------------------------------------- evaluation


def test_pareto_r1_at_one_matches_riemann_sum():
    h, total = 1e-6, 0.0
    edges = np.arange(1.0, 40.0, 1e6 * h)
    for a in edges:
        x = a + h * (np.arange(10 ** 6) + 0.5)
        total += math.fsum(np.exp(-x) / x ** 2) * h
    # the integrand beyond 40 contributes less than e^{-40}
    assert phi_quadrature(pareto(1), 1.0) == pytest.approx(total, rel=1e-10)


def test_zeta_r2_matches_partial_sum():
    n = np.arange(10 ** 7, dtype=float)
    ref = math.fsum(((n + 1) ** -2 - (n + 2) ** -2) * np.exp(-0.1 * n))
    assert phi_quadrature(zeta_diff(2), 0.1, rel_tol=1e-12) == pytest.approx(ref, rel=1e-12)


@pytest.mark.parametrize("d", CATALOG, ids=str)
def test_transform_tends_to_one(d):
    # 1 - phi(s) is of order s**min(r, 1) up to a log factor
    for s in (1e-4, 1e-7):
        gap = abs(1.0 - phi_quadrature(d, s, rel_tol=1e-9))
        assert gap <= 5 * s ** min(d.r, 1.0) * (1 + abs(math.log(s)))


@pytest.mark.parametrize("d", CATALOG, ids=str)
@pytest.mark.parametrize("s", [0.02, 0.3 + 2.0j, 1.5 - 0.7j])
def test_closed_form_matches_quadrature(d, s):
    assert abs(phi_exact(d, s) - phi_quadrature(d, s, rel_tol=1e-11)) <= 1e-10 * abs(phi_exact(d, s))


def test_closed_form_on_imaginary_axis_is_limit_from_right():
    for d in (pareto(1), zeta_diff(2)):
        near = phi_quadrature(d, 1e-6 + 0.8j, rel_tol=1e-10)
        assert abs(phi_exact(d, 0.8j) - near) < 1e-4


def test_domain_errors():
    with pytest.raises(DomainError):
        phi_quadrature(pareto(1), 0.0 + 1j)
    with pytest.raises(DomainError):
        phi_quadrature(pareto(1), -0.1)
    with pytest.raises(DomainError):
        phi_quadrature(pareto(1), 1.0, rel_tol=1e-15)
    with pytest.raises(DomainError):
        ls_function(pareto(1), "spline")


def test_pgf_examples():
    assert pgf_to_ls([1.0], 0.3 + 1j) == 1.0
    assert pgf_to_ls([0.0, 1.0], 0.5) == pytest.approx(math.exp(-0.5), rel=1e-15)
    d = zeta_diff(2)
    got = pgf_to_ls(pmf_array(d, 400), 0.1, tail_mass=tail(d, 400))
    assert got == pytest.approx(phi_quadrature(d, 0.1), rel=1e-8)
    with pytest.raises(DomainError):
        pgf_to_ls([0.7, 0.6], 0.1)


# ------------------------------------------------------- canonical singular parts


def flat_integral(s):
    # decade panels out to where e^{-st} is negligible
    edges = np.geomspace(1.0, 60.0 / s, 40)
    return math.fsum(integrate.quad(lambda t: math.exp(-s * t), a, b, epsabs=0, epsrel=1e-13)[0]
                     for a, b in zip(edges[:-1], edges[1:]))


@pytest.mark.parametrize("r", [1, 2, 3])
def test_power_log_coefficient_from_derivative(r):
    # d^{r+1}/ds^{r+1} of c s^r log s is c r!/s, while the (r+1)-th derivative
    # of the transform of t^{-(r+1)} is (-1)^{r+1} int_1^inf e^{-st} dt
    s = 1e-7
    c = (-1) ** (r + 1) * s * flat_integral(s) / math.factorial(r)
    assert canonical_coefficient(r) == pytest.approx(c, abs=1e-6)


def test_power_log_coefficient_examples():
    assert canonical_coefficient(1) == 1.0
    assert canonical_coefficient(2) == -0.5


def root_integral(s):
    # int_1^inf t^{-1/2} e^{-st} dt with t = u^2
    return integrate.quad(lambda u: 2 * math.exp(-s * u * u), 1, np.inf, epsabs=0, epsrel=1e-13)[0]


def root_singular_coefficient():
    s = np.geomspace(1e-8, 1e-6, 12)
    J = np.array([root_integral(x) for x in s])
    A = np.column_stack([s ** -0.5, np.ones_like(s), s])
    return np.linalg.lstsq(A, J, rcond=None)[0][0]


def test_pure_power_coefficients_from_quadrature():
    a = root_singular_coefficient()
    # r = 1/2: phi' = -J and (c s^{1/2})' = c/2 s^{-1/2}
    assert canonical_coefficient(0.5) == pytest.approx(-2 * a, rel=1e-6)
    assert canonical_coefficient(0.5) == pytest.approx(-2 * SQRT_PI, rel=1e-12)
    # r = 3/2: phi'' = J and (c s^{3/2})'' = 3c/4 s^{-1/2}
    assert canonical_coefficient(1.5) == pytest.approx(4 * a / 3, rel=1e-6)
    assert canonical_coefficient(1.5) == pytest.approx(4 * SQRT_PI / 3, rel=1e-12)


def test_canonical_kind_checks():
    with pytest.raises(DomainError):
        canonical_power_log(1.5, 0.1)
    with pytest.raises(DomainError):
        canonical_pure_power(2, 0.1)
    with pytest.raises(DomainError):
        canonical_coefficient(0)


def test_canonical_forms_real_on_real_axis():
    s = np.linspace(0.01, 0.99, 50)
    assert np.all(canonical_power_log(2, s).imag == 0)
    assert np.all(canonical_pure_power(1.5, s).imag == 0)


def test_power_log_residual_after_quadratic_fit():
    grid = np.linspace(0.005, 0.05, 30)
    rem = np.array([phi_quadrature(pareto(1), x).real for x in grid]) - canonical_power_log(1, grid).real
    coef = np.polyfit(grid, rem, 2)
    s = 0.01
    resid = phi_quadrature(pareto(1), s).real - canonical_power_log(1, s).real - np.polyval(coef, s)
    assert abs(resid) <= 0.1 * s ** 2 * abs(math.log(s))


@pytest.mark.parametrize("r", [1, 2, 0.5, 1.5])
def test_canonical_plus_fitted_remainder_reproduces_transform(r):
    # the catalog density is r t^{-(r+1)}, hence the factor r
    d = pareto(r)
    canon = canonical_power_log if float(r).is_integer() else canonical_pure_power
    grid = np.geomspace(1e-3, 1e-1, 40)
    phi = np.array([phi_quadrature(d, x).real for x in grid])
    sing = r * canon(r, grid).real
    coef = np.polyfit(grid, phi - sing, 6)
    model = sing + np.polyval(coef, grid)
    assert np.max(np.abs(model - phi) / np.abs(phi)) <= 1e-4


def test_exact_series_matches_closed_form():
    for d in CATALOG:
        form = exact_form(d, 8)
        for s in (1e-3, 5e-3):
            assert abs(form(s) - phi_exact(d, s)) <= 1e-12


# ------------------------------------------------------------------ fitting


def test_fit_recovers_own_generator():
    samples = [(s, s * math.log(s) + 1 - s) for s in np.geomspace(1e-4, 1e-2, 40)]
    form = fit_singularity(samples, r_candidates={1, 2, 0.5})
    assert form.kind == POWER_LOG and form.r == 1
    assert form.alpha[0] == pytest.approx(1.0, abs=1e-6)


def test_fit_pareto_r1():
    form = fit_singularity(sample_real_axis(lambda s: phi_quadrature(pareto(1), s)))
    assert form.kind == POWER_LOG and form.r == 1
    assert form.alpha[0] == pytest.approx(1.0, abs=1e-2)


def test_fit_pareto_half():
    form = fit_singularity(sample_real_axis(lambda s: phi_quadrature(pareto(0.5), s)))
    assert form.kind == PURE_POWER and form.r == 0.5
    assert form.alpha[0] == pytest.approx(-SQRT_PI, abs=2e-2)


@pytest.mark.parametrize("d", CATALOG, ids=str)
def test_fit_identifies_catalog(d):
    form = fit_singularity(sample_real_axis(lambda s: phi_exact(d, s)))
    assert form.r == d.r
    assert form.alpha[0] == pytest.approx(exact_form(d, 1).alpha[0], rel=1e-3)
    assert form.runner_up[0] != d.r


@settings(max_examples=200, deadline=None)
@given(
    r=st.sampled_from([0.5, 1, 1.5, 2, 2.5, 3]),
    order=st.integers(1, 3),
    a0=st.floats(0.5, 2.0),
    negative=st.booleans(),
    rest=st.lists(st.floats(-1, 1), min_size=5, max_size=5),
)
def test_fit_round_trip(r, order, a0, negative, rest):
    kind = POWER_LOG if float(r).is_integer() else PURE_POWER
    alpha = ((-a0 if negative else a0),) + tuple(rest[: order - 1])
    beta = (1.0,) + tuple(rest[2 : 2 + order - 1])
    gen = SingularityForm(kind, r, alpha, beta)
    # a wider window than the default keeps s**3 log s well above rounding
    samples = [(s, gen(s).real) for s in np.geomspace(1e-3, 1e-1, 40)]
    form = fit_singularity(samples, order=order)
    assert form.r == r
    assert form.alpha[0] == pytest.approx(alpha[0], abs=1e-6)


def test_fit_reports_ambiguity():
    # a pure polynomial is explained equally well by every candidate
    samples = [(s, 1.0 + s) for s in np.geomspace(1e-4, 1e-2, 40)]
    with pytest.raises(AmbiguityError) as info:
        fit_singularity(samples, r_candidates=(0.5, 1.5), order=1)
    assert {info.value.best[0], info.value.runner_up[0]} == {0.5, 1.5}
    with pytest.raises(DomainError):
        fit_singularity(samples, r_candidates=(1, 1))


def test_fit_requires_a_decade():
    samples = [(s, 1.0 + s) for s in np.linspace(1e-3, 5e-3, 30)]
    with pytest.raises(DomainError):
        fit_singularity(samples)


# ---------------------------------------------------------------- sign rules


def test_sign_check_examples():
    assert sign_check(SingularityForm(POWER_LOG, 1, (1.0,), (1.0,)))[0]
    assert sign_check(SingularityForm(POWER_LOG, 2, (-0.5,), (1.0,)))[0]
    ok, msg = sign_check(SingularityForm(PURE_POWER, 0.5, (1.0,), (1.0,)))
    assert not ok and "alpha_0<0" in msg


@pytest.mark.parametrize("d", [pareto(1), pareto(2), pareto(0.5), pareto(1.5), zeta_diff(1), zeta_diff(2), zeta_diff(3)], ids=str)
def test_fitted_catalog_forms_obey_sign_rule(d):
    form = fit_singularity(sample_real_axis(lambda s: phi_quadrature(d, s, rel_tol=1e-11)))
    assert sign_check(form)[0]


def test_form_invariants_and_json():
    with pytest.raises(DomainError):
        SingularityForm(POWER_LOG, 1, (0.0,), (1.0,))
    with pytest.raises(DomainError):
        SingularityForm(POWER_LOG, 1.5, (1.0,), (1.0,))
    f = exact_form(zeta_diff(2), 3)
    assert SingularityForm.from_json(f.to_json()) == f
    assert f.order == 3


@pytest.mark.parametrize("d", [pareto(1), pareto(2), zeta_diff(1), zeta_diff(2), zeta_diff(3)], ids=str)
def test_derivative_diverges_with_parity_sign(d):
    r = int(d.r)
    mp.mp.dps = 30
    f = lambda s: mp.mpf(phi_exact(d, float(s)).real)
    vals = [float(mp.diff(f, mp.mpf(s), r, h=mp.mpf(s) / 8)) for s in (1e-2, 1e-3, 1e-4)]
    mp.mp.dps = 15
    sign = (-1) ** (r + 1)
    # r! alpha_0 log s dominates: grows like |log s| with sign opposite to (-1)^{r+1}
    assert all(-sign * v > 0 for v in vals[1:])
    assert -sign * vals[2] > -sign * vals[1] > -sign * vals[0]
