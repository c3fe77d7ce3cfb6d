import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from tauberian.distributions import (
    Distribution,
    density,
    empirical_tail,
    pareto,
    pmf,
    pmf_array,
    quantile,
    sample,
    tail,
    zeta_diff,
)
from tauberian.errors import DomainError

CATALOG = [pareto(1), pareto(0.5), pareto(1.5), pareto(2), zeta_diff(1), zeta_diff(2), zeta_diff(3)]


def test_tail_examples():
    assert tail(pareto(1), 10.0) == pytest.approx(0.1, rel=1e-15)
    assert tail(zeta_diff(2), 8.0) == pytest.approx(0.01, rel=1e-15)
    assert tail(pareto(0.5), 4.0) == pytest.approx(0.5, rel=1e-15)
    assert tail(pareto(2), 1.0) == 1.0


def test_discrete_tail_uses_floor():
    d = zeta_diff(2)
    assert tail(d, 8.7) == tail(d, 8.0)


def test_negative_x_rejected():
    with pytest.raises(DomainError):
        tail(pareto(1), -0.1)


def test_density_and_pmf_examples():
    assert density(pareto(1), 2.0) == pytest.approx(0.25)
    assert pmf(zeta_diff(1), 0) == pytest.approx(0.5)
    assert pmf(zeta_diff(2), 1) == pytest.approx(5 / 36)
    with pytest.raises(DomainError):
        density(pareto(1), 0.5)
    with pytest.raises(DomainError):
        pmf(pareto(1), 1)
    with pytest.raises(DomainError):
        density(zeta_diff(1), 2.0)


def test_density_integrates_to_one():
    from scipy import integrate

    for r in (0.5, 1.0, 2.5):
        v, _ = integrate.quad(lambda x: density(pareto(r), x), 1, np.inf)
        assert v == pytest.approx(1.0, abs=1e-8)


@pytest.mark.parametrize("d", CATALOG, ids=str)
def test_tail_is_nonincreasing(d):
    x = np.linspace(0, 200, 4001)
    assert np.all(np.diff(tail(d, x)) <= 0)


@given(N=st.integers(0, 5000), r=st.integers(1, 4))
def test_pmf_telescopes_to_one(N, r):
    d = zeta_diff(r)
    assert math.fsum(pmf_array(d, N)) + tail(d, N) == pytest.approx(1.0, abs=1e-12)


def test_quantile_examples():
    assert quantile(pareto(1), 0.5) == pytest.approx(2.0)
    assert quantile(pareto(2), 0.75) == pytest.approx(2.0)


def brute_force_quantile(d, u, n_max=10 ** 5):
    cdf = 0.0
    for n in range(n_max):
        cdf = 1.0 - tail(d, n)
        if cdf >= u:
            return n
    raise AssertionError("scan exhausted")


@pytest.mark.parametrize("r", [1, 2, 3])
@pytest.mark.parametrize("u", [0.0, 0.3, 0.5, 0.5001, 0.75, 0.9, 0.99])
def test_discrete_quantile_matches_cdf_scan(r, u):
    d = zeta_diff(r)
    assert quantile(d, u) == brute_force_quantile(d, u)


def test_discrete_quantile_at_half_is_zero():
    # P(X <= 0) = 1/2 already reaches u = 1/2
    assert quantile(zeta_diff(1), 0.5) == 0


def test_sample_is_deterministic():
    a = sample(pareto(1.5), 100, seed=7)
    b = sample(pareto(1.5), 100, seed=7)
    np.testing.assert_array_equal(a, b)
    assert not np.array_equal(a, sample(pareto(1.5), 100, seed=8))
    with pytest.raises(DomainError):
        sample(pareto(1), 0, seed=1)


def test_empirical_tail_examples():
    assert empirical_tail([1, 2, 3, 4], 2.5) == 0.5
    assert empirical_tail([5], 4) == 1.0
    with pytest.raises(DomainError):
        empirical_tail([], 1.0)


def test_million_draws_pareto_r1():
    draws = sample(pareto(1), 10 ** 6, seed=2024)
    assert abs(empirical_tail(draws, 100.0) - 0.01) <= 3e-3


@pytest.mark.parametrize("d", CATALOG, ids=str)
def test_sampler_matches_tail(d):
    n = 10 ** 5
    draws = sample(d, n, seed=11)
    for x in (2.0, 10.0, 100.0):
        p = tail(d, x)
        se = math.sqrt(p * (1 - p) / n)
        assert abs(empirical_tail(draws, x) - p) <= 4 * se + 1e-12


def test_json_roundtrip_and_rejects_unknown_keys():
    for d in CATALOG:
        assert Distribution.from_json(d.to_json()) == d
    with pytest.raises(DomainError):
        Distribution.from_dict({"kind": "pareto", "r": 1, "scale": 2})
    with pytest.raises(DomainError):
        Distribution.from_dict({"kind": "cauchy", "r": 1})
    with pytest.raises(DomainError):
        zeta_diff(1.5)


def test_mean():
    assert pareto(1).mean == math.inf
    assert pareto(3).mean == pytest.approx(1.5)
    # sum_{n>=0} P(X > n) by direct summation
    assert zeta_diff(3).mean == pytest.approx(sum((n + 2.0) ** -3 for n in range(10 ** 6)), abs=1e-11)


def test_tail_table_slope_approaches_minus_r():
    from tauberian.distributions import tail_table

    tab = tail_table(pareto(1.5), 1e4, 10.0)
    assert tab.shape[1] == 3 and tab[0, 0] == pytest.approx(10.0)
    np.testing.assert_allclose(tab[:, 2], -1.5, atol=1e-12)
    z = tail_table(zeta_diff(2), 1e4, 10.0)
    assert z[-1, 2] == pytest.approx(-2.0, abs=0.05)
    with pytest.raises(DomainError):
        tail_table(pareto(1), 1.0, 2.0)
