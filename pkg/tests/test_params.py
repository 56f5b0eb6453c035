import math

import pytest
from hypothesis import given
from hypothesis import strategies as st

from glnlab.errors import ParameterError, SchemaError
from glnlab.params import (LanglandsParams, c_hat, c_mu_eps, c_tilde, classify, dual_params,
                           laplace_eigenvalue, lrs_bound, normalize_order, parse_mu,
                           spectral_params, t_mu)


def mu_of(*vals):
    return LanglandsParams(vals)


def test_ordering_examples():
    assert normalize_order(mu_of(-1j, 1j)).entries == (1j, -1j)
    assert normalize_order(mu_of(2j, 0, -2j)).entries == (2j, 0, -2j)
    got = normalize_order(mu_of(0, 0.1 + 1j, -0.1 - 1j)).entries
    assert got == (0.1 + 1j, 0, -0.1 - 1j)


def test_trace_recentering_and_rejection():
    mu = LanglandsParams([1e-11, 0.0])
    assert abs(sum(mu.entries)) < 1e-15
    with pytest.raises(ParameterError):
        LanglandsParams([1e-6, 0.0])
    with pytest.raises(ParameterError):
        LanglandsParams([0.0])
    with pytest.raises(ParameterError):
        LanglandsParams([float("nan"), 0.0])


def test_json_round_trip_and_schema():
    mu = mu_of(0.5 + 1j, -0.5 - 1j)
    assert LanglandsParams.from_json(mu.to_json()) == mu
    with pytest.raises(SchemaError):
        LanglandsParams.from_json('{"n": 3, "mu": [[0, 1], [0, -1]]}')
    with pytest.raises(SchemaError):
        parse_mu("a,b")


def test_t_mu_examples():
    assert t_mu(mu_of(1j, -1j)) == 2
    assert t_mu(mu_of(10j, -10j)) == 10
    assert t_mu(mu_of(0, 0, 0)) == 2


def test_laplace_examples():
    for t in (0.0, 1.0, 3.5):
        assert laplace_eigenvalue(mu_of(1j * t, -1j * t)) == pytest.approx(0.25 + t * t)
    assert laplace_eigenvalue(mu_of(0, 0, 0)) == pytest.approx(1.0)
    assert laplace_eigenvalue(mu_of(1j, -1j)) == pytest.approx(1.25)


def test_c_mu_eps_examples():
    assert c_mu_eps(mu_of(0, 0), 0.3) == 1.0
    # |1+20i|^(-1/3+0.01) at 30 digits: 0.379453293280...
    assert c_mu_eps(mu_of(10j, -10j), 0.01) == pytest.approx(0.37945329328, rel=1e-10)
    assert round(c_mu_eps(mu_of(10j, -10j), 0.01), 4) == 0.3795
    assert c_mu_eps(mu_of(1j, 0, -1j), 0.01) == pytest.approx(abs(1 + 2j) ** (-2 / 3 + 0.04))


def test_c_tilde_examples():
    assert c_tilde(mu_of(0, 0), 0.5) == 1.0
    assert c_tilde(mu_of(10j, -10j), 0.5) == pytest.approx(abs(1 + 20j))
    assert c_tilde(mu_of(1j, 0, -1j), 0.5) == pytest.approx(abs(1 + 2j) ** 3.5)


def test_c_hat_examples():
    assert c_hat(mu_of(0, 0), 0.5) == pytest.approx(1.0)
    assert c_hat(mu_of(10j, -10j), 0.5) == pytest.approx(abs(1 + 20j) ** 0.5)
    got = c_hat(mu_of(2j, 1j, -1j, -2j), 0.25)
    assert got == pytest.approx(abs(0.5 + 4j) ** 2.25 * abs(0.5 + 2j) ** 0.25)


def test_spectral_and_dual_examples():
    t = 1.7
    assert spectral_params(mu_of(1j * t, -1j * t)).nu[0] == pytest.approx((1 + 2j * t) / 2)
    assert spectral_params(mu_of(0, 0, 0)).nu == pytest.approx((1 / 3, 1 / 3))
    assert spectral_params(mu_of(2j, 0, -2j)).nu == pytest.approx(((1 + 2j) / 3, (1 + 2j) / 3))
    assert dual_params(mu_of(1j, -1j)).entries == (1j, -1j)
    assert dual_params(mu_of(3j, -1j, -2j)).entries == (2j, 1j, -3j)
    fixed = mu_of(0.1 + 1j, 0, -0.1 - 1j)
    assert dual_params(fixed) == fixed


def test_classify_examples():
    c = classify(mu_of(1j, -1j), c_gen=0.5)
    assert (c.tempered, c.unitary, c.lrs_admissible, c.generic) == (True, True, True, True)
    c = classify(mu_of(0.3, -0.3))
    assert not c.tempered and c.unitary and c.lrs_admissible
    assert lrs_bound(2) == pytest.approx(0.3)
    c = classify(mu_of(0, 0, 0), c_gen=1e-9)
    assert c.tempered and not c.generic
    with pytest.raises(ParameterError):
        classify(mu_of(0, 0), c_gen=0)


tempered = st.lists(st.floats(-30, 30), min_size=1, max_size=4).map(
    lambda xs: LanglandsParams([1j * x for x in xs] + [-1j * sum(xs)]))


@given(tempered)
def test_tempered_is_unitary_and_lrs(mu):
    c = classify(mu)
    assert c.tempered and c.unitary and c.lrs_admissible


@given(tempered)
def test_dual_is_involution(mu):
    assert dual_params(dual_params(mu)) == mu


@given(tempered, st.floats(0.001, 0.2))
def test_c_mu_eps_at_most_one_for_small_eps(mu, eps):
    # each factor has base >= 1 and exponent -k/3 + k^2 eps <= 0 once eps <= 1/(3k)
    n = mu.n
    if eps <= 1 / (3 * n):
        assert c_mu_eps(mu, eps) <= 1 + 1e-12


@given(tempered)
def test_normalize_order_is_idempotent_and_ordered(mu):
    o = normalize_order(mu)
    assert o.ordered
    assert normalize_order(o) == o
    assert sorted(o.entries, key=lambda v: (v.imag, v.real)) == \
        sorted(mu.entries, key=lambda v: (v.imag, v.real))


@given(tempered)
def test_t_mu_floor(mu):
    assert t_mu(mu) >= 2
    assert t_mu(mu) == pytest.approx(max(2.0, max(abs(v) for v in mu)))


def test_laplace_is_real_for_unitary():
    assert math.isclose(laplace_eigenvalue(mu_of(0.2, -0.2)).real, 0.25 - 0.04)
