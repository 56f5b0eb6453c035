import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import assume, given
from hypothesis import strategies as st

from glnlab import geometry as geo
from glnlab.errors import ParameterError, SingularMatrixError


def rot(theta):
    c, s = math.cos(theta), math.sin(theta)
    return np.array([[c, -s], [s, c]])


def test_iwasawa_examples():
    f = geo.iwasawa(np.eye(3))
    for m in (f.u, f.t, f.k):
        assert np.allclose(m, np.eye(3), atol=1e-15)
    f = geo.iwasawa(np.diag([2.0, 1.0]))
    assert np.allclose(f.u, np.eye(2)) and np.allclose(f.t, np.diag([2.0, 1.0]))
    assert np.allclose(f.k, np.eye(2))
    u = np.array([[1.0, 1.0], [0.0, 1.0]])
    t = np.diag([3.0, 1.0])
    k = rot(math.pi / 7)
    f = geo.iwasawa(u @ t @ k)
    assert np.max(np.abs(f.u - u)) < 1e-11
    assert np.max(np.abs(f.t - t)) < 1e-11
    assert np.max(np.abs(f.k - k)) < 1e-11


matrices = st.integers(2, 5).flatmap(
    lambda n: st.lists(st.floats(-3, 3), min_size=n * n, max_size=n * n).map(
        lambda v: np.array(v).reshape(n, n)))


@given(matrices)
def test_iwasawa_round_trip(g):
    assume(np.linalg.cond(g) < 1e6)
    f = geo.iwasawa(g)
    assert np.allclose(f.u @ f.t @ f.k, g, atol=1e-10 * max(1, np.abs(g).max()))
    assert np.all(np.diag(f.t) > 0)
    assert np.allclose(f.k @ f.k.T, np.eye(len(g)), atol=1e-12)
    assert np.allclose(np.tril(f.u, -1), 0) and np.allclose(np.diag(f.u), 1)


def test_singular_rejected():
    with pytest.raises(SingularMatrixError):
        geo.iwasawa(np.array([[1.0, 2.0], [2.0, 4.0]]))


def test_cartan_examples():
    c = geo.cartan(rot(0.3))
    assert np.allclose(c.alpha, 0, atol=1e-15) and c.norm < 1e-15
    c = geo.cartan(np.diag([math.e, 1.0, 1 / math.e]))
    assert np.allclose(c.alpha, [1, 0, -1]) and c.norm == pytest.approx(math.sqrt(2))


@given(matrices, st.floats(0.1, 10))
def test_cartan_scale_and_orthogonal_invariance(g, c):
    assume(np.linalg.cond(g) < 1e6)
    q, _ = np.linalg.qr(np.arange(1, len(g) ** 2 + 1, dtype=float).reshape(len(g), -1) + np.eye(len(g)))
    a = geo.cartan(g).alpha
    assert np.allclose(geo.cartan(c * q @ g).alpha, a, atol=1e-9)
    assert abs(a.sum()) < 1e-12


def test_y_entry_examples():
    z = geo.TorusPoint("G", (2.0, 5.0))
    assert geo.y_entry(z, 2, 2) == 1.0
    assert geo.y_entry(z, 3, 1) == pytest.approx(10.0)
    assert geo.y_entry(z, 1, 3) == pytest.approx(0.1)


def test_conventions_are_reversed():
    g = geo.TorusPoint("G", (2.0, 3.0, 5.0))
    assert g.to("S").y == (5.0, 3.0, 2.0)
    assert g.to("S").to("G") == g
    assert np.allclose(g.t, g.to("S").t)


def test_entries_identity():
    z = geo.random_siegel_point(np.random.default_rng(1), 3)
    r = geo.conjugated_entries(z, np.eye(3, dtype=int))
    assert np.allclose(r.direct, np.eye(3), atol=1e-12)


@given(st.integers(2, 4), st.integers(0, 2**32))
def test_entries_two_routes(n, seed):
    rng = np.random.default_rng(seed)
    z = geo.random_siegel_point(rng, n)
    r = geo.conjugated_entries(z, geo.random_unimodular(rng, n))
    assert r.max_difference <= 1e-10 * max(1.0, np.abs(r.direct).max())
    for i in range(n):
        for j in range(n):
            assert r.coefficients[i, j, i, j] == 1.0


def test_entries_rejects_non_unimodular():
    z = geo.random_siegel_point(np.random.default_rng(2), 2)
    with pytest.raises(ParameterError):
        geo.conjugated_entries(z, np.array([[2, 0], [0, 1]]))


def test_ycal_examples():
    assert geo.mathcal_y(geo.TorusPoint("G", (1.0, 1.0, 1.0))) == 1.0
    assert geo.mathcal_y(geo.TorusPoint("G", (4.0, 1.0))) == pytest.approx(4.0)


@given(st.lists(st.floats(math.sqrt(3) / 2, 1e3), min_size=1, max_size=4))
def test_ycal_lower_bound(y):
    value, bound, ok = geo.mathcal_y_lower_bound_check(geo.TorusPoint("G", y))
    assert ok
    assert value >= math.log(math.prod(y)) / len(y) - 1e-12


@given(st.lists(st.fractions(Fraction(1, 2), Fraction(50)), min_size=1, max_size=4))
def test_ycal_exact_rational(y):
    assert geo.mathcal_y_exact_check(y)


def test_siegel_membership_examples():
    assert geo.siegel_membership(np.eye(3), (1.0, 1.0))
    assert not geo.siegel_membership(np.eye(2), (0.8,))
    x = np.eye(2)
    x[0, 1] = 0.5
    assert geo.siegel_membership(x, (1.0,))
    x[0, 1] = 0.5000001
    assert not geo.siegel_membership(x, (1.0,))
