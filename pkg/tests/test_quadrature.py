import math

import numpy as np
import pytest

from glnlab import quadrature as q


def test_tanh_sinh():
    x, w, dist = q.tanh_sinh(0.05)
    assert np.sum(w * np.sqrt(dist * (2 - dist))) == pytest.approx(math.pi / 2, rel=1e-13)
    assert np.allclose(dist, 1 - np.abs(x), atol=1e-15)


def test_exp_sinh():
    x, w = q.exp_sinh(0.05)
    assert np.sum(w * np.exp(-x)) == pytest.approx(1.0, rel=1e-13)


@pytest.mark.parametrize("omega", [1.0, 2 * math.pi, 10.0])
def test_ooura_mori(omega):
    x, w = q.ooura_mori(omega, 0.05, "cos")
    assert np.sum(w * np.exp(-x)) == pytest.approx(1 / (1 + omega**2), rel=1e-10)
    x, w = q.ooura_mori(omega, 0.05, "sin")
    assert np.sum(w / x) == pytest.approx(math.pi / 2, rel=1e-10)


def test_log_trapezoid():
    h = 0.01
    u = np.arange(-40, 40, h)
    mant, scale, _ = q.log_trapezoid(-u**2 + 500.0 + 0j, h)
    assert mant * math.exp(scale - 500.0) == pytest.approx(math.sqrt(math.pi), rel=1e-13)
