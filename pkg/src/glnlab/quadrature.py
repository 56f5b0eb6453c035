"""Node/weight generators for double-exponential rules and log-scaled sums."""

import math

import numpy as np


def tanh_sinh(h, tmax=3.5):
    """Nodes in (-1, 1) and weights for the tanh-sinh rule with step h.

    Returns ``(x, w, dist)`` with ``dist`` the distance 1 - |x| computed
    without cancellation.
    """
    t = np.arange(-tmax, tmax + 0.5 * h, h)
    u = 0.5 * math.pi * np.sinh(t)
    x = np.tanh(u)
    w = h * 0.5 * math.pi * np.cosh(t) / np.cosh(u) ** 2
    dist = 1.0 / (np.exp(np.abs(u)) * np.cosh(u))
    return x, w, dist


def exp_sinh(h, tmin=-4.0, tmax=3.2):
    """Nodes in (0, inf) and weights for the exp-sinh rule with step h."""
    t = np.arange(tmin, tmax + 0.5 * h, h)
    x = np.exp(0.5 * math.pi * np.sinh(t))
    w = h * 0.5 * math.pi * np.cosh(t) * x
    return x, w


def _om_phi(t, alpha, beta):
    """Ooura-Mori transform and its derivative."""
    t = np.asarray(t, float)
    phi = np.empty_like(t)
    dphi = np.empty_like(t)
    small = np.abs(t) < 1e-8
    c1 = 2.0 + alpha + beta
    c2 = 0.5 * (beta - alpha)
    phi[small] = 1.0 / c1
    dphi[small] = 0.5 - c2 / c1**2
    ts = t[~small]
    u = 2 * ts + alpha * (-np.expm1(-ts)) + beta * np.expm1(ts)
    du = 2 + alpha * np.exp(-ts) + beta * np.exp(ts)
    one_minus = -np.expm1(-u)
    eu = np.exp(-u)
    phi[~small] = ts / one_minus
    dphi[~small] = (one_minus - ts * eu * du) / one_minus**2
    return phi, dphi


def ooura_mori(omega, h, kind, tmin=-6.0, tmax=4.5):
    """Rule for the integral over (0, inf) of f(x) sin(omega x) or cos(omega x).

    Returns nodes and weights with the trigonometric factor folded into the
    weights, so the integral is approximated by ``sum(w * f(x))``.
    """
    m = math.pi / h
    beta = 0.25
    alpha = beta / math.sqrt(1 + m * math.log1p(m) / (4 * math.pi))
    k = np.arange(math.floor(tmin / h), math.ceil(tmax / h) + 1)
    t = k * h if kind == "sin" else k * h - 0.5 * h
    phi, dphi = _om_phi(t, alpha, beta)
    x = m * phi / omega
    arg = m * phi
    # m*t is a multiple of pi (sin) or an odd multiple of pi/2 (cos), so
    # evaluate the oscillating factor from the small difference phi - t
    delta = m * (phi - t)
    if kind not in ("sin", "cos"):
        raise ValueError(kind)
    trig = np.where(k % 2 == 0, 1.0, -1.0) * np.sin(delta)
    trig = np.where(t < 1.0, np.sin(arg) if kind == "sin" else np.cos(arg), trig)
    w = (m / omega) * h * trig * dphi
    keep = x > 0
    return x[keep], w[keep]


def log_trapezoid(logf, h, axis=-1):
    """Trapezoid sum of exp(logf) along an axis, as ``(mantissa, scale)``.

    ``logf`` is complex; the real part carries magnitude. End corrections are
    omitted because the integrands are negligible at the ends.
    """
    ref = np.max(logf.real, axis=axis, keepdims=True)
    ref = np.where(np.isfinite(ref), ref, 0.0)
    terms = np.exp(logf - ref)
    total = h * terms.sum(axis=axis)
    absum = h * np.abs(terms).sum(axis=axis)
    return total, np.squeeze(ref, axis=axis), absum
