"""Direct evaluation of the Jacquet integral over the unipotent group (n = 2, 3).

This is an independent route to the Jacquet-normalised Whittaker function,
valid when Re mu is strictly decreasing with gaps of at least 1/2. Fourier
integrals use the Ooura-Mori rule; the inner integral over u_13 uses
tanh-sinh and exp-sinh pieces split at the two quadratic minima.
"""

import math

import numpy as np

from .errors import ParameterError
from .params import LanglandsParams
from .quadrature import exp_sinh, ooura_mori, tanh_sinh
from .whittaker import WhittakerValue

MIN_GAP = 0.5
TWO_PI = 2 * math.pi


def _fourier_rule(h, tmax=4.5):
    """Nodes/weights on R for f -> integral of f(a) e(-a) da."""
    xc, wc = ooura_mori(TWO_PI, h, "cos", tmax=tmax)
    xs, ws = ooura_mori(TWO_PI, h, "sin", tmax=tmax)
    nodes = np.concatenate([xc, -xc, xs, -xs])
    weights = np.concatenate([wc, wc, -1j * ws, 1j * ws]).astype(complex)
    return nodes, weights


def _check(mu, g):
    mu = mu if isinstance(mu, LanglandsParams) else LanglandsParams(mu)
    n = mu.n
    if n not in (2, 3):
        raise ParameterError("the Jacquet integral oracle supports n = 2, 3")
    re = [v.real for v in mu]
    if any(re[i] - re[i + 1] < MIN_GAP for i in range(n - 1)):
        raise ParameterError(
            f"Re mu must decrease with gaps >= {MIN_GAP} for the integral to converge fast")
    g = np.asarray(g, float)
    if g.shape != (n, n):
        raise ParameterError(f"g must be {n}x{n}")
    if abs(np.linalg.det(g)) == 0:
        raise ParameterError("g is singular")
    return mu, g


def _cpow(base, expo):
    return np.exp(expo * np.log(base))


def _oracle2(mu, g, h, tmax):
    m1, m2 = mu
    det = abs(np.linalg.det(g))
    a, w = _fourier_rule(h, tmax)
    rows = g[0][None, :] + a[:, None] * g[1][None, :]
    d2 = np.linalg.norm(rows, axis=1)
    f = _cpow(det, 0.5 + m1) * _cpow(d2, -1.0 - m1 + m2)
    return complex(np.sum(w * f))


def _inner3(p, q, r3, alpha, beta, hc):
    """Integral over c of |q x (p + c r3)|^alpha |p + c r3|^beta, vectorised over rows."""
    rr = float(r3 @ r3)
    pr = p @ r3
    pp = np.einsum("ij,ij->i", p, p)
    c0 = -pr / rr
    w0 = np.sqrt(np.maximum(pp - pr * pr / rr, 1e-300)) / math.sqrt(rr)
    qp = np.cross(q, p)
    qr = np.cross(q, r3[None, :])
    qr2 = np.einsum("ij,ij->i", qr, qr)
    qpqr = np.einsum("ij,ij->i", qp, qr)
    qp2 = np.einsum("ij,ij->i", qp, qp)
    c1 = -qpqr / qr2
    w1 = np.sqrt(np.maximum(qp2 - qpqr**2 / qr2, 1e-300)) / np.sqrt(qr2)

    def integrand(c):
        d3sq = pp[:, None] + 2 * c * pr[:, None] + c * c * rr
        d23sq = qp2[:, None] + 2 * c * qpqr[:, None] + c * c * qr2[:, None]
        return np.exp(0.5 * alpha * np.log(d23sq) + 0.5 * beta * np.log(d3sq))

    left_is_0 = c0 <= c1
    cl = np.where(left_is_0, c0, c1)
    cr = np.where(left_is_0, c1, c0)
    wl = np.where(left_is_0, w0, w1)
    wr = np.where(left_is_0, w1, w0)
    xe, we = exp_sinh(hc)
    total = (integrand(cl[:, None] - wl[:, None] * xe[None, :]) * (wl[:, None] * we[None, :])).sum(axis=1)
    total += (integrand(cr[:, None] + wr[:, None] * xe[None, :]) * (wr[:, None] * we[None, :])).sum(axis=1)
    xt, wt, _ = tanh_sinh(hc)
    half = 0.5 * (cr - cl)
    mid = 0.5 * (cr + cl)
    inner = integrand(mid[:, None] + half[:, None] * xt[None, :]) * (half[:, None] * wt[None, :])
    total += np.where(half > 0, inner.sum(axis=1), 0.0)
    return total


def _oracle3(mu, g, h, tmax, chunk=4096):
    m1, m2, m3 = mu
    r1, r2, r3 = g
    det = abs(np.linalg.det(g))
    alpha = -1.0 - m1 + m2
    beta = -1.0 - m2 + m3
    a, wa = _fourier_rule(h, tmax)
    aa, bb = np.meshgrid(a, a, indexing="ij")
    ww = np.outer(wa, wa)
    aa, bb, ww = aa.ravel(), bb.ravel(), ww.ravel()
    total = 0j
    for k0 in range(0, len(aa), chunk):
        sa, sb = aa[k0:k0 + chunk], bb[k0:k0 + chunk]
        p = r1[None, :] + sa[:, None] * r2[None, :]
        q = r2[None, :] + sb[:, None] * r3[None, :]
        f = _inner3(p, q, r3, alpha, beta, h)
        total += complex(np.sum(ww[k0:k0 + chunk] * f))
    return complex(_cpow(det, 1.0 + m1)) * total


def jacquet_integral_oracle(mu, g, cfg=None, steps=((0.1, 4.5), (0.075, 5.5))):
    """Evaluate the Jacquet integral at g directly.

    The error estimate is the difference between two rules that differ in
    both step size and truncation point.
    """
    mu, g = _check(mu, g)
    vals = []
    for h, tmax in steps:
        if mu.n == 2:
            vals.append(_oracle2(mu.entries, g, h, tmax))
        else:
            vals.append(_oracle3(mu.entries, g, h, tmax))
    val = vals[-1]
    err = abs(vals[-1] - vals[0])
    return WhittakerValue(val, err, "jacquet", math.log(abs(val)) if val else -math.inf)
