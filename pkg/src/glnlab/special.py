"""Complex log-gamma, the archimedean gamma factor and K-Bessel of complex order."""

import math
from dataclasses import dataclass

import numpy as np

from .errors import NonConvergenceError, ParameterError, PoleError

LOG_PI = math.log(math.pi)
LOG_2PI_HALF = 0.5 * math.log(2 * math.pi)
EPS = np.finfo(float).eps
NODE_BUDGET = 2**16

# B_{2k} / (2k (2k-1)) for k = 1..9
_STIRLING = np.array([
    1 / 12, -1 / 360, 1 / 1260, -1 / 1680, 1 / 1188,
    -691 / 360360, 1 / 156, -3617 / 122400, 43867 / 244188,
])


def loggamma(z):
    """Principal-branch-free log Gamma for complex arrays.

    The imaginary part is a continuous choice along the recurrence, which is
    all the callers need since results are exponentiated or differenced.
    """
    z = np.asarray(z, dtype=complex)
    scalar = z.ndim == 0
    z = np.atleast_1d(z).copy()
    shift = np.zeros_like(z)
    need = z.real < 10.0
    while np.any(need):
        shift[need] += np.log(z[need])
        z[need] += 1.0
        need = z.real < 10.0
    w = 1.0 / z
    w2 = w * w
    series = np.zeros_like(z)
    for c in _STIRLING[::-1]:
        series = series * w2 + c
    out = (z - 0.5) * np.log(z) - z + LOG_2PI_HALF + series * w - shift
    return out[0] if scalar else out


def log_gamma_r(s):
    """log of pi^(-s/2) Gamma(s/2), raising near the poles."""
    s = np.asarray(s, dtype=complex)
    half = s / 2
    near = (np.abs(half.imag) < 5e-9) & (half.real < 0.5)
    if np.any(near):
        k = np.round(half.real[near])
        if np.any(np.abs(s[near] - 2 * k) < 1e-8):
            raise PoleError("gamma_r evaluated at a pole")
    return -0.5 * s * LOG_PI + loggamma(half)


def gamma_r(s):
    out = np.exp(log_gamma_r(s))
    return complex(out) if np.ndim(out) == 0 else out


@dataclass(frozen=True)
class BesselEval:
    value: complex
    scaled_value: complex
    abs_error_estimate: float
    log_abs: float


def _log_sin_pi(nu):
    z = math.pi * nu
    if z.imag >= 0:
        return -1j * z + np.log((np.exp(2j * z) - 1) / 2j)
    return 1j * z + np.log((1 - np.exp(-2j * z)) / 2j)


def _series(nu, x):
    """K from the difference of the two I series; returns mantissa, scale, error."""
    x = np.asarray(x, float)
    lx = np.log(x / 2)
    kmax = 60 + int(np.max(x))
    k = np.arange(1, kmax + 1)
    parts = []
    for sgn in (-1.0, 1.0):
        v = sgn * nu
        steps = 2 * lx[:, None] - np.log(k)[None, :] - np.log(v + k)[None, :]
        logs = np.concatenate([np.zeros((len(x), 1)), np.cumsum(steps, axis=1)], axis=1)
        logs = logs + (v * lx - loggamma(v + 1.0))[:, None]
        ref = np.max(logs.real, axis=1)
        terms = np.exp(logs - ref[:, None])
        tail = np.abs(terms[:, -1])
        # rounding in the accumulated logs, absolute in the exponent
        phase = np.abs(logs).max(axis=1) + kmax
        parts.append((terms.sum(axis=1), ref, np.abs(terms).sum(axis=1) * phase, tail))
    (m1, r1, a1, t1), (m2, r2, a2, t2) = parts
    ref = np.maximum(r1, r2)
    m1, m2 = m1 * np.exp(r1 - ref), m2 * np.exp(r2 - ref)
    absum = a1 * np.exp(r1 - ref) + a2 * np.exp(r2 - ref)
    tail = t1 * np.exp(r1 - ref) + t2 * np.exp(r2 - ref)
    pref = math.log(math.pi / 2) - _log_sin_pi(nu)
    diff = m1 - m2
    scale = ref + pref.real
    mant = diff * np.exp(1j * pref.imag)
    err = 4 * EPS * absum + tail
    return mant, scale, err, tail


def _contour_geometry(nu, x, depth):
    tau, a = nu.imag, nu.real
    delta = min(math.pi / 4, 1.0 / (abs(tau) + 1.0))
    if tau == 0:
        theta = np.zeros_like(x)
    else:
        theta = math.copysign(1.0, tau) * np.minimum(
            np.arcsin(np.minimum(1.0, abs(tau) / x)), math.pi / 2 - delta)
    c = x * np.cos(theta)
    tstar = np.arcsinh(a / c)
    s = np.arccosh(1.0 + depth / c)
    lo = np.minimum(tstar, 0.0) - s
    hi = np.maximum(tstar, 0.0) + s
    scale = -c * np.cosh(tstar) + a * tstar - tau * theta
    strip = math.pi / 2 - np.abs(theta)
    h0 = np.minimum(np.minimum(0.5, 0.5 * strip), 0.7 / np.sqrt(c))
    return theta, lo, hi, scale, h0


def _quadrature(nu, x, tol):
    depth = max(50.0, math.log(1.0 / tol) + 20.0)
    theta, lo, hi, scale, h0 = _contour_geometry(nu, x, depth)
    n0 = np.ceil((hi - lo) / h0)
    bucket = np.ceil(np.log2(np.maximum(n0, 8))).astype(int)
    mant = np.zeros(len(x), complex)
    err = np.zeros(len(x))
    for b in np.unique(bucket):
        idx = np.nonzero(bucket == b)[0]
        for chunk in np.array_split(idx, max(1, len(idx) * 2**int(b) // 2**20 + 1)):
            m, e = _quad_group(nu, x[chunk], theta[chunk], lo[chunk], hi[chunk],
                               scale[chunk], 2**int(b), tol)
            mant[chunk], err[chunk] = m, e
    return mant, scale, err


def _integrand(nu, x, theta, lo, h, scale, kk):
    t = lo[:, None] + h[:, None] * kk[None, :]
    w = t + 1j * theta[:, None]
    phi = -x[:, None] * np.cosh(w) + nu * w - scale[:, None]
    return np.exp(phi)


def _quad_group(nu, x, theta, lo, hi, scale, n, tol):
    active = np.arange(len(x))
    mant = np.zeros(len(x), complex)
    err = np.zeros(len(x))
    h = (hi - lo) / n
    f = _integrand(nu, x, theta, lo, h, scale, np.arange(n + 1, dtype=float))
    sums = f.sum(axis=1) - 0.5 * (f[:, 0] + f[:, -1])
    abss = np.abs(f).sum(axis=1)
    while True:
        if n > NODE_BUDGET:
            raise NonConvergenceError(
                f"K-Bessel quadrature for nu={nu} exceeded {NODE_BUDGET} nodes")
        hh = h[active] / 2
        g = _integrand(nu, x[active], theta[active], lo[active], hh, scale[active],
                       np.arange(1, 2 * n, 2, dtype=float))
        new_sums = sums[active] + g.sum(axis=1)
        new_abs = abss[active] + np.abs(g).sum(axis=1)
        val = 0.5 * hh * new_sums
        diff = np.abs(val - 0.5 * h[active] * sums[active])
        # rounding in the exponent scales with its magnitude
        floor = 64 * EPS * 0.5 * hh * new_abs * (1.0 + np.abs(scale[active]) + x[active])
        target = tol * np.minimum(np.exp(np.minimum(-scale[active], 700.0)), np.abs(val))
        done = diff <= np.maximum(target, floor)
        mant[active[done]] = val[done]
        err[active[done]] = np.maximum(diff[done], floor[done])
        keep = ~done
        if not np.any(keep):
            return mant, err
        sums = np.zeros(len(x), complex)
        abss = np.zeros(len(x))
        sums[active[keep]] = new_sums[keep]
        abss[active[keep]] = new_abs[keep]
        h = h.copy()
        h[active] = hh
        active = active[keep]
        n *= 2


def _check_args(nu, x):
    nu = complex(nu)
    if abs(nu.real) > 10:
        raise ParameterError("|Re nu| must be at most 10")
    x = np.asarray(x, dtype=float)
    if np.any(~(x > 0)) or np.any(~np.isfinite(x)):
        raise ParameterError("K-Bessel argument must be finite and positive")
    return nu, x


def log_bessel_k(nu, x, tol=1e-12):
    """K_nu(x) for an array x as ``mantissa * exp(scale)`` plus an error bound.

    The error bound is in mantissa units. ``scale`` is real.
    """
    nu, x = _check_args(nu, x)
    shape = x.shape
    x = x.ravel()
    mant = np.zeros(len(x), complex)
    scale = np.zeros(len(x))
    err = np.zeros(len(x))
    tau = abs(nu.imag)
    use_series = np.zeros(len(x), bool)
    # |sin(pi nu)|^2 = sin^2(pi a) + sinh^2(pi tau); the series needs it away from 0
    if math.sin(math.pi * nu.real) ** 2 + math.sinh(min(math.pi * tau, 50.0)) ** 2 >= 0.01:
        use_series = x <= max(2.0, math.sqrt(8.0 * tau))
    if np.any(use_series):
        idx = np.nonzero(use_series)[0]
        m, s, e, tail = _series(nu, x[idx])
        # keep the series unless it is truncated too early; its rounding
        # floor matches that of the quadrature in this region
        target = tol * np.minimum(np.exp(np.minimum(-s, 700.0)), np.abs(m))
        ok = (e <= target) | (tail <= 1e-3 * e)
        mant[idx[ok]], scale[idx[ok]], err[idx[ok]] = m[ok], s[ok], e[ok]
        use_series[idx[~ok]] = False
    rest = np.nonzero(~use_series)[0]
    if len(rest):
        m, s, e = _quadrature(nu, x[rest], tol)
        mant[rest], scale[rest], err[rest] = m, s, e
    return mant.reshape(shape), scale.reshape(shape), err.reshape(shape)


def bessel_k(nu, x, tol=1e-12):
    if not tol > 0:
        raise ParameterError("tol must be positive")
    nu = complex(nu)
    m, s, e = log_bessel_k(nu, np.array([float(x)]), tol)
    m, s, e = complex(m[0]), float(s[0]), float(e[0])
    if m == 0:
        log_abs = -math.inf
        value = scaled = 0j
    else:
        if nu.real == 0 or nu.imag == 0:
            # K is real for real or purely imaginary order
            m = complex(m.real, 0.0) if m.real != 0 else m
        log_abs = math.log(abs(m)) + s
        phase = m / abs(m)
        value = phase * math.exp(log_abs) if log_abs > -745 else 0j
        scaled = phase * math.exp(log_abs + math.pi * abs(nu.imag) / 2)
    return BesselEval(complex(value), complex(scaled), e * math.exp(s), log_abs)


def kbound_rhs(nu, y, eps):
    nu = complex(nu)
    if abs(nu.real) > 1e-12:
        raise ParameterError("kbound_rhs needs an imaginary order")
    return math.exp(log_kbound_rhs(nu, y, eps))


def log_kbound_rhs(nu, y, eps):
    nu = complex(nu)
    if y <= 0 or eps <= 0:
        raise ParameterError("y and eps must be positive")
    return ((-1 / 3 + eps) * math.log(abs(1 + 2 * nu)) - eps * math.log(y)
            - y / max(2.0, abs(nu)))


def kboundbis_rhs(nu, y, kappa, sigma, n=2):
    """Envelope for non-tempered orders; ``sigma`` must lie in [kappa, n*kappa]."""
    nu = complex(nu)
    if y <= 0 or kappa <= 0:
        raise ParameterError("y and kappa must be positive")
    if not kappa <= sigma <= n * kappa:
        raise ParameterError(f"sigma={sigma} outside [{kappa}, {n * kappa}]")
    return math.exp(sigma * math.log(abs(kappa + nu)) - sigma * math.log(y)
                    - y / max(2.0, abs(nu)))
