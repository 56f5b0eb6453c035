"""Spherical Whittaker functions on GL(n, R) through Stade's recursion.

Three normalisations are exposed: the recursion function W* in ratio
coordinates (convention S), the completed function W on the torus, and the
Jacquet-normalised function obtained by dividing by the product of
Gamma_R(1 + mu_j - mu_k). Values are carried internally as
``mantissa * exp(scale)`` so that nothing underflows at large y.
"""

import math
import threading
from dataclasses import dataclass

import numpy as np

from . import special
from .errors import DepthError, NonConvergenceError, ParameterError, PoleError
from .geometry import TorusPoint, iwasawa, torus_from_t
from .params import LanglandsParams, normalize_order

EPS = np.finfo(float).eps
TWO_PI = 2 * math.pi
MAX_N = 5
_MP_LOCK = threading.Lock()


@dataclass(frozen=True)
class QuadratureConfig:
    tol: float = 1e-10
    max_depth: int = 10
    u_cutoff: float = 30.0

    def __post_init__(self):
        if not (self.tol >= 1e-12 and self.tol < 1):
            raise ParameterError("tol must lie in [1e-12, 1)")
        if not 1 <= self.max_depth <= 14:
            raise ParameterError("max_depth must lie in [1, 14]")
        if not self.u_cutoff > 0:
            raise ParameterError("u_cutoff must be positive")


DEFAULT_CFG = QuadratureConfig()


@dataclass(frozen=True)
class WhittakerValue:
    value: complex
    abs_error_estimate: float
    kind: str
    log_abs: float = float("nan")


def _value(mant, scale, err, kind):
    mant = complex(mant)
    if mant == 0:
        return WhittakerValue(0j, float(err) * math.exp(min(scale, 700.0)), kind, -math.inf)
    log_abs = math.log(abs(mant)) + scale
    phase = mant / abs(mant)
    value = phase * math.exp(log_abs) if log_abs > -745 else 0j
    return WhittakerValue(complex(value), float(err) * math.exp(scale), kind, log_abs)


def _mu(mu):
    mu = mu if isinstance(mu, LanglandsParams) else LanglandsParams(mu)
    if mu.n > MAX_N:
        raise DepthError(f"recursion supports n <= {MAX_N}, got n={mu.n}")
    return mu


def _log_k(nu, x, tol):
    """Complex log of K_nu on an array, with relative error."""
    m, s, e = special.log_bessel_k(nu, x, tol)
    with np.errstate(divide="ignore"):
        out = np.log(m) + s
        rel = np.where(m != 0, e / np.maximum(np.abs(m), 1e-300), np.inf)
    return out, rel


def _log_args(logy, *log_factors):
    """log of 2*pi*y*sqrt(prod factors) given logs of each factor."""
    out = math.log(TWO_PI) + logy
    for f in log_factors:
        out = out + 0.5 * f
    return out


def _softplus2(v):
    """log(1 + e^{2v}) without overflow."""
    return np.logaddexp(0.0, 2.0 * v)


# ---------------------------------------------------------------------------
# n = 2


def star_n2_log(mu, y, tol=1e-12):
    """W* for n=2 (twice K_nu(2 pi y)) as complex logs on an array of y."""
    nu = (mu[0] - mu[1]) / 2
    y = np.asarray(y, float)
    lk, rel = _log_k(nu, TWO_PI * y, tol)
    return lk + math.log(2.0), rel


def whittaker_n2(nu, y, tol=1e-12):
    """Jacquet-normalised value 2 pi^(1/2+nu) sqrt(y) K_nu(2 pi y) / Gamma(1/2+nu)."""
    nu = complex(nu)
    if y <= 0:
        raise ParameterError("y must be positive")
    half = 0.5 + nu
    if abs(half.imag) < 1e-6 and half.real < 0.5 and abs(half.real - round(half.real)) < 1e-6:
        raise PoleError("Gamma(1/2+nu) has a pole here")
    ev = special.bessel_k(nu, TWO_PI * y, tol)
    if ev.log_abs == -math.inf:
        return WhittakerValue(0j, 0.0, "jacquet", -math.inf)
    logk = ev.log_abs + 1j * np.angle(ev.value if ev.value != 0 else ev.scaled_value)
    pref = math.log(2.0) + half * special.LOG_PI + 0.5 * math.log(y) - special.loggamma(half)
    lv = complex(pref + logk)
    rel = ev.abs_error_estimate / math.exp(ev.log_abs)
    val = np.exp(lv) if lv.real > -745 else 0j
    return WhittakerValue(complex(val), float(abs(val) * rel + 4 * EPS * abs(val)),
                          "jacquet", lv.real)


# ---------------------------------------------------------------------------
# n = 3 on tensor grids


@dataclass
class _Grid3:
    mant: np.ndarray
    scale: np.ndarray
    err: np.ndarray
    absum: np.ndarray
    vlo: float
    h: float
    nodes: int


def _mu3(mu):
    m1, m2, m3 = mu
    return (m1 - m3) / 2, (2 * m2 - m1 - m3) / 2


def _range3(nu, e, y1, y2, depth, cutoff):
    """Initial generous v-range for the n=3 integrand."""
    a = abs(nu)

    def edge(ymin):
        xc = 2 * max(TWO_PI * ymin, a) + depth + 5.0
        r = xc / (TWO_PI * ymin)
        return 0.5 * math.log(max(r * r - 1.0, 1.0)) + 1.0

    lo = -edge(np.min(y1)) - abs(e.real) * 2
    hi = edge(np.min(y2)) + abs(e.real) * 2
    return max(lo, -cutoff), min(hi, cutoff)


def _k_tables3(nu, y1, y2, v, tol):
    """log K factors on the v nodes; rows index y."""
    l1 = _log_args(np.log(y1)[:, None], _softplus2(-v)[None, :])
    l2 = _log_args(np.log(y2)[:, None], _softplus2(v)[None, :])
    k1, r1 = _log_k(nu, np.exp(l1), tol)
    k2, r2 = _log_k(nu, np.exp(l2), tol)
    return k1, k2, max(float(np.max(r1[np.isfinite(r1)], initial=0)),
                       float(np.max(r2[np.isfinite(r2)], initial=0)))


def _support3(k1, k2, ev, v, depth):
    """Smallest v-interval carrying every (a, b) integrand above its max - depth."""
    lo, hi = np.inf, -np.inf
    chunk = max(1, 2_000_000 // (k2.shape[0] * k2.shape[1]))
    for a0 in range(0, k1.shape[0], chunk):
        mag = (k1[a0:a0 + chunk, None, :].real + k2[None, :, :].real + ev.real[None, None, :])
        top = np.max(mag, axis=2, keepdims=True)
        live = mag >= top - depth
        idx = np.nonzero(live.any(axis=(0, 1)))[0]
        if len(idx):
            lo, hi = min(lo, v[idx[0]]), max(hi, v[idx[-1]])
    return lo, hi


def _sums3(k1, k2, ev, h):
    A, B, N = k1.shape[0], k2.shape[0], k1.shape[1]
    mant = np.empty((A, B), complex)
    half = np.empty((A, B), complex)
    absum = np.empty((A, B))
    scale = np.empty((A, B))
    phase = np.empty((A, B))
    chunk = max(1, 4_000_000 // max(1, B * N))
    for a0 in range(0, A, chunk):
        blk = k1[a0:a0 + chunk, None, :] + k2[None, :, :] + ev[None, None, :]
        ref = np.max(blk.real, axis=2, keepdims=True)
        ref = np.where(np.isfinite(ref), ref, 0.0)
        terms = np.exp(blk - ref)
        sl = slice(a0, a0 + chunk)
        mant[sl] = h * terms.sum(axis=2)
        half[sl] = 2 * h * terms[:, :, ::2].sum(axis=2)
        absum[sl] = h * np.abs(terms).sum(axis=2)
        scale[sl] = ref[:, :, 0]
        live = np.isfinite(blk.imag)
        phase[sl] = np.max(np.where(live, np.abs(blk.imag), 0.0), axis=2)
    return mant, half, absum, scale, phase


def _star3_grid(mu, y1, y2, cfg, strict=False):
    """W* for n=3 on the tensor grid y1 x y2 (convention S).

    In strict mode every point must reach relative tolerance; points whose
    integrand cancels beyond double precision are returned with
    ``err = inf`` so the caller can escalate.
    """
    y1 = np.atleast_1d(np.asarray(y1, float))
    y2 = np.atleast_1d(np.asarray(y2, float))
    tol = cfg.tol
    nu, e = _mu3(mu)
    ktol = max(1e-13, tol * 1e-2)
    depth = math.log(1.0 / tol) + 15.0
    vlo, vhi = _range3(nu, e, y1, y2, depth, cfg.u_cutoff)
    for _ in range(4):
        vc = np.linspace(vlo, vhi, 257)
        k1, k2, _ = _k_tables3(nu, y1, y2, vc, ktol)
        slo, shi = _support3(k1, k2, e * vc, vc, depth)
        if not np.isfinite(slo):
            raise NonConvergenceError("integrand vanished on the whole range")
        step = vc[1] - vc[0]
        grow = False
        if slo <= vc[1] and vlo > -cfg.u_cutoff:
            vlo, grow = max(vlo - 0.5 * (vhi - vlo), -cfg.u_cutoff), True
        if shi >= vc[-2] and vhi < cfg.u_cutoff:
            vhi, grow = min(vhi + 0.5 * (vhi - vlo), cfg.u_cutoff), True
        if not grow:
            vlo, vhi = max(vlo, slo - 2 * step), min(vhi, shi + 2 * step)
            break
    curv = TWO_PI * (np.max(y1) + np.max(y2)) * 1.5 + 1.0
    omega = abs(e.imag) + 2 * abs(nu.imag) + 1.0
    h0 = min((vhi - vlo) / 32, 0.8 / math.sqrt(curv), 1.5 / omega)
    n_nodes = int(math.ceil((vhi - vlo) / h0))
    n_nodes += n_nodes % 2
    h = (vhi - vlo) / n_nodes
    v = vlo + h * np.arange(n_nodes + 1)
    k1, k2, krel = _k_tables3(nu, y1, y2, v, ktol)
    for level in range(cfg.max_depth):
        mant, half, absum, scale, phase = _sums3(k1, k2, e * v, h)
        diff = np.abs(mant - half)
        floor = 8 * EPS * absum * (16.0 + phase) + 2 * krel * absum
        ok = diff <= np.maximum(0.5 * tol * np.abs(mant), floor)
        if np.all(ok):
            break
        if level == cfg.max_depth - 1 or 2 * n_nodes > special.NODE_BUDGET:
            raise NonConvergenceError(
                f"n=3 recursion did not converge with {n_nodes} nodes")
        h /= 2
        vm = v[:-1] + h
        m1, m2, kr = _k_tables3(nu, y1, y2, vm, ktol)
        krel = max(krel, kr)
        nk1 = np.empty((k1.shape[0], 2 * n_nodes + 1), complex)
        nk2 = np.empty((k2.shape[0], 2 * n_nodes + 1), complex)
        nk1[:, ::2], nk1[:, 1::2] = k1, m1
        nk2[:, ::2], nk2[:, 1::2] = k2, m2
        k1, k2 = nk1, nk2
        n_nodes *= 2
        v = vlo + h * np.arange(n_nodes + 1)
    err = np.maximum(diff, floor)
    if strict:
        err = np.where(err <= tol * np.abs(mant), err, np.inf)
    return _Grid3(8 * mant, scale, 8 * err, 8 * absum, vlo, h, n_nodes)


# ---------------------------------------------------------------------------
# multiprecision fallback for n = 3


def _mp_k(flint, nu, x):
    """acb K_nu(x), raising working precision when the enclosure is loose.

    The library's propagation of the radius of ``x`` is very pessimistic, so
    K is evaluated at the midpoint and the radius is propagated here using
    |K'/K| <~ 1 + |nu|/x.
    """
    prec = flint.ctx.prec
    xm = flint.acb(x.mid())
    xabs = abs(complex(xm))
    inherited = float(x.rad()) * (1 + abs(complex(nu)) / xabs) * 16 if xabs > 0 else 0.0
    try:
        for extra in (0, 64, 192, 512):
            flint.ctx.prec = prec + extra
            val = xm.bessel_k(nu)
            if val.is_finite() and (val == 0 or val.rad() <= abs(val).mid() * 2.0 ** (-prec + 8)):
                if inherited:
                    r = abs(val).mid() * inherited
                    val = val + flint.acb(flint.arb(0, r), flint.arb(0, r))
                return val
    finally:
        flint.ctx.prec = prec
    raise NonConvergenceError("multiprecision K-Bessel lost all accuracy")


def _star3_point_mp(mu, y1, y2, cfg, vlo, vhi, h, ratio, scale=0.0):
    """Recompute one n=3 value with arbitrary-precision arithmetic.

    ``ratio`` is the observed size of the integrand relative to the result,
    i.e. the number of digits that cancel. The result is returned divided
    by ``exp(scale)``.
    """
    import flint

    tol = cfg.tol
    nu_c, e_c = _mu3(mu)
    digits = math.log10(max(ratio, 10.0)) + math.log10(1.0 / tol) + 10
    with _MP_LOCK:
        saved = flint.ctx.prec
        try:
            for attempt in range(3):
                flint.ctx.prec = int(3.33 * digits) + 40
                res = _mp_trapezoid(flint, nu_c, e_c, y1, y2, cfg, vlo, vhi, h, digits, scale)
                if res is not None:
                    val, err, absum = res
                    if err <= tol * abs(val):
                        return val, err
                    digits += max(5.0, math.log10(absum / max(abs(val), 1e-300)))
                    continue
                digits *= 1.5
        finally:
            flint.ctx.prec = saved
    raise NonConvergenceError("multiprecision recursion did not converge")


def _mp_trapezoid(flint, nu_c, e_c, y1, y2, cfg, vlo, vhi, h, digits, scale):
    arb, acb = flint.arb, flint.acb
    nu = acb(nu_c.real, nu_c.imag)
    e = acb(e_c.real, e_c.imag)
    two_pi = arb.pi() * 2
    unscale = arb(-scale).exp()
    a1, a2 = two_pi * arb(y1), two_pi * arb(y2)
    # widen the range: cancelled digits must also be resolved in the tails
    pad = (digits * math.log(10) - math.log(1 / cfg.tol)) / max(1.0, math.sqrt(TWO_PI * min(y1, y2)))
    lo = arb(max(vlo - pad, -cfg.u_cutoff))
    span = min(vhi + pad, cfg.u_cutoff) - max(vlo - pad, -cfg.u_cutoff)
    n = int(math.ceil(span / h))
    hh = arb(span) / n

    def term(k):
        v = lo + hh * k
        x1 = a1 * (1 + (-2 * v).exp()).sqrt()
        x2 = a2 * (1 + (2 * v).exp()).sqrt()
        return (e * v).exp() * _mp_k(flint, nu, x1) * _mp_k(flint, nu, x2) * unscale

    total = acb(0)
    absum = 0.0
    for k in range(n + 1):
        t = term(k)
        if k in (0, n):
            t = t / 2
        total += t
        absum += abs(complex(t))
    prev = total * hh
    for _ in range(cfg.max_depth):
        hh = hh / 2
        n *= 2
        extra = acb(0)
        for k in range(1, n, 2):
            t = term(k)
            extra += t
            absum += abs(complex(t))
        total += extra
        cur = total * hh
        diff = abs(complex(cur - prev))
        val = 8 * complex(cur)
        rad = 8 * float(cur.rad())
        if 8 * diff <= 0.1 * cfg.tol * abs(val):
            return val, 8 * diff + rad, 8 * absum * float(hh)
        if n > special.NODE_BUDGET:
            return None
        prev = cur
    return None


# ---------------------------------------------------------------------------
# general n >= 4 (single points)


def _twists(mu):
    n = len(mu)
    return [(mu[i] + mu[n - 1 - i] - mu[0] - mu[n - 1]) / 2 for i in range(1, n - 1)]


def _child_params(mu):
    n = len(mu)
    shift = (mu[0] + mu[n - 1]) / (n - 2)
    return LanglandsParams([mu[i] + shift for i in range(1, n - 1)])


def _child_log(child, logy_grid, cfg):
    """log W*_{child} on a grid given per-axis log arguments (list of arrays)."""
    if child.n == 2:
        out, _ = star_n2_log(child.entries, np.exp(logy_grid[0]), max(1e-13, cfg.tol * 1e-2))
        return out
    if child.n == 3:
        sub = QuadratureConfig(max(1e-12, cfg.tol * 1e-2), cfg.max_depth, cfg.u_cutoff)
        g = _star3_grid(child.entries, np.exp(logy_grid[0]), np.exp(logy_grid[1]), sub)
        with np.errstate(divide="ignore"):
            return np.log(g.mant) + g.scale
    raise DepthError("child rank too large")


def _general_log_terms(mu, logy, los, h, ns, cfg, ktol):
    """Log integrand on the product grid, plus the largest K relative error."""
    n = mu.n
    m = n - 2
    nu = (mu[0] - mu[n - 1]) / 2
    vs = [los[i] + h * np.arange(ns[i]) for i in range(m)]
    shape = tuple(ns)
    total = np.zeros(shape, complex)
    krel = 0.0

    def axis_view(arr, axes):
        idx = [None] * m
        for a in axes:
            idx[a] = slice(None)
        return arr[tuple(idx)]

    for i in range(1, n):
        parts = []
        axes = []
        if i >= 2:
            parts.append(_softplus2(vs[i - 2]))
            axes.append(i - 2)
        if i <= n - 2:
            parts.append(_softplus2(-vs[i - 1]))
            axes.append(i - 1)
        if len(parts) == 1:
            larg = _log_args(logy[i - 1], parts[0])
            lk, rel = _log_k(nu, np.exp(larg), ktol)
        else:
            larg = _log_args(logy[i - 1], parts[0][:, None], parts[1][None, :])
            lk, rel = _log_k(nu, np.exp(larg), ktol)
        krel = max(krel, float(np.max(np.where(np.isfinite(rel), rel, 0.0))))
        total = total + axis_view(lk, axes)
    for i, ei in enumerate(_twists(mu.entries)):
        total = total + axis_view(ei * vs[i], [i])
    if n >= 4:
        child = _child_params(mu.entries)
        # child argument i is y_{i+1} e^{v_i - v_{i+1}}; on the grid the exponent
        # takes values (lo_i - lo_{i+1}) + d h for integer d
        d_axes = []
        for i in range(n - 3):
            d = np.arange(-(ns[i + 1] - 1), ns[i])
            d_axes.append(logy[i + 1] + los[i] - los[i + 1] + d * h)
        cw = _child_log(child, d_axes, cfg)
        index = []
        for i in range(n - 3):
            ki = np.arange(ns[i])
            kj = np.arange(ns[i + 1])
            diff = axis_view(ki, [i]) - axis_view(kj, [i + 1]) + (ns[i + 1] - 1)
            index.append(diff)
        total = total + cw[tuple(np.broadcast_arrays(*index))]
    return total, krel


def _star_general_point(mu, y, cfg):
    n = mu.n
    m = n - 2
    tol = cfg.tol
    ktol = max(1e-13, tol * 1e-2)
    logy = [math.log(v) for v in y]
    depth = math.log(1.0 / tol) + 15.0
    nu = (mu[0] - mu[n - 1]) / 2
    twist = max(abs(t.real) for t in _twists(mu.entries))
    span = []
    for i in range(m):
        xc = 2 * max(TWO_PI * min(y), abs(nu)) + depth + 5.0
        r = xc / (TWO_PI * min(y))
        edge = 0.5 * math.log(max(r * r - 1.0, 1.0)) + 1.0 + 2 * twist
        span.append((max(-edge - 2, -cfg.u_cutoff), min(edge + 2, cfg.u_cutoff)))
    # coarse support pass on a common step
    nc = 40
    hc = max(b - a for a, b in span) / nc
    los = [a for a, _ in span]
    ns = [int(math.ceil((b - a) / hc)) + 1 for a, b in span]
    logt, _ = _general_log_terms(mu, logy, los, hc, ns, cfg, ktol)
    mag = logt.real
    top = np.max(mag)
    live = mag >= top - depth
    new_span = []
    for i in range(m):
        other = tuple(j for j in range(m) if j != i)
        idx = np.nonzero(live.any(axis=other))[0]
        a = los[i] + hc * (idx[0] - 2)
        b = los[i] + hc * (idx[-1] + 2)
        new_span.append((max(a, span[i][0]), min(b, span[i][1])))
    curv = TWO_PI * max(y) * 3.0 + 1.0
    omega = 2 * abs(nu.imag) + max(abs(t.imag) for t in _twists(mu.entries)) + 1.0
    h = min(hc / 2, 0.8 / math.sqrt(curv), 1.5 / omega)
    los = [a for a, _ in new_span]
    prev = None
    for level in range(cfg.max_depth):
        ns = [int(math.ceil((b - a) / h)) + 1 for a, b in new_span]
        if math.prod(ns) > 40_000_000:
            raise NonConvergenceError("rank-%d recursion grid too large" % n)
        logt, krel = _general_log_terms(mu, logy, los, h, ns, cfg, ktol)
        mant, scale, absum = _log_sum_all(logt, h ** m)
        if prev is not None:
            pm, ps = prev
            diff = abs(mant - pm * math.exp(ps - scale))
            phase = float(np.max(np.abs(logt.imag[np.isfinite(logt.imag)]), initial=0))
            floor = 8 * EPS * absum * (16 + phase) + 2 * krel * absum
            if diff <= max(0.5 * tol * abs(mant), floor):
                err = max(diff, floor)
                c = 2.0 ** (2 * n - 3)
                return c * mant, scale, c * err, c * absum
        prev = (mant, scale)
        h /= 2
    raise NonConvergenceError(f"rank-{n} recursion did not converge")


def _log_sum_all(logt, weight):
    ref = float(np.max(logt.real))
    terms = np.exp(logt - ref)
    return complex(weight * terms.sum()), ref, float(weight * np.abs(terms).sum())


# ---------------------------------------------------------------------------
# public evaluation


def _conv_s(y, n, convention):
    if isinstance(y, TorusPoint):
        if y.n != n:
            raise ParameterError("torus point has the wrong rank")
        return np.array(y.to("S").y, float)
    y = np.atleast_1d(np.asarray(y, float))
    if len(y) != n - 1 or np.any(~(y > 0)):
        raise ParameterError(f"need {n - 1} positive y values")
    return y if convention == "S" else y[::-1]


def star_log(mu, y, cfg=DEFAULT_CFG, convention="S"):
    """W*_mu(y) as ``(mantissa, scale, err)`` for one point."""
    mu = _mu(mu)
    y = _conv_s(y, mu.n, convention)
    n = mu.n
    if n == 2:
        lv, rel = star_n2_log(mu.entries, y, max(1e-13, cfg.tol * 1e-2))
        lv = complex(lv[0])
        return complex(np.exp(1j * lv.imag)), lv.real, float(rel[0]) + 4 * EPS
    if n == 3:
        g = _star3_grid(mu.entries, y[:1], y[1:], cfg, strict=True)
        mant, scale, err = complex(g.mant[0, 0]), float(g.scale[0, 0]), float(g.err[0, 0])
        if not math.isfinite(err):
            ratio = float(g.absum[0, 0]) / max(abs(mant), 1e-300)
            val, err = _star3_point_mp(mu.entries, y[0], y[1], cfg, g.vlo,
                                       g.vlo + g.h * g.nodes, g.h,
                                       max(ratio, _apriori_loss(mu)), scale)
            return val, scale, err
        return mant, scale, err
    mant, scale, err, _ = _star_general_point(mu, y, cfg)
    if err > cfg.tol * abs(mant):
        raise NonConvergenceError(
            f"rank-{n} value cancels below double precision (est. error {err:.2g})")
    return mant, scale, err


def _apriori_loss(mu):
    """Expected ratio of integrand size to value from the imaginary parts."""
    im = [v.imag for v in mu]
    n = len(im)

    def spread(vals):
        return sum(abs(a - b) for k, a in enumerate(vals) for b in vals[k + 1:])

    loss = 0.0
    cur = list(mu)
    while len(cur) >= 3:
        n = len(cur)
        child = _child_params(cur).entries if n >= 4 else ()
        loss += math.pi / 4 * (spread([v.imag for v in cur])
                               - (n - 1) * abs(cur[0].imag - cur[-1].imag)
                               - spread([v.imag for v in child]))
        cur = list(child)
    return math.exp(min(loss, 700.0))


def whittaker_star(mu, y, cfg=DEFAULT_CFG, convention="S"):
    mant, scale, err = star_log(mu, y, cfg, convention)
    return _value(mant, scale, err, "star")


def _conversion_log(mu, t):
    """log of (prod t_j^{(n+1-2j) + mu_j + mu_{n+1-j}})^{1/2} with t_n = 1."""
    n = mu.n
    logt = t.log_t()
    return 0.5 * sum(((n + 1 - 2 * j) + mu[j - 1] + mu[n - j]) * logt[j - 1]
                     for j in range(1, n + 1))


def _torus(t, n):
    if isinstance(t, TorusPoint):
        return t
    t = np.asarray(t, float)
    if t.ndim == 2:
        t = np.diag(t)
    if len(t) != n:
        raise ParameterError("torus point has the wrong rank")
    return torus_from_t(t)


def completed_log(mu, t, cfg=DEFAULT_CFG):
    mu = _mu(mu)
    t = _torus(t, mu.n)
    mant, scale, err = star_log(mu, t, cfg)
    conv = _conversion_log(mu, t)
    phase = np.exp(1j * conv.imag)
    return mant * phase, scale + conv.real, err


def completed_whittaker(mu, t, cfg=DEFAULT_CFG):
    mant, scale, err = completed_log(mu, t, cfg)
    return _value(mant, scale, err, "completed")


def log_gamma_product(mu):
    """Sum over j<k of log Gamma_R(1 + mu_j - mu_k), refusing near poles."""
    n = len(mu)
    total = 0j
    for j in range(n):
        for k in range(j + 1, n):
            s = 1 + mu[j] - mu[k]
            half = s / 2
            if abs(half.imag) < 1e-6 and half.real < 0.5:
                if abs(s - 2 * round(half.real)) < 1e-6:
                    raise PoleError(f"Gamma_R(1 + mu_{j + 1} - mu_{k + 1}) is at a pole")
            total += complex(special.log_gamma_r(s))
    return total


def jacquet_log(mu, g, cfg=DEFAULT_CFG):
    mu = _mu(mu)
    g = np.asarray(g, float)
    fac = iwasawa(g)
    t = torus_from_t(np.diag(fac.t))
    mant, scale, err = completed_log(mu, t, cfg)
    chi = 2 * math.pi * sum(fac.u[i, i + 1] for i in range(mu.n - 1))
    lg = log_gamma_product(mu.entries)
    phase = np.exp(1j * (chi - lg.imag))
    return mant * phase, scale - lg.real, err


def jacquet_whittaker(mu, g, cfg=DEFAULT_CFG):
    mant, scale, err = jacquet_log(mu, g, cfg)
    return _value(mant, scale, err, "jacquet")


# ---------------------------------------------------------------------------
# grids for scans and Mellin integrals


def star_grid_log(mu, y_axes, cfg=DEFAULT_CFG, block=24):
    """log W* on a tensor grid of convention-S coordinates (n = 2 or 3).

    Returns ``(logval, rel_err)`` arrays. Points where the integrand cancels
    carry their honest (possibly large) relative error.
    """
    mu = _mu(mu)
    if mu.n == 2:
        lv, rel = star_n2_log(mu.entries, np.asarray(y_axes[0], float),
                              max(1e-13, cfg.tol * 1e-2))
        return lv, rel + 4 * EPS
    if mu.n == 3:
        y1 = np.asarray(y_axes[0], float)
        y2 = np.asarray(y_axes[1], float)
        lv = np.empty((len(y1), len(y2)), complex)
        rel = np.empty((len(y1), len(y2)))
        # blocks keep the shared node grid matched to the local scale of y
        for a0 in range(0, len(y1), block):
            for b0 in range(0, len(y2), block):
                sa, sb = slice(a0, a0 + block), slice(b0, b0 + block)
                g = _star3_grid(mu.entries, y1[sa], y2[sb], cfg)
                with np.errstate(divide="ignore", invalid="ignore"):
                    lv[sa, sb] = np.log(g.mant) + g.scale
                    rel[sa, sb] = g.err / np.abs(g.mant)
        return lv, rel
    raise DepthError("tensor grids are available for n <= 3")


def stade_mellin_rhs(mu, s):
    mu = mu if isinstance(mu, LanglandsParams) else LanglandsParams(mu)
    n = mu.n
    s = complex(s)
    total = (1 - n) * math.log(2.0) - complex(special.log_gamma_r(n * s))
    for a in mu:
        for b in mu:
            arg = s + a - b
            if abs(arg.imag) < 1e-6 and arg.real < 0.5 and abs(arg.real / 2 - round(arg.real / 2)) < 5e-7:
                raise PoleError("Mellin right-hand side at a pole")
            total += complex(special.log_gamma_r(arg))
    return complex(np.exp(total))


def _mellin_weight(mu, logys, s):
    """log of prod_{j<n} t_j^s |t_j^{mu_j+mu_{n+1-j}}| on the grid (convention S)."""
    n = mu.n
    grids = np.meshgrid(*logys, indexing="ij")
    out = np.zeros(grids[0].shape, complex)
    for j in range(1, n):
        logt = sum(grids[i] for i in range(j - 1, n - 1))
        out = out + (s + (mu[j - 1] + mu[n - j]).real) * logt
    return out


def stade_mellin_lhs(mu, s, cfg=QuadratureConfig(tol=1e-8), normalized=False):
    """Integral of |W_mu|^2 against the Mellin kernel (n = 2 or 3).

    With ``normalized`` the Jacquet-normalised function is integrated instead,
    which at s = 1 gives the L^2 normalisation constant.
    """
    mu = _mu(mu)
    n = mu.n
    if n not in (2, 3):
        raise ParameterError("Mellin integral implemented for n = 2, 3")
    s = complex(s)
    if not s.real > 0:
        raise ParameterError("Re s must be positive")
    mu = normalize_order(mu)
    re_max = max(abs(v.real) for v in mu)
    s_eff = s.real - 2 * re_max * (n - 1)
    if s_eff <= 0:
        raise ParameterError("Re s too small for convergence at this mu")
    tol = cfg.tol
    depth = math.log(1.0 / tol) + 8.0
    spread = max(abs(a.imag - b.imag) for a in mu for b in mu)
    # the tail check below widens this if the log growth near 0 needs it
    lo = -(math.log(1.0 / tol) + 4.0 + 2.0 * math.log(depth)) / s_eff - 1.0
    hi = math.log((depth + math.pi * spread + 5.0) / TWO_PI + 1.0) + 0.5
    big_h = min(0.25, 0.8 / (1.0 + spread))
    inner = QuadratureConfig(max(1e-12, tol * 1e-2), cfg.max_depth,
                             max(cfg.u_cutoff, -lo + 20.0))
    lg = log_gamma_product(mu.entries).real if normalized else 0.0
    for level in range(cfg.max_depth + 6):
        m = int(math.ceil((hi - lo) / big_h))
        axis = lo + big_h * np.arange(m + 1)
        logys = [axis] * (n - 1)
        lv, _ = star_grid_log(mu, [np.exp(a) for a in logys], inner)
        integrand = 2 * lv.real + _mellin_weight(mu, logys, s) - 2 * lg
        if n == 2:
            integrand = integrand.reshape(-1)
        ref = float(np.max(integrand.real))
        terms = np.exp(integrand - ref)
        total = complex(terms.sum()) * big_h ** (n - 1)
        coarse = complex(terms[(slice(None, None, 2),) * (n - 1)].sum()) * (2 * big_h) ** (n - 1)
        low_tail, high_tail = _edge_mass(terms, big_h, s_eff)
        if low_tail > 0.1 * tol * abs(total) or high_tail > 0.1 * tol * abs(total):
            lo -= 3.0 if low_tail > 0.1 * tol * abs(total) else 0.0
            hi += 1.0 if high_tail > 0.1 * tol * abs(total) else 0.0
            inner = QuadratureConfig(inner.tol, inner.max_depth, max(inner.u_cutoff, -lo + 20.0))
            continue
        if abs(total - coarse) <= tol * abs(total) * 0.5:
            return total * math.exp(ref)
        big_h /= 2
    raise NonConvergenceError("Mellin integral did not converge")


def _edge_mass(terms, h, rate):
    """Estimated mass beyond the low and high ends of each axis.

    Past the low end the integrand decays at least like exp(rate * log y);
    past the high end it decays faster than any exponential, so one cell
    is a generous bound.
    """
    dim = terms.ndim
    cell = h ** (dim - 1)
    low = high = 0.0
    for ax in range(dim):
        low = max(low, cell * float(np.abs(np.take(terms, 0, axis=ax)).sum()) / rate)
        high = max(high, cell * h * float(np.abs(np.take(terms, -1, axis=ax)).sum()))
    return low, high


def normalization_constant(n):
    """2^{1-n} pi^{n/2} / Gamma(n/2), the L^2 mass of the normalised function at s = 1."""
    return 2.0 ** (1 - n) * math.pi ** (n / 2) / math.gamma(n / 2)
