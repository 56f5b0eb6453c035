"""Explicit right-hand sides of the uniform Whittaker bounds and ratio scans."""

import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import special
from .errors import ClassError, ParameterError
from .geometry import TorusPoint, torus_from_t
from .params import LanglandsParams, c_mu_eps, c_tilde, classify, t_mu
from .whittaker import QuadratureConfig, log_gamma_product, star_grid_log

TEMPERED_TOL = 1e-12


def _params(mu):
    return mu if isinstance(mu, LanglandsParams) else LanglandsParams(mu)


def _torus(t, n=None):
    if isinstance(t, TorusPoint):
        pt = t
    else:
        arr = np.asarray(t, float)
        pt = torus_from_t(np.diag(arr) if arr.ndim == 2 else arr)
    if n is not None and pt.n != n:
        raise ParameterError(f"torus point has rank {pt.n}, expected {n}")
    return pt


def _weight_log(n, log_t):
    """log of prod t_j^{n+1-2j}; independent of the overall scale of t."""
    return sum((n + 1 - 2 * j) * log_t[j - 1] for j in range(1, n + 1))


def _require_tempered(mu):
    if any(abs(v.real) > TEMPERED_TOL for v in mu):
        raise ClassError("the envelope needs tempered parameters")
    if not mu.ordered:
        raise ClassError("the envelope needs ordered parameters")


def thm1_log_rhs(mu, t, eps):
    mu = _params(mu)
    _require_tempered(mu)
    if eps <= 0:
        raise ParameterError("eps must be positive")
    pt = _torus(t, mu.n)
    lt = pt.log_t()
    return (math.log(c_mu_eps(mu, eps)) + (0.5 - eps) * _weight_log(mu.n, lt)
            - float(np.sum(pt.ratios())) / t_mu(mu))


def thm1_rhs(mu, t, eps):
    """C_{mu,eps} (prod t_j^{n+1-2j})^{1/2-eps} exp(-sum t_j/t_{j+1} / T_mu)."""
    return math.exp(thm1_log_rhs(mu, t, eps))


def thm1_rhs_from_g(mu, y, eps):
    """Same envelope written in convention-G coordinates y."""
    mu = _params(mu)
    _require_tempered(mu)
    n = mu.n
    y = np.asarray(y, float)
    if len(y) != n - 1:
        raise ParameterError(f"need {n - 1} coordinates")
    expo = sum(i * (n - i) * math.log(y[i - 1]) for i in range(1, n))
    return math.exp(math.log(c_mu_eps(mu, eps)) + (0.5 - eps) * expo - float(y.sum()) / t_mu(mu))


def thm1_supnorm(mu, eps):
    mu = _params(mu)
    _require_tempered(mu)
    n = mu.n
    return c_mu_eps(mu, eps) * t_mu(mu) ** ((n**3 - n) / 12)


def _check_strip(mu, kappa, delta):
    if not kappa > delta > 0:
        raise ParameterError("need kappa > delta > 0")
    if max(abs(v.real) for v in mu) > kappa - delta + 1e-12:
        raise ParameterError(f"max |Re mu_j| exceeds kappa - delta = {kappa - delta}")


def thm1bis_log_rhs(mu, t, kappa, delta):
    mu = _params(mu)
    _check_strip(mu, kappa, delta)
    if not mu.ordered:
        raise ClassError("the envelope needs ordered parameters")
    n = mu.n
    pt = _torus(t, n)
    lt = pt.log_t()
    twist = sum((mu[j - 1] + mu[n - j]).real * lt[j - 1] for j in range(1, n + 1))
    return (math.log(c_tilde(mu, kappa)) + (0.5 - kappa) * _weight_log(n, lt)
            + 0.5 * twist - float(np.sum(pt.ratios())) / t_mu(mu))


def thm1bis_rhs(mu, t, kappa, delta):
    return math.exp(thm1bis_log_rhs(mu, t, kappa, delta))


def thm2_rhs(lambda_phi, ycal, t_mu_value, c_n, n):
    for name, v in (("lambda_phi", lambda_phi), ("ycal", ycal), ("t_mu", t_mu_value), ("c_n", c_n)):
        if not v > 0:
            raise ParameterError(f"{name} must be positive")
    return math.exp(n**3 * math.log(lambda_phi) - c_n * ycal / t_mu_value)


def thm3_rhs(lambda_phi, y):
    if not lambda_phi > 0:
        raise ParameterError("lambda_phi must be positive")
    pt = y if isinstance(y, TorusPoint) else TorusPoint("G", y)
    gy = pt.to("G").y
    n = pt.n
    prod = sum(i * (n - i) / 2 * math.log(gy[i - 1]) for i in range(1, n))
    lam = math.log(lambda_phi)
    return math.exp((n * n - n) / 8 * lam) + math.exp((n * n - n - 1) / 8 * lam + prod)


def thm4_rhs(lambda_phi, n, eps):
    if not lambda_phi > 0:
        raise ParameterError("lambda_phi must be positive")
    return lambda_phi ** ((n * n - 2) * (n + 1) / 16 + eps)


def remark2_check(mu, eps, k):
    """Compare C_{mu,eps} with 10^{k(n-k)/3} T^{-k(n-k)/3 + k n^2 eps}.

    Returns ``(applies, c, bound)``; ``applies`` says whether
    |mu_k - mu_{n+1-k}| >= T_mu/10.
    """
    mu = _params(mu)
    n = mu.n
    if not 1 <= k <= n // 2:
        raise ParameterError(f"k must lie in 1..{n // 2}")
    tm = t_mu(mu)
    applies = abs(mu[k - 1] - mu[n - k]) >= tm / 10
    e = k * (n - k) / 3
    bound = 10**e * tm ** (-e + k * n * n * eps)
    return applies, c_mu_eps(mu, eps), bound


# ---------------------------------------------------------------------------
# scans


@dataclass(frozen=True)
class MuGrid:
    """Lattice of ordered parameters with Im parts on a step and T_mu <= t_max.

    ``re_part`` is added to every point (it must sum to zero); use it for
    non-tempered scans.
    """

    n: int
    step: float
    t_max: float
    re_part: tuple = ()

    def points(self):
        n = self.n
        if n not in (2, 3):
            raise ParameterError("parameter lattices are defined for n = 2, 3")
        if not self.step > 0:
            raise ParameterError("step must be positive")
        re = self.re_part or (0.0,) * n
        if len(re) != n or abs(sum(re)) > 1e-12:
            raise ParameterError("re_part must have n entries summing to zero")
        m = int(math.floor(self.t_max / self.step + 1e-9))
        out = []
        if n == 2:
            for a in range(m + 1):
                im = (a * self.step, -a * self.step)
                out.append(im)
        else:
            for a in range(-2 * m, 2 * m + 1):
                for b in range(-2 * m, a + 1):
                    c = -a - b
                    if c > b:
                        continue
                    im = (a * self.step, b * self.step, c * self.step)
                    if max(abs(v) for v in im) <= self.t_max + 1e-9:
                        out.append(im)
        pts = []
        for im in out:
            mu = LanglandsParams([complex(r, v) for r, v in zip(re, im)])
            if t_mu(mu) <= max(self.t_max, 2.0) + 1e-9:
                pts.append(mu)
        return pts

    def refined(self):
        return MuGrid(self.n, self.step / 2, self.t_max, self.re_part)

    def describe(self):
        return f"mu lattice n={self.n} step={self.step:g} T<={self.t_max:g}"


@dataclass(frozen=True)
class YGrid:
    """Geometric grid ``lo * ratio^k`` up to ``hi`` in every coordinate."""

    lo: float
    hi: float
    ratio: float = 2.0

    def axis(self):
        if not (0 < self.lo <= self.hi and self.ratio > 1):
            raise ParameterError("need 0 < lo <= hi and ratio > 1")
        m = int(math.floor(math.log(self.hi / self.lo) / math.log(self.ratio) + 1e-9))
        return self.lo * self.ratio ** np.arange(m + 1)

    def refined(self):
        return YGrid(self.lo, self.hi, math.sqrt(self.ratio))

    def describe(self):
        return f"y in [{self.lo:g}, {self.hi:g}] ratio {self.ratio:.6g}"


@dataclass(frozen=True)
class EnvelopeReport:
    grid_description: str
    max_ratio: float
    argmax_point: dict
    refinement_stability: float
    refined_max_ratio: float = float("nan")
    points: int = 0
    extra: dict = field(default_factory=dict)

    def to_dict(self):
        def clean(v):
            return None if isinstance(v, float) and not math.isfinite(v) else v

        return {
            "grid_description": self.grid_description,
            "max_ratio": clean(self.max_ratio),
            "argmax_point": self.argmax_point,
            "refinement_stability": clean(self.refinement_stability),
            "refined_max_ratio": clean(self.refined_max_ratio),
            "points": self.points,
            **self.extra,
        }

    def to_json(self):
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)


def _mu_key(mu):
    return [[float(v.real), float(v.imag)] for v in mu]


def _scan_one(mu, axes, theorem, eps, kappa, delta, cfg):
    """Largest log-ratio for one parameter over the y tensor grid (convention S)."""
    n = mu.n
    if theorem == 1:
        _require_tempered(mu)
        log_c = math.log(c_mu_eps(mu, eps))
        gain = eps
    else:
        _check_strip(mu, kappa, delta)
        log_c = math.log(c_tilde(mu, kappa))
        gain = kappa
    lv, _ = star_grid_log(mu, axes, cfg)
    logs = np.meshgrid(*[np.log(a) for a in axes], indexing="ij")
    ys = np.meshgrid(*axes, indexing="ij")
    # log t_j = sum_{i >= j} log y_i in convention S
    weight = np.zeros(lv.shape)
    for j in range(1, n):
        weight = weight + (n + 1 - 2 * j) * sum(logs[i] for i in range(j - 1, n - 1))
    # |W| / rhs; the |t^(mu_j + mu_{n+1-j})| factors cancel
    lr = (lv.real - log_gamma_product(mu.entries).real - log_c + gain * weight
          + sum(ys) / t_mu(mu))
    lr = np.where(np.isfinite(lr), lr, -np.inf)
    idx = int(np.argmax(lr))
    pos = np.unravel_index(idx, lr.shape)
    return float(lr[pos]), [float(axes[i][pos[i]]) for i in range(n - 1)]


def _run(mus, axes, theorem, eps, kappa, delta, cfg, threads):
    def job(mu):
        return _scan_one(mu, axes, theorem, eps, kappa, delta, cfg)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(job, mus))
    else:
        results = [job(mu) for mu in mus]
    best = -math.inf
    arg = None
    # strict comparison in input order keeps the argmax independent of scheduling
    for mu, (lr, y) in zip(mus, results):
        if lr > best:
            best, arg = lr, (mu, y)
    return best, arg, len(mus) * int(np.prod([len(a) for a in axes]))


def envelope_scan(n, mu_grid, t_grid, eps=0.05, cfg=None, theorem=1, kappa=None,
                  delta=None, refine=True, threads=1):
    """Max over a grid of |Jacquet-normalised W| / envelope, and its refinement drift.

    ``mu_grid`` is a :class:`MuGrid` or a list of parameters; ``t_grid`` is
    a :class:`YGrid` (used for each of the n-1 coordinates) or a list of
    explicit axes. Refinement needs the grid objects.
    """
    if n not in (2, 3):
        raise ParameterError("envelope scans evaluate W for n = 2, 3")
    if theorem not in (1, "1", "1bis"):
        raise ParameterError(f"unknown theorem {theorem!r}")
    theorem = 1 if theorem in (1, "1") else "1bis"
    if theorem == "1bis" and (kappa is None or delta is None):
        raise ParameterError("theorem 1bis needs kappa and delta")
    cfg = cfg or QuadratureConfig(tol=1e-8)

    def materialise(mg, tg):
        mus = mg.points() if isinstance(mg, MuGrid) else [_params(m) for m in mg]
        if isinstance(tg, YGrid):
            axes = [tg.axis()] * (n - 1)
        else:
            axes = [np.asarray(a, float) for a in tg]
        if any(m.n != n for m in mus) or len(axes) != n - 1:
            raise ParameterError("grid rank does not match n")
        if not mus:
            raise ParameterError("empty parameter grid")
        return mus, axes

    mus, axes = materialise(mu_grid, t_grid)
    best, arg, count = _run(mus, axes, theorem, eps, kappa, delta, cfg, threads)
    refined = stability = float("nan")
    can_refine = isinstance(mu_grid, MuGrid) and isinstance(t_grid, YGrid)
    if refine and can_refine:
        rmus, raxes = materialise(mu_grid.refined(), t_grid.refined())
        rbest, _, rcount = _run(rmus, raxes, theorem, eps, kappa, delta, cfg, threads)
        count += rcount
        refined = math.exp(rbest)
        stability = math.exp(rbest - best)
    desc = (f"theorem {theorem} eps={eps:g}" if theorem == 1
            else f"theorem 1bis kappa={kappa:g} delta={delta:g}")
    if isinstance(mu_grid, MuGrid):
        desc += "; " + mu_grid.describe()
    else:
        desc += f"; {len(mus)} explicit parameters"
    if isinstance(t_grid, YGrid):
        desc += "; " + t_grid.describe()
    else:
        desc += f"; explicit axes of sizes {[len(a) for a in axes]}"
    point = {"mu": _mu_key(arg[0]), "y": arg[1], "convention": "S"}
    return EnvelopeReport(desc, math.exp(best), point, stability, refined, count)


def kbound_scan(tau_step=1.0, tau_max=40.0, k_lo=-8, k_hi=14, eps=0.05, refine=True, tol=1e-12):
    """Max of e^{pi|tau|/2} |K_{i tau}(2 pi y)| / kbound_rhs over tau and dyadic y."""

    def grid(step, yr):
        taus = step * np.arange(int(math.floor(tau_max / step + 1e-9)) + 1)
        m = int(round((k_hi - k_lo) * math.log(2) / math.log(yr)))
        ys = 2.0**k_lo / 16 * yr ** np.arange(m + 1)
        return taus, ys

    def run(taus, ys):
        best, arg = -math.inf, None
        for tau in taus:
            mant, scale, _ = special.log_bessel_k(1j * tau, 2 * math.pi * ys, tol)
            with np.errstate(divide="ignore"):
                lk = np.log(np.abs(mant)) + scale + math.pi * tau / 2
            rhs = np.array([special.log_kbound_rhs(1j * tau, y, eps) for y in ys])
            lr = lk - rhs
            i = int(np.argmax(lr))
            if lr[i] > best:
                best, arg = float(lr[i]), (float(tau), float(ys[i]))
        return best, arg

    taus, ys = grid(tau_step, 2.0)
    best, arg = run(taus, ys)
    stability = refined = float("nan")
    if refine:
        rbest, _ = run(*grid(tau_step / 2, math.sqrt(2.0)))
        refined = math.exp(rbest)
        stability = math.exp(rbest - best)
    desc = (f"kbound eps={eps:g}; tau in [0, {tau_max:g}] step {tau_step:g}; "
            f"y = 2^k/16, k in [{k_lo}, {k_hi}]")
    return EnvelopeReport(desc, math.exp(best), {"tau": arg[0], "y": arg[1]},
                          stability, refined, len(taus) * len(ys))


def grid_from_json(obj, n=None):
    """Build ``(MuGrid or list, YGrid or axes)`` from a grid specification.

    Keys: ``n``; either ``mu`` (list of [[re, im], ...]) or ``mu_step`` and
    ``t_max`` with optional ``re_part``; either ``y_axes`` or ``y_lo``,
    ``y_hi`` and optional ``y_ratio``.
    """
    from .errors import SchemaError

    if isinstance(obj, str):
        obj = json.loads(obj)
    try:
        if "mu" in obj:
            mg = [LanglandsParams(m) for m in obj["mu"]]
            n = int(obj.get("n", n if n is not None else mg[0].n))
        else:
            n = int(obj.get("n", n))
            mg = MuGrid(n, float(obj["mu_step"]), float(obj["t_max"]),
                        tuple(float(v) for v in obj.get("re_part", ())))
        if "y_axes" in obj:
            tg = [list(map(float, a)) for a in obj["y_axes"]]
        else:
            tg = YGrid(float(obj["y_lo"]), float(obj["y_hi"]), float(obj.get("y_ratio", 2.0)))
    except (KeyError, TypeError, ValueError) as exc:
        raise SchemaError(f"bad grid specification: {exc}") from exc
    return n, mg, tg


def tempered_check(mu):
    """True if ``mu`` is admissible for the tempered envelope."""
    mu = _params(mu)
    return classify(mu).tempered and mu.ordered
