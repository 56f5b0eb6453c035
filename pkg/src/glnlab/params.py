"""Langlands parameters and the explicit constants built from them."""

import json
import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .errors import ParameterError, SchemaError

TRACE_TOL = 1e-12
RECENTER_TOL = 1e-9


def _as_complex(v):
    if isinstance(v, (list, tuple)):
        if len(v) != 2:
            raise SchemaError(f"complex entry must be [re, im], got {v!r}")
        return complex(float(v[0]), float(v[1]))
    return complex(v)


@dataclass(frozen=True)
class LanglandsParams:
    """A vector mu in C^n with vanishing sum.

    Construction re-centres inputs whose sum is within ``RECENTER_TOL`` of
    zero and rejects the rest. ``ordered`` is always recomputed.
    """

    entries: tuple

    def __init__(self, entries):
        vals = [_as_complex(v) for v in entries]
        if len(vals) < 2:
            raise ParameterError("need n >= 2 entries")
        if not all(math.isfinite(v.real) and math.isfinite(v.imag) for v in vals):
            raise ParameterError("entries must be finite")
        s = sum(vals)
        if abs(s) > RECENTER_TOL:
            raise ParameterError(f"trace {s} is not zero")
        if abs(s) > TRACE_TOL:
            m = s / len(vals)
            vals = [v - m for v in vals]
        object.__setattr__(self, "entries", tuple(vals))

    @property
    def n(self):
        return len(self.entries)

    @property
    def ordered(self):
        im = [v.imag for v in self.entries]
        return all(a >= b for a, b in zip(im, im[1:]))

    def array(self):
        return np.array(self.entries, dtype=complex)

    def __iter__(self):
        return iter(self.entries)

    def __len__(self):
        return len(self.entries)

    def __getitem__(self, i):
        return self.entries[i]

    def to_json(self):
        return json.dumps({"n": self.n, "mu": [[v.real, v.imag] for v in self.entries]})

    @classmethod
    def from_json(cls, text):
        obj = json.loads(text) if isinstance(text, str) else text
        try:
            n = int(obj["n"])
            mu = obj["mu"]
        except (KeyError, TypeError, ValueError) as exc:
            raise SchemaError(f"bad parameter object: {exc}") from exc
        if len(mu) != n:
            raise SchemaError(f"n={n} but {len(mu)} entries given")
        return cls(mu)


@dataclass(frozen=True)
class SpectralClassification:
    tempered: bool
    unitary: bool
    lrs_admissible: bool
    generic: bool
    c_gen: float


@dataclass(frozen=True)
class SpectralParams:
    nu: tuple


def _params(mu):
    return mu if isinstance(mu, LanglandsParams) else LanglandsParams(mu)


def parse_mu(text):
    """Parse ``"re,im:re,im:..."`` into parameters."""
    try:
        parts = [p.split(",") for p in text.split(":")]
        vals = [complex(float(p[0]), float(p[1]) if len(p) > 1 else 0.0) for p in parts]
    except (ValueError, IndexError) as exc:
        raise SchemaError(f"cannot parse mu {text!r}") from exc
    return LanglandsParams(vals)


def normalize_order(mu):
    mu = _params(mu)
    idx = sorted(range(mu.n), key=lambda k: (-mu[k].imag, -mu[k].real, k))
    return LanglandsParams([mu[k] for k in idx])


def t_mu(mu):
    mu = _params(mu)
    return max(2.0, max(abs(v) for v in mu))


def laplace_eigenvalue(mu):
    mu = _params(mu)
    n = mu.n
    return complex((n**3 - n) / 24.0 - sum(v * v for v in mu) / 2.0)


def _pair_bases(mu, shift):
    n = mu.n
    return [(j, abs(shift + mu[j - 1] - mu[n - j])) for j in range(1, n // 2 + 1)]


def c_mu_eps(mu, eps):
    mu = _params(mu)
    n = mu.n
    log_c = 0.0
    for j, base in _pair_bases(mu, 1.0):
        if base < 1e-300:
            raise ParameterError(f"|1+mu_{j}-mu_{n + 1 - j}| vanishes")
        k = n + 1 - 2 * j
        log_c += (-k / 3.0 + k * k * eps) * math.log(base)
    return math.exp(log_c)


def c_tilde(mu, kappa):
    mu = _params(mu)
    n = mu.n
    log_c = 0.0
    for j, base in _pair_bases(mu, 2.0 * kappa):
        k = n + 1 - 2 * j
        log_c += ((2 * n + 1 - 4 * j) * kappa + k * k * kappa) * math.log(base)
    return math.exp(log_c)


def c_hat(mu, kappa):
    mu = _params(mu)
    n = mu.n
    log_c = 0.0
    for j, base in _pair_bases(mu, 2.0 * kappa):
        k = n + 1 - 2 * j
        log_c += k * k * kappa * math.log(base)
    return math.exp(log_c)


def spectral_params(mu):
    mu = _params(mu)
    n = mu.n
    return SpectralParams(tuple((1 + mu[n - i - 1] - mu[n - i]) / n for i in range(1, n)))


def dual_params(mu):
    mu = _params(mu)
    return LanglandsParams([-v for v in reversed(mu.entries)])


def lrs_bound(n):
    """The strip half-width 1/2 - 1/(n^2+1), computed exactly."""
    return float(Fraction(1, 2) - Fraction(1, n * n + 1))


def classify(mu, c_gen=0.1):
    mu = _params(mu)
    if c_gen <= 0:
        raise ParameterError("c_gen must be positive")
    vals = mu.array()
    tempered = bool(np.all(np.abs(vals.real) <= TRACE_TOL))
    unitary = _is_permutation(np.conj(vals), -vals)
    lrs = bool(np.max(np.abs(vals.real)) <= lrs_bound(mu.n) + 1e-12)
    gaps = [abs(a - b) for k, a in enumerate(vals) for b in vals[k + 1:]]
    generic = min(gaps) >= c_gen * t_mu(mu)
    return SpectralClassification(tempered, unitary, lrs, bool(generic), float(c_gen))


def _is_permutation(a, b, tol=1e-12):
    remaining = list(b)
    for v in a:
        k = min(range(len(remaining)), key=lambda i: abs(remaining[i] - v))
        if abs(remaining[k] - v) > tol:
            return False
        remaining.pop(k)
    return True
