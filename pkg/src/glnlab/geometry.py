"""Torus coordinates, Siegel points, Iwasawa/Cartan decompositions, Y_ij and the 𝒴 functional."""

import json
import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .errors import ParameterError, SchemaError, SingularMatrixError

SQRT3_HALF = math.sqrt(3) / 2
COND_LIMIT = 1e10
CONVENTIONS = ("G", "S")


@dataclass(frozen=True)
class TorusPoint:
    """Positive torus point with t_n = 1, described by n-1 ratios y.

    Convention G has t_i/t_{i+1} = y_{n-i}; convention S has t_i/t_{i+1} = y_i.
    """

    convention: str
    y: tuple

    def __init__(self, convention, y):
        if convention not in CONVENTIONS:
            raise ParameterError(f"unknown convention {convention!r}")
        y = tuple(y)
        if len(y) < 1 or not all(v > 0 and math.isfinite(v) for v in y):
            raise ParameterError("y must be a nonempty list of positive reals")
        object.__setattr__(self, "convention", convention)
        object.__setattr__(self, "y", y)

    @property
    def n(self):
        return len(self.y) + 1

    def to(self, convention):
        if convention == self.convention:
            return self
        return TorusPoint(convention, self.y[::-1])

    def ratios(self):
        """t_i/t_{i+1} for i = 1..n-1."""
        return np.array(self.to("S").y, dtype=float)

    def log_t(self):
        r = np.log(self.ratios())
        return np.append(np.cumsum(r[::-1])[::-1], 0.0)

    @property
    def t(self):
        return np.exp(self.log_t())

    def dual(self):
        """Torus point of the transpose-inverse, rescaled so t_n = 1."""
        return TorusPoint(self.convention, self.y[::-1])


def torus_from_t(t):
    t = np.asarray(t, dtype=float)
    if np.any(t <= 0):
        raise ParameterError("torus entries must be positive")
    return TorusPoint("S", tuple(t[:-1] / t[1:]))


def siegel_membership(x, y):
    x = np.asarray(x, dtype=float)
    upper = np.triu(np.ones_like(x, dtype=bool), 1)
    return bool(np.all(np.abs(x[upper]) <= 0.5) and all(v >= SQRT3_HALF for v in y))


@dataclass(frozen=True)
class SiegelPoint:
    """z = x·t with x unipotent upper triangular and t from convention-G ratios."""

    x: np.ndarray
    y: TorusPoint

    def __init__(self, x, y):
        if not isinstance(y, TorusPoint):
            y = TorusPoint("G", y)
        y = y.to("G")
        x = np.array(x, dtype=float)
        n = y.n
        if x.shape != (n, n):
            raise ParameterError(f"x must be {n}x{n}")
        if np.any(np.tril(x, -1) != 0) or np.any(np.diag(x) != 1):
            raise ParameterError("x must be unipotent upper triangular")
        x.setflags(write=False)
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", y)

    @property
    def n(self):
        return self.y.n

    @property
    def in_siegel(self):
        return siegel_membership(self.x, self.y.y)

    def matrix(self):
        return self.x * self.y.t[None, :]

    @classmethod
    def from_json(cls, obj):
        obj = json.loads(obj) if isinstance(obj, str) else obj
        try:
            y = [float(v) for v in obj["y"]]
            n = len(y) + 1
            x = np.array(obj.get("x", np.eye(n)), dtype=float)
        except (KeyError, TypeError, ValueError) as exc:
            raise SchemaError(f"bad Siegel point: {exc}") from exc
        conv = obj.get("convention", "G")
        return cls(x, TorusPoint(conv, y))


def unit_upper_inverse(x):
    """Inverse of a unit upper-triangular matrix with an exact unit diagonal."""
    n = len(x)
    inv = np.eye(n)
    for j in range(n):
        for i in range(j - 1, -1, -1):
            inv[i, j] = -np.dot(x[i, i + 1:j + 1], inv[i + 1:j + 1, j])
    return inv


@dataclass(frozen=True)
class IwasawaFactors:
    u: np.ndarray
    t: np.ndarray
    k: np.ndarray
    residual: float


def _check_matrix(g):
    g = np.asarray(g, dtype=float)
    if g.ndim != 2 or g.shape[0] != g.shape[1] or g.shape[0] < 1:
        raise ParameterError("expected a square matrix")
    if not np.all(np.isfinite(g)):
        raise ParameterError("matrix entries must be finite")
    cond = np.linalg.cond(g)
    if not cond <= COND_LIMIT:
        raise SingularMatrixError(f"condition number {cond:.3g} exceeds {COND_LIMIT:g}")
    return g


def iwasawa(g):
    """Factor g = u·t·k with t positive diagonal and k orthogonal."""
    g = _check_matrix(g)
    # QR of the row-reversed transpose gives an RQ factorisation of g
    q, r = np.linalg.qr(g[::-1].T)
    upper = r.T[::-1, ::-1]
    k = q.T[::-1]
    signs = np.sign(np.diag(upper))
    upper = upper * signs[None, :]
    k = k * signs[:, None]
    t = np.diag(upper).copy()
    u = upper / t[None, :]
    u = np.triu(u)
    np.fill_diagonal(u, 1.0)
    tm = np.diag(t)
    residual = float(np.max(np.abs(u @ tm @ k - g)))
    return IwasawaFactors(u, tm, k, residual)


@dataclass(frozen=True)
class CartanVector:
    alpha: np.ndarray

    @property
    def norm(self):
        return float(np.linalg.norm(self.alpha))


def cartan(g):
    g = _check_matrix(g)
    n = len(g)
    _, logdet = np.linalg.slogdet(g)
    sv = np.linalg.svd(g, compute_uv=False)
    alpha = np.sort(np.log(sv) - logdet / n)[::-1]
    alpha = alpha - alpha.mean()
    return CartanVector(alpha)


def y_entry(z, i, j):
    """Y_ij = t_j/t_i for 1-based indices."""
    y = z.y if isinstance(z, SiegelPoint) else z
    y = y.to("G")
    n = y.n
    if not (1 <= i <= n and 1 <= j <= n):
        raise ParameterError("indices out of range")
    if i == j:
        return 1.0
    if i > j:
        return float(np.prod(y.y[n - i:n - j]))
    return 1.0 / float(np.prod(y.y[n - j:n - i]))


def y_matrix(z):
    y = z.y if isinstance(z, SiegelPoint) else z
    n = y.n
    return np.array([[y_entry(y, i, j) for j in range(1, n + 1)] for i in range(1, n + 1)])


@dataclass(frozen=True)
class ConjugatedEntries:
    direct: np.ndarray
    via_lemma: np.ndarray
    coefficients: np.ndarray
    max_difference: float


def conjugated_entries(z, gamma, tol=1e-10):
    """z^{-1} gamma z computed directly and through the entrywise expansion.

    ``coefficients[i, j, r, s]`` multiplies gamma_rs in entry (i, j). Raises
    ``AssertionError`` when the two routes disagree, which indicates a bug.
    """
    gamma = np.asarray(gamma)
    n = z.n
    if gamma.shape != (n, n):
        raise ParameterError("gamma has the wrong shape")
    if abs(round(np.linalg.det(gamma))) != 1 or np.any(gamma != np.round(gamma)):
        raise ParameterError("gamma must be an integer matrix with determinant ±1")
    zm = z.matrix()
    direct = np.linalg.solve(zm, gamma @ zm)
    xinv = unit_upper_inverse(z.x)
    coef = np.einsum("ir,sj->ijrs", xinv, z.x)
    via = y_matrix(z) * np.einsum("ijrs,rs->ij", coef, gamma)
    diff = float(np.max(np.abs(direct - via)))
    scale = max(1.0, float(np.max(np.abs(direct))))
    if diff > tol * scale:
        raise AssertionError(f"entry expansion disagrees with direct product by {diff:.3g}")
    for i in range(n):
        for j in range(n):
            if coef[i, j, i, j] != 1.0:
                raise AssertionError("leading coefficient is not exactly one")
    return ConjugatedEntries(direct, via, coef, diff)


def _ycal_terms(logy):
    n = len(logy) + 1
    out = []
    for j in range(1, n):
        w = np.arange(j, 0, -1, dtype=float)
        a = float(np.dot(w, logy[:j]))
        b = float(np.dot(w, logy[::-1][:j]))
        out.append((j, a, b))
    return out


def log_mathcal_y(z):
    y = z.y if isinstance(z, SiegelPoint) else z
    logy = np.log(np.asarray(y.to("G").y, dtype=float))
    return max(2.0 * max(a, b) / (j * (j + 1)) for j, a, b in _ycal_terms(logy))


def mathcal_y(z):
    return math.exp(log_mathcal_y(z))


def mathcal_y_lower_bound_check(z):
    """Check 𝒴(z) ≥ (∏ y_i)^{1/(n-1)} with no tolerance.

    Uses the top term: its two products multiply to (∏ y)^n, so twice the
    larger log is at least their sum. Returns ``(log_ycal, log_bound, ok)``.
    """
    y = z.y if isinstance(z, SiegelPoint) else z
    logy = np.log(np.asarray(y.to("G").y, dtype=float))
    j, a, b = _ycal_terms(logy)[-1]
    bound = (a + b) / (j * (j + 1))
    value = log_mathcal_y(y)
    return value, bound, bool(value >= bound)


def mathcal_y_exact_check(y_rational):
    """Exact rational form of the lower bound: M^2 ≥ (∏ y)^n for the top term."""
    y = [Fraction(v) for v in y_rational]
    n = len(y) + 1
    a = math.prod(y[i] ** (n - 1 - i) for i in range(n - 1))
    b = math.prod(y[n - 2 - i] ** (n - 1 - i) for i in range(n - 1))
    return max(a, b) ** 2 >= math.prod(y) ** n


def random_siegel_point(rng, n):
    x = np.eye(n)
    x[np.triu_indices(n, 1)] = rng.uniform(-0.5, 0.5, n * (n - 1) // 2)
    y = math.sqrt(3) / 2 * np.exp(rng.exponential(1.0, n - 1))
    return SiegelPoint(x, TorusPoint("G", y))


def random_unimodular(rng, n, steps=6):
    """Product of random elementary matrices and a sign flip, entries kept small."""
    g = np.eye(n, dtype=np.int64)
    for _ in range(steps):
        i, j = rng.choice(n, 2, replace=False)
        e = np.eye(n, dtype=np.int64)
        e[i, j] = rng.integers(-2, 3)
        g = g @ e
    if rng.integers(2):
        g[0] = -g[0]
    return g
