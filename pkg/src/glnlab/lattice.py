"""Geometry of numbers: minima, orthotope counts, block enumeration and γ-balls.

Every count here is exact: candidates come from a lattice enumeration whose
radius provably contains the region, and are then filtered by the defining
inequalities.
"""

import itertools
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .errors import BudgetError, DepthError, ParameterError
from .geometry import SiegelPoint, cartan, iwasawa, y_entry
from .params import LanglandsParams, t_mu

MAX_MINIMA_DIM = 5
MAX_COUNT_DIM = 4
COUNT_BUDGET = 1e8
ENTRY_BUDGET = 1e4
ENUM_LIMIT = 5_000_000
BOUNDARY_TOL = 1e-9


# ---------------------------------------------------------------------------
# lattice basics


def _basis(b):
    b = np.array(b, dtype=float)
    if b.ndim != 2 or b.shape[0] != b.shape[1]:
        raise ParameterError("basis must be a square matrix (rows span the lattice)")
    if not np.all(np.isfinite(b)):
        raise ParameterError("basis entries must be finite")
    if abs(np.linalg.det(b)) <= 1e-12 * np.prod(np.linalg.norm(b, axis=1)):
        raise ParameterError("basis is singular")
    return b


def lll_reduce(b, delta=0.99):
    """LLL-reduce the rows of ``b``; returns ``(reduced, unimodular)``."""
    b = np.array(b, dtype=float)
    m = len(b)
    u = np.eye(m, dtype=np.int64)

    def gso(b):
        bs = np.zeros_like(b)
        mu = np.zeros((m, m))
        for i in range(m):
            bs[i] = b[i]
            for j in range(i):
                mu[i, j] = b[i] @ bs[j] / (bs[j] @ bs[j])
                bs[i] = bs[i] - mu[i, j] * bs[j]
        return bs, mu

    bs, mu = gso(b)
    k = 1
    steps = 0
    while k < m:
        steps += 1
        if steps > 100_000:
            raise BudgetError("LLL did not terminate")
        for j in range(k - 1, -1, -1):
            q = round(mu[k, j])
            if q:
                b[k] -= q * b[j]
                u[k] -= q * u[j]
                bs, mu = gso(b)
        if bs[k] @ bs[k] >= (delta - mu[k, k - 1] ** 2) * (bs[k - 1] @ bs[k - 1]):
            k += 1
        else:
            b[[k, k - 1]] = b[[k - 1, k]]
            u[[k, k - 1]] = u[[k - 1, k]]
            bs, mu = gso(b)
            k = max(k - 1, 1)
    return b, u


def enumerate_ball(b, radius, limit=ENUM_LIMIT):
    """Integer coefficient vectors c with ||c·b|| <= radius (Fincke-Pohst).

    ``b`` should be reasonably reduced; the search tree is exact for any
    nonsingular basis. Returns an ``(N, m)`` int64 array including zero.
    """
    b = np.asarray(b, float)
    m = len(b)
    q, r = np.linalg.qr(b.T)
    # coordinates of c·b in the q basis are r @ c
    r2 = radius * radius * (1 + 1e-12) + 1e-300
    diag = np.diag(r)
    out = []
    c = np.zeros(m, dtype=np.int64)
    count = [0]

    def rec(j, rem):
        shift = float(r[j, j + 1:] @ c[j + 1:]) if j + 1 < m else 0.0
        width = math.sqrt(max(rem, 0.0)) / abs(diag[j])
        centre = -shift / diag[j]
        lo = math.ceil(centre - width - 1e-12)
        hi = math.floor(centre + width + 1e-12)
        if j == 0:
            if hi < lo:
                return
            vals = np.arange(lo, hi + 1)
            keep = (diag[0] * vals + shift) ** 2 <= rem + 1e-12 * r2
            vals = vals[keep]
            count[0] += len(vals)
            if count[0] > limit:
                raise BudgetError(f"lattice enumeration exceeds {limit} points")
            if len(vals):
                block = np.repeat(c[None, :], len(vals), axis=0)
                block[:, 0] = vals
                out.append(block)
            return
        for v in range(lo, hi + 1):
            c[j] = v
            d = diag[j] * v + shift
            rec(j - 1, rem - d * d)
        c[j] = 0

    rec(m - 1, r2)
    if not out:
        return np.zeros((0, m), dtype=np.int64)
    return np.concatenate(out)


def _rank(vectors):
    if len(vectors) == 0:
        return 0
    return int(np.linalg.matrix_rank(np.asarray(vectors, dtype=float)))


@dataclass(frozen=True)
class LatticeInstance:
    """Lattice spanned by the rows of ``basis``."""

    basis: np.ndarray
    reduced: bool = False
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    def __init__(self, basis, reduced=False):
        b = _basis(basis)
        b.setflags(write=False)
        object.__setattr__(self, "basis", b)
        object.__setattr__(self, "reduced", reduced)
        object.__setattr__(self, "_cache", {})

    @property
    def m(self):
        return len(self.basis)

    @property
    def covolume(self):
        return abs(float(np.linalg.det(self.basis)))

    def reduced_basis(self):
        return self.reduction()[0]

    def reduction(self):
        """``(reduced, unimodular)`` with reduced = unimodular @ basis."""
        if "lll" not in self._cache:
            self._cache["lll"] = lll_reduce(self.basis)
        return self._cache["lll"]

    @property
    def minima(self):
        if "minima" not in self._cache:
            self._cache["minima"] = successive_minima(self)
        return self._cache["minima"]


def _lattice(L):
    return L if isinstance(L, LatticeInstance) else LatticeInstance(L)


def successive_minima(L):
    """Exact successive minima by enumeration.

    The reduced basis supplies m independent vectors, so lambda_m is at most
    its longest row; all vectors in that ball are enumerated and minima are
    picked greedily by length among linearly independent ones.
    """
    L = _lattice(L)
    m = L.m
    if m > MAX_MINIMA_DIM:
        raise DepthError(f"minima are computed for m <= {MAX_MINIMA_DIM}")
    b = L.reduced_basis()
    radius = float(np.max(np.linalg.norm(b, axis=1)))
    coeffs = enumerate_ball(b, radius)
    vecs = coeffs @ b
    norms = np.linalg.norm(vecs, axis=1)
    order = np.lexsort((np.arange(len(norms)), norms))
    chosen = []
    minima = []
    for idx in order:
        if norms[idx] == 0:
            continue
        trial = chosen + [coeffs[idx]]
        if _rank(trial) > len(chosen):
            chosen = trial
            minima.append(float(norms[idx]))
            if len(minima) == m:
                break
    return minima


# ---------------------------------------------------------------------------
# orthotopes and the counting ratio


@dataclass(frozen=True)
class Orthotope:
    """Box ``{sum c_k f_k : |c_k| <= r_k}`` with orthonormal rows f_k of ``frame``."""

    frame: np.ndarray
    radii: tuple

    def __init__(self, frame, radii):
        f = np.array(frame, dtype=float)
        r = tuple(float(v) for v in radii)
        if f.ndim != 2 or f.shape[0] != f.shape[1] or f.shape[0] != len(r):
            raise ParameterError("frame must be m x m with m radii")
        if np.max(np.abs(f @ f.T - np.eye(len(r)))) > 1e-12:
            raise ParameterError("frame must be orthogonal to 1e-12")
        if not all(v > 0 and math.isfinite(v) for v in r):
            raise ParameterError("radii must be positive")
        f.setflags(write=False)
        object.__setattr__(self, "frame", f)
        object.__setattr__(self, "radii", r)

    @property
    def m(self):
        return len(self.radii)

    def contains(self, pts):
        """Closed membership with a relative boundary tolerance."""
        proj = np.asarray(pts, float) @ self.frame.T
        r = np.asarray(self.radii)
        return np.all(np.abs(proj) <= r * (1 + BOUNDARY_TOL) + BOUNDARY_TOL * 1e-3, axis=-1)

    def face_volume(self, d):
        """Largest d-face volume: product of the d largest edge lengths."""
        if not 0 <= d <= self.m:
            raise ParameterError("face dimension out of range")
        edges = sorted((2 * v for v in self.radii), reverse=True)
        return float(math.prod(edges[:d]))


def _count_budget(L, K):
    lam1 = L.minima[0]
    est = math.prod(1 + 2 * r / lam1 for r in K.radii)
    if est > COUNT_BUDGET:
        raise BudgetError(f"enumeration estimate {est:.3g} exceeds {COUNT_BUDGET:g}")


def lattice_points_in(L, K):
    """Coefficient vectors of the lattice points in the closed orthotope."""
    L = _lattice(L)
    if L.m > MAX_COUNT_DIM:
        raise DepthError(f"orthotope counts are supported for m <= {MAX_COUNT_DIM}")
    if K.m != L.m:
        raise ParameterError("orthotope and lattice dimensions differ")
    _count_budget(L, K)
    b, unimod = L.reduction()
    radius = math.sqrt(sum(r * r for r in K.radii)) * (1 + BOUNDARY_TOL) + BOUNDARY_TOL * 1e-3
    coeffs = enumerate_ball(b, radius)
    keep = K.contains(coeffs @ b)
    # express in the original basis so callers see stable coordinates
    return coeffs[keep] @ unimod


def count_points(L, K):
    return int(len(lattice_points_in(L, K)))


def count_points_bruteforce(L, K):
    """Count by scanning the full coefficient box that contains K.

    The box is taken in the reduced basis, which keeps it small for skewed
    input bases; the count does not depend on the basis.
    """
    L = _lattice(L)
    _count_budget(L, K)
    b = L.reduced_basis()
    binv = np.linalg.inv(b)
    # c = v·b^{-1} and v = sum t_k f_k with |t_k| <= r_k
    bound = np.abs(K.frame @ binv).T @ np.asarray(K.radii)
    bound = np.floor(bound * (1 + BOUNDARY_TOL) + 1e-9).astype(np.int64)
    total = int(np.prod(2 * bound + 1))
    if total > COUNT_BUDGET:
        raise BudgetError(f"coefficient box has {total} points")
    axes = [np.arange(-k, k + 1) for k in bound]
    count = 0
    for head in itertools.product(*axes[1:]):
        c = np.zeros((len(axes[0]), L.m), dtype=np.int64)
        c[:, 0] = axes[0]
        c[:, 1:] = head
        count += int(np.count_nonzero(K.contains(c @ b)))
    return count


@dataclass(frozen=True)
class Lemma1Report:
    count: int
    d: int
    face_volume: float
    minima_product: float
    ratio: float
    outcome: str


def lemma1_check(L, K):
    """count * (lambda_1 ... lambda_d) / V_d(K), with d the span dimension."""
    L = _lattice(L)
    pts = lattice_points_in(L, K)
    d = _rank(pts)
    count = len(pts)
    if d == 0:
        return Lemma1Report(count, 0, 1.0, 1.0, float("nan"), "origin-only")
    lam = L.minima
    vol = K.face_volume(d)
    prod = float(math.prod(lam[:d]))
    return Lemma1Report(count, d, vol, prod, count * prod / vol, "ok")


def random_lattice(rng, m):
    """Gaussian basis with a random log-scale spread of row lengths."""
    b = rng.standard_normal((m, m))
    scales = np.exp(rng.uniform(-1.0, 1.0, m))
    return LatticeInstance(b * scales[:, None])


def random_orthotope(rng, m, scale):
    q, r = np.linalg.qr(rng.standard_normal((m, m)))
    q = q * np.sign(np.diag(r))[None, :]
    radii = scale * np.exp(rng.uniform(math.log(0.3), math.log(4.0), m))
    return Orthotope(q.T, radii)


@dataclass(frozen=True)
class Lemma1Scan:
    seed: int
    samples: int
    constants: dict
    outcomes: dict

    def to_dict(self):
        return {"seed": self.seed, "samples": self.samples,
                "c_d": {str(k): v for k, v in sorted(self.constants.items())},
                "outcomes": dict(sorted(self.outcomes.items()))}


def lemma1_cases(seed, samples, max_m=4):
    """Reproducible (lattice, orthotope) pairs, as thunks so boxes are built lazily.

    Each box gets its own generator, so the pairs do not depend on the order
    in which they are built.
    """
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(samples):
        m = int(rng.integers(1, max_m + 1))
        L = random_lattice(rng, m)
        sub = int(rng.integers(0, 2**63 - 1))
        out.append(lambda L=L, m=m, sub=sub: (
            L, random_orthotope(np.random.default_rng(sub), m, L.minima[0])))
    return out


def lemma1_scan(seed=0, samples=1000, max_m=4, threads=1):
    """Largest lemma1 ratio per span dimension over random lattices and boxes."""
    cases = lemma1_cases(seed, samples, max_m)

    def job(case):
        return lemma1_check(*case())

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            reports = list(pool.map(job, cases))
    else:
        reports = [job(c) for c in cases]
    consts = {}
    outcomes = {}
    for rep in reports:
        key = rep.outcome if rep.d == 0 else f"d={rep.d}"
        outcomes[key] = outcomes.get(key, 0) + 1
        if rep.d:
            consts[rep.d] = max(consts.get(rep.d, 0.0), rep.ratio)
    return Lemma1Scan(seed, samples, consts, outcomes)


# ---------------------------------------------------------------------------
# symmetric polynomials


def sigma_d(values, d):
    vals = [float(v) for v in values]
    if not 1 <= d <= len(vals):
        raise IndexError(f"d must lie in 1..{len(vals)}")
    e = [1.0] + [0.0] * len(vals)
    for v in vals:
        for k in range(len(vals), 0, -1):
            e[k] += v * e[k - 1]
    return e[d]


# ---------------------------------------------------------------------------
# blocks B(T, m, S) for n = 3


@dataclass(frozen=True)
class BlockSpec:
    T: float
    m_vec: tuple
    S_vec: tuple

    def __init__(self, T, m_vec, S_vec):
        m_vec = tuple(int(v) for v in m_vec)
        S_vec = tuple(float(v) for v in S_vec)
        if not T > 0:
            raise ParameterError("T must be positive")
        if any(v < 1 for v in m_vec):
            raise ParameterError("m entries must be positive integers")
        for s in S_vec:
            if not s > 0 or math.log2(s) != round(math.log2(s)):
                raise ParameterError(f"S entry {s} is not a power of 2")
        if len(m_vec) != len(S_vec):
            raise ParameterError("m and S must both have n-1 entries")
        object.__setattr__(self, "T", float(T))
        object.__setattr__(self, "m_vec", m_vec)
        object.__setattr__(self, "S_vec", S_vec)


def _dyadic(s):
    """Smallest power of two S with S/2 < s <= S."""
    k = math.ceil(math.log2(s))
    # guard against log2 rounding at exact powers of two
    if 2.0 ** (k - 1) >= s:
        k -= 1
    elif 2.0**k < s:
        k += 1
    return 2.0**k


@dataclass(frozen=True)
class BlockMember:
    gamma: tuple
    s: tuple
    u12: float
    weight: float


def _block_prime(z):
    if not isinstance(z, SiegelPoint):
        raise ParameterError("expected a SiegelPoint")
    if z.n != 3:
        raise DepthError("block enumeration is implemented for n = 3")
    return z.matrix()[:2, :2]


def _block_candidates(zp, s2_max, u_box):
    """All gamma in SL_2(Z) with ||gamma_2 z'|| <= s2_max and u12 in u_box."""
    det = float(np.linalg.det(zp))
    b, unimod = lll_reduce(zp)
    coeffs = enumerate_ball(b, s2_max) @ unimod
    out = []
    for c, d in coeffs:
        c, d = int(c), int(d)
        if math.gcd(c, d) != 1:
            continue
        row2 = np.array([c, d]) @ zp
        s2 = float(np.linalg.norm(row2))
        # a particular solution of a d - b c = 1, then shift along (c, d)
        g, p, q = _ext_gcd(d, -c)  # p d - q c = 1
        a0, b0 = p, q
        row1 = np.array([a0, b0]) @ zp
        u0 = float(row1 @ row2) / (s2 * s2)
        lo, hi = u_box
        for k in range(math.ceil(lo - u0 - 1e-12), math.floor(hi - u0 + 1e-12) + 1):
            u = u0 + k
            if lo - 1e-12 <= u <= hi + 1e-12:
                a, bb = a0 + k * c, b0 + k * d
                out.append(((a, bb), (c, d), s2, abs(det) / s2, u))
    return out


def _ext_gcd(a, b):
    """Return (g, x, y) with a x + b y = g = gcd(a, b) >= 0."""
    x0, y0, x1, y1 = 1, 0, 0, 1
    while b:
        q, a, b = a // b, b, a % b
        x0, x1 = x1, x0 - q * x1
        y0, y1 = y1, y0 - q * y1
    if a < 0:
        a, x0, y0 = -a, -x0, -y0
    return a, x0, y0


def _block_weight(m_vec, s1, s2):
    """sum_i m_{n-i} s_i / s_{i+1} with s_3 = 1, for n = 3."""
    return m_vec[1] * s1 / s2 + m_vec[0] * s2


def enumerate_block(z, spec, mu, u_box=(-0.5, 0.5)):
    """The set B(T, m, S) for a rank-3 Siegel point, as gamma tuples.

    Candidates are all primitive bottom rows with ||gamma_2 z'|| <= S_2,
    found by an exact lattice enumeration; the top row is then fixed by the
    unipotent window ``u_box``.
    """
    zp = _block_prime(z)
    mu = mu if isinstance(mu, LanglandsParams) else LanglandsParams(mu)
    tm = t_mu(mu)
    ratio = spec.T / tm
    if abs(ratio - round(ratio)) > 1e-9 or round(ratio) < 1:
        raise ParameterError("T must be a positive multiple of T_mu")
    if len(spec.m_vec) != 2:
        raise ParameterError("n = 3 needs two m and two S entries")
    S1, S2 = spec.S_vec
    if S2 * float(np.max(np.linalg.norm(np.linalg.inv(zp), axis=0))) > ENTRY_BUDGET:
        raise BudgetError("candidate entries exceed the budget")
    members = set()
    for top, bottom, s2, s1, u in _block_candidates(zp, S2, u_box):
        if not (S2 / 2 < s2 <= S2 and S1 / 2 < s1 <= S1):
            continue
        w = _block_weight(spec.m_vec, s1, s2)
        if spec.T - tm < w <= spec.T:
            members.add((top, bottom))
    return members


def enumerate_block_bruteforce(z, spec, mu, u_box=(-0.5, 0.5)):
    """Oracle: scan an explicit integer box for all four entries of gamma."""
    zp = _block_prime(z)
    tm = t_mu(mu)
    S1, S2 = spec.S_vec
    zinv = np.linalg.inv(zp)
    col = np.linalg.norm(zinv, axis=0)
    # ||gamma_i z'|| <= S_i + |u| S_2 bounds each entry via |c_j| <= ||row|| ||z'^{-1} e_j||
    r1 = S1 + max(abs(u_box[0]), abs(u_box[1])) * S2
    b1 = np.floor(r1 * col + 1e-9).astype(int)
    b2 = np.floor(S2 * col + 1e-9).astype(int)
    if max(b1.max(), b2.max()) > ENTRY_BUDGET:
        raise BudgetError("entry bounds exceed the budget")
    members = set()
    for c in range(-b2[0], b2[0] + 1):
        for d in range(-b2[1], b2[1] + 1):
            if math.gcd(c, d) != 1:
                continue
            for a in range(-b1[0], b1[0] + 1):
                for b in range(-b1[1], b1[1] + 1):
                    if a * d - b * c != 1:
                        continue
                    g = np.array([[a, b], [c, d]], float)
                    f = iwasawa(g @ zp)
                    s1, s2 = f.t[0, 0], f.t[1, 1]
                    u = f.u[0, 1]
                    if not (u_box[0] - 1e-12 <= u <= u_box[1] + 1e-12):
                        continue
                    if not (S2 / 2 < s2 <= S2 and S1 / 2 < s1 <= S1):
                        continue
                    w = _block_weight(spec.m_vec, s1, s2)
                    if spec.T - tm < w <= spec.T:
                        members.add(((a, b), (c, d)))
    return members


def block_bound(z, T, m_vec):
    """T^{n(n-1)(n-2)/3} / (m_1^{(n-1)(n-2)/2} prod_{j=2}^{n-1} t_j^{j-1})."""
    n = z.n
    t = z.y.t
    denom = m_vec[0] ** ((n - 1) * (n - 2) / 2) * math.prod(t[j - 1] ** (j - 1) for j in range(2, n))
    return T ** (n * (n - 1) * (n - 2) / 3) / denom


def s_window(T, m_vec, n=3, slack=16.0):
    """Dyadic exponents allowed for each S_i by the necessary window (slack included)."""
    out = []
    for i in range(1, n):
        lo = T ** (-(n - i) * (n - i - 1) / 2) / slack
        hi = slack * T ** (n - i) / math.prod(m_vec[: n - i])
        out.append(range(math.floor(math.log2(lo)), math.ceil(math.log2(hi)) + 1))
    return out


def blocks_for(z, T, m_vec, mu):
    """All nonempty blocks for (T, m): dict S -> set of gamma.

    Every gamma with weight in (T - T_mu, T] has s_2 <= T/m_1, so one
    enumeration covers all S at once.
    """
    zp = _block_prime(z)
    tm = t_mu(mu)
    out = {}
    for top, bottom, s2, s1, u in _block_candidates(zp, T / m_vec[0] * (1 + 1e-12), (-0.5, 0.5)):
        w = _block_weight(m_vec, s1, s2)
        if T - tm < w <= T:
            key = (_dyadic(s1), _dyadic(s2))
            out.setdefault(key, set()).add((top, bottom))
    return out


def sproduct_holds(z, S_vec):
    """S_{n-1} ... S_i >= 4^{-n} t_{n-1} ... t_i for every i."""
    n = z.n
    t = z.y.t
    for i in range(1, n):
        lhs = math.prod(S_vec[i - 1:])
        rhs = 4.0 ** (-n) * math.prod(t[i - 1:n - 1])
        if lhs < rhs:
            return False
    return True


@dataclass(frozen=True)
class BlockSweepRow:
    point: int
    m_vec: tuple
    T: float
    max_count: int
    argmax_S: tuple
    bound: float
    ratio: float


def block_sweep(points, m_vecs, T_values, mu, threads=1):
    """max_S #B(T, m, S) against the block bound over a T sweep."""
    jobs = [(p, m, T) for p in range(len(points)) for m in m_vecs for T in T_values]

    def job(item):
        p, m, T = item
        blocks = blocks_for(points[p], T, m, mu)
        best, arg = 0, None
        for key in sorted(blocks):
            if len(blocks[key]) > best:
                best, arg = len(blocks[key]), key
        bound = block_bound(points[p], T, m)
        return BlockSweepRow(p, tuple(m), float(T), best, arg, bound, best / bound)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(job, jobs))
    return [job(j) for j in jobs]


# ---------------------------------------------------------------------------
# gamma counting in a Cartan ball


def _parabolic_pattern(gamma):
    """Set M of m with vanishing lower-left m x (n-m) block."""
    n = len(gamma)
    return tuple(m for m in range(1, n) if not np.any(gamma[n - m:, : n - m]))


def _pattern_cells(M, n):
    cells = set()
    for m in M:
        for r in range(n - m + 1, n + 1):
            for c in range(1, n - m + 1):
                cells.add((r, c))
    return sorted(cells)


def gamma_class_bound(z, M, K):
    """prod over (j, i) in B_M of (1 + K / Y_ij)."""
    n = z.n
    return float(math.prod(1 + K / y_entry(z, i, j) for j, i in _pattern_cells(M, n)))


@dataclass(frozen=True)
class GammaBallReport:
    K: float
    total: int
    classes: dict
    members: tuple

    def rows(self):
        for M in sorted(self.classes):
            count, bound = self.classes[M]
            yield M, count, bound, count / bound


def _canonical_sign(g):
    flat = g.ravel()
    nz = flat[np.nonzero(flat)[0][0]]
    return g if nz > 0 else -g


def _frobenius_bound(n, K):
    """Upper bound for ||g||_F^2 = sum e^{2 alpha_i} over ||alpha|| <= K, sum alpha = 0.

    The function is convex, so the maximum sits on the sphere ||alpha|| = K.
    For n = 3 that sphere is a circle, sampled finely; moving by at most
    the grid spacing changes each alpha_i by at most K dtheta.
    """
    if n == 2:
        a = K / math.sqrt(2)
        return math.exp(2 * a) + math.exp(-2 * a)
    if n == 1 or K == 0:
        return float(n)
    u = np.array([1.0, -1.0, 0.0]) / math.sqrt(2)
    v = np.array([1.0, 1.0, -2.0]) / math.sqrt(6)
    steps = 4096
    th = np.linspace(0, 2 * math.pi, steps, endpoint=False)
    alpha = K * (np.cos(th)[:, None] * u + np.sin(th)[:, None] * v)
    peak = float(np.max(np.exp(2 * alpha).sum(axis=1)))
    return peak * math.exp(2 * K * (2 * math.pi / steps))


def count_gamma_ball(z, K, n=None, entry_budget=ENTRY_BUDGET):
    """All gamma in GL_n(Z) / {±1} with ||C(z^{-1} gamma z)|| <= K, by class M.

    The squared singular values of z^{-1} gamma z are e^{2 alpha_i}, so the
    candidates satisfy a bound on ||z^{-1} gamma z||_F^2; that quadratic
    form in the n^2 entries of gamma is enumerated exactly.
    """
    if not isinstance(z, SiegelPoint):
        raise ParameterError("expected a SiegelPoint")
    n = z.n if n is None else n
    if n != z.n:
        raise ParameterError("n does not match the point")
    if n > 3:
        raise DepthError("gamma-ball counts are implemented for n <= 3")
    if not K >= 0:
        raise ParameterError("K must be nonnegative")
    zm = z.matrix()
    zinv = np.linalg.inv(zm)
    # vec(z^{-1} gamma z) = (z^{-1} ⊗ z^T) vec_row(gamma)
    lin = np.kron(zinv, zm.T)
    basis = lin.T  # rows: images of the unit matrices
    radius = math.sqrt(_frobenius_bound(n, K)) * (1 + 1e-9)
    red, unimod = lll_reduce(basis)
    dim = n * n
    # expected number of candidates: ball volume over covolume
    est = math.pi ** (dim / 2) / math.gamma(dim / 2 + 1) * radius**dim / abs(np.linalg.det(red))
    if est > min(entry_budget**2, ENUM_LIMIT):
        raise BudgetError(f"about {est:.3g} candidates exceed the budget")
    coeffs = enumerate_ball(red, radius) @ unimod
    mats = coeffs.reshape(-1, n, n)
    dets = np.linalg.det(mats.astype(float))
    mats = mats[np.abs(np.abs(dets) - 1) < 1e-6]
    seen = set()
    members = []
    classes = {}
    for g in mats:
        g = _canonical_sign(g)
        key = tuple(int(v) for v in g.ravel())
        if key in seen:
            continue
        if cartan(zinv @ g @ zm).norm > K * (1 + 1e-12) + 1e-12:
            continue
        seen.add(key)
        members.append(key)
        M = _parabolic_pattern(g)
        classes[M] = classes.get(M, 0) + 1
    members.sort()
    table = {M: (cnt, gamma_class_bound(z, M, K)) for M, cnt in classes.items()}
    return GammaBallReport(float(K), len(members), table, tuple(members))


def count_gamma_ball_bruteforce(z, K, box):
    """Oracle: every integer matrix with entries in [-box, box]."""
    n = z.n
    zm = z.matrix()
    zinv = np.linalg.inv(zm)
    found = set()
    for flat in itertools.product(range(-box, box + 1), repeat=n * n):
        g = np.array(flat, dtype=np.int64).reshape(n, n)
        det = round(np.linalg.det(g))
        if abs(det) != 1:
            continue
        g = _canonical_sign(g)
        if cartan(zinv @ g @ zm).norm <= K * (1 + 1e-12) + 1e-12:
            found.add(tuple(int(v) for v in g.ravel()))
    return found
