"""Point sets on the torus, exponential sums and L2 discrepancy of dilated bodies.

The squared discrepancy of a point set z_1..z_N against the family
{x + r*Omega : x in T^d, 0 < r < 1} is computed three ways:

* Parseval: sum over nonzero lattice vectors of |S(n)|^2 w(n), where
  w(n) = integral_0^1 r^(2d) |chi_hat(r n)|^2 dr;
* Monte Carlo over (x, r);
* pair sum: sum_{j,k} K(z_j - z_k) - N^2 |Omega|^2 / (2d + 1), where K is
  the r-averaged covariogram of the body (exact up to one-dimensional
  quadrature, used for large N).
"""

from __future__ import annotations

import csv
import io
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from functools import lru_cache
from itertools import product

import numpy as np
from scipy.interpolate import CubicSpline
from scipy.special import betainc

from . import bodies as B
from . import fourier as F
from .errors import ConfigurationError, DomainError, UnsupportedBodyError
from .quadrature import composite_gauss, gauss_legendre, loglog_slope

GENERATORS = ("uniform-random", "grid", "kronecker", "hammersley")
TWO_PI = 2.0 * math.pi
_MASK64 = (1 << 64) - 1


# ---------------------------------------------------------------------------
# Point sets
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class PointSet:
    dimension: int
    points: np.ndarray
    generator: str = "custom"
    seed: int = 0

    def __post_init__(self):
        pts = np.array(self.points, dtype=float, copy=True).reshape(-1, self.dimension)
        if np.any(pts < 0) or np.any(pts >= 1) or not np.all(np.isfinite(pts)):
            raise ConfigurationError("point coordinates must lie in [0, 1)")
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)

    @property
    def N(self) -> int:
        return int(self.points.shape[0])

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        for p in self.points:
            w.writerow([repr(float(x)) for x in p])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str, generator: str = "custom", seed: int = 0) -> "PointSet":
        rows = [r for r in csv.reader(io.StringIO(text)) if r]
        if not rows:
            raise ConfigurationError("empty point file")
        pts = np.array([[float(x) for x in r] for r in rows])
        return cls(pts.shape[1], pts, generator, seed)

    def translated(self, shift) -> "PointSet":
        return PointSet(self.dimension, _wrap01(self.points + np.asarray(shift, dtype=float)), self.generator,
                        self.seed)


def _wrap01(x: np.ndarray) -> np.ndarray:
    y = np.mod(x, 1.0)
    return np.where(y >= 1.0, 0.0, y)


def counter_rng(seed: int, task: int) -> np.random.Generator:
    """Counter-based generator keyed by (seed, task); streams are independent of scheduling."""
    key = np.array([int(seed) & _MASK64, int(task) & _MASK64], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


def van_der_corput(k: np.ndarray, base: int = 2) -> np.ndarray:
    k = np.asarray(k, dtype=np.int64).copy()
    out = np.zeros(k.shape)
    scale = 1.0 / base
    while np.any(k):
        out += (k % base) * scale
        k //= base
        scale /= base
    return out


def _kronecker_alpha(d: int) -> np.ndarray:
    # phi_d is the positive root of x^(d+1) = x + 1
    phi = 2.0
    for _ in range(100):
        phi = (1.0 + phi) ** (1.0 / (d + 1))
    return (1.0 / phi) ** np.arange(1, d + 1)


def generate_points(generator: str, N: int, d: int, seed: int = 0) -> PointSet:
    """Deterministic point set for (generator, N, d, seed)."""
    if generator not in GENERATORS:
        raise ConfigurationError(f"unknown generator {generator!r}; expected one of {GENERATORS}")
    if not isinstance(N, (int, np.integer)) or N < 1:
        raise ConfigurationError("N must be a positive integer")
    if d < 1:
        raise ConfigurationError("dimension must be positive")
    if generator == "grid":
        m = round(N ** (1.0 / d))
        if m ** d != N:
            raise ConfigurationError(f"grid needs N = m^d; {N} is not a perfect {d}-th power")
        axis = (np.arange(m) + 0.5) / m
        pts = np.array(list(product(axis, repeat=d)))
    elif generator == "hammersley":
        if d != 2:
            raise ConfigurationError("the Hammersley generator is defined for d = 2")
        k = np.arange(N)
        pts = np.stack([k / N, van_der_corput(k, 2)], axis=1)
    elif generator == "kronecker":
        k = np.arange(1, N + 1)[:, None]
        pts = _wrap01(0.5 + k * _kronecker_alpha(d)[None, :])
    else:
        pts = counter_rng(seed, 0).random((N, d))
    return PointSet(d, pts, generator, int(seed))


# ---------------------------------------------------------------------------
# Exponential sums
# ---------------------------------------------------------------------------

def exp_sum(points: PointSet, n) -> complex:
    """S(n) = sum_j exp(2 pi i n . z_j)."""
    n = np.asarray(n, dtype=float)
    if n.shape != (points.dimension,):
        raise ConfigurationError("frequency vector has the wrong dimension")
    return complex(np.sum(np.exp(1j * TWO_PI * (points.points @ n))))


def exp_sums(points: PointSet, ns) -> np.ndarray:
    ns = np.asarray(ns, dtype=float).reshape(-1, points.dimension)
    out = np.empty(len(ns), dtype=complex)
    for start in range(0, len(ns), 4096):
        out[start:start + 4096] = np.exp(1j * TWO_PI * (ns[start:start + 4096] @ points.points.T)).sum(axis=1)
    return out


def _axis_factors(points: PointSet, M: int) -> list[np.ndarray]:
    # E_i[j, m + M] = exp(2 pi i m z_ji), m = -M..M, built by repeated multiplication
    m = np.arange(-M, M + 1)
    return [np.exp(1j * TWO_PI * np.outer(points.points[:, i], m)) for i in range(points.dimension)]


def lattice_slices(points: PointSet, M: int, nonnegative: bool = False):
    """Yield (n_last, S) where S holds S(n) for |n_i| <= M and the last component n_last.

    With ``nonnegative`` only slices with n_last >= 0 are produced (d = 3).

    For d = 1 a single slice with n_last = 0 carries the whole line.
    """
    d = points.dimension
    E = _axis_factors(points, M)
    if d == 1:
        yield 0, E[0].sum(axis=0)
        return
    if d == 2:
        yield None, E[0].T @ E[1]
        return
    rest = E[1:-1]
    last = E[-1]
    for k in range(M if nonnegative else 0, 2 * M + 1):
        W = E[0] * last[:, k][:, None]
        S = W.T @ rest[0] if len(rest) == 1 else None
        if S is None:
            raise ConfigurationError("lattice sums are implemented for d <= 3")
        yield k - M, S


def _lattice_coords(M: int, d: int) -> list[np.ndarray]:
    m = np.arange(-M, M + 1, dtype=float)
    return np.meshgrid(*([m] * d), indexing="ij")


@dataclass(frozen=True)
class LatticeShell:
    H: float
    M: float

    def __post_init__(self):
        if not (0 <= self.H < self.M):
            raise ConfigurationError("shell needs 0 <= H < M")


def shell_sum(points: PointSet, shell: LatticeShell) -> tuple[float, int]:
    """Sum of |S(n)|^2 over integer n with H < |n| < M, and the number of such n."""
    d = points.dimension
    Mi = int(math.ceil(shell.M))
    total = 0.0
    count = 0
    if d == 2:
        _, S = next(lattice_slices(points, Mi))
        n1, n2 = _lattice_coords(Mi, 2)
        r2 = n1 ** 2 + n2 ** 2
        mask = (r2 > shell.H ** 2) & (r2 < shell.M ** 2)
        total = float(np.sum(np.abs(S[mask]) ** 2))
        count = int(mask.sum())
    elif d == 3:
        n1, n2 = _lattice_coords(Mi, 2)
        base = n1 ** 2 + n2 ** 2
        for n3, S in lattice_slices(points, Mi):
            r2 = base + n3 ** 2
            mask = (r2 > shell.H ** 2) & (r2 < shell.M ** 2)
            total += float(np.sum(np.abs(S[mask]) ** 2))
            count += int(mask.sum())
    else:
        raise ConfigurationError("shell sums are implemented for d = 2 and d = 3")
    return total, count


def cassels_montgomery(points: PointSet, shell: LatticeShell, floor: float = 0.1):
    """Shell sum and its normalization sum / (N M^d); passes iff the ratio reaches the floor."""
    from .reports import CheckReport

    total, count = shell_sum(points, shell)
    if count == 0:
        raise DomainError("the lattice shell contains no integer vectors")
    ratio = total / (points.N * shell.M ** points.dimension)
    rep = CheckReport("cassels-montgomery", [{"N": points.N, "H": shell.H, "M": shell.M, "shell_size": count,
                                              "shell_sum": total, "ratio": ratio}],
                      ratio, ratio, bool(ratio >= floor), None,
                      {"mean_abs_S2": total / count},
                      {"generator": points.generator, "seed": points.seed, "floor": floor})
    return total, rep


# ---------------------------------------------------------------------------
# Radial weights w(n) = int_0^1 r^(2d) |chi_hat(r n)|^2 dr
# ---------------------------------------------------------------------------

class _UnitBallWeightTable:
    """W(u) = int_0^u s^(2d) |chi_hat_B(s)|^2 ds for the unit ball.

    The spline carries W(u) / u^(2d+1), which is smooth and O(1) down to u = 0,
    so small arguments keep their relative accuracy.
    """

    step = 1.0 / 128

    def __init__(self, d: int):
        self.d = d
        self.umax = 0.0
        self.knots = np.array([0.0])
        self.values = np.array([0.0])
        self.spline = None

    def _extend(self, umax: float):
        new_max = max(2 * self.umax, umax, 8.0)
        edges = np.arange(self.umax, new_max + self.step, self.step)
        x, w = gauss_legendre(12)
        mid = 0.5 * (edges[1:] + edges[:-1])
        half = 0.5 * (edges[1:] - edges[:-1])
        s = mid[:, None] + half[:, None] * x[None, :]
        f = s ** (2 * self.d) * F._ball_radial(self.d, 1.0, s) ** 2
        inc = np.cumsum(np.sum(half[:, None] * w[None, :] * f, axis=1))
        self.knots = np.concatenate([self.knots, edges[1:]])
        self.values = np.concatenate([self.values, self.values[-1] + inc])
        self.umax = float(self.knots[-1])
        k = 2 * self.d + 1
        g = np.empty_like(self.values)
        g[0] = B.unit_ball_volume(self.d) ** 2 / k
        g[1:] = self.values[1:] / self.knots[1:] ** k
        self.spline = CubicSpline(self.knots, g)

    def __call__(self, u: np.ndarray) -> np.ndarray:
        return self.ratio(u) * u ** (2 * self.d + 1)

    def ratio(self, u: np.ndarray) -> np.ndarray:
        """W(u) / u^(2d+1)."""
        u = np.asarray(u, dtype=float)
        if u.size and float(u.max()) > self.umax:
            self._extend(float(u.max()))
        return self.spline(u)


@lru_cache(maxsize=None)
def _ball_table(d: int) -> _UnitBallWeightTable:
    return _UnitBallWeightTable(d)


def _cos_moment(m: int, omega: np.ndarray) -> np.ndarray:
    """int_0^1 r^m cos(omega r) dr."""
    omega = np.abs(np.asarray(omega, dtype=float))
    out = np.empty_like(omega)
    small = omega < 4.0
    if np.any(small):
        w = omega[small]
        acc = np.zeros_like(w)
        term = np.ones_like(w)
        for k in range(0, 60, 2):
            if k:
                term = -term * w * w / ((k - 1) * k)
            acc += term / (m + k + 1)
        out[small] = acc
    big = ~small
    if np.any(big):
        w = omega[big]
        I = (np.exp(1j * w) - 1.0) / (1j * w)
        for j in range(1, m + 1):
            I = np.exp(1j * w) / (1j * w) - j / (1j * w) * I
        out[big] = I.real
    return out


def _cube_weights(side: float, ns: np.ndarray) -> np.ndarray:
    d = ns.shape[1]
    out = np.empty(len(ns))
    nz = ns != 0
    for pattern in {tuple(r) for r in nz}:
        sel = np.all(nz == np.array(pattern), axis=1)
        idx = [i for i, v in enumerate(pattern) if v]
        z = d - len(idx)
        sub = ns[sel][:, idx]
        k = len(idx)
        # r^(2d) prod chi^2 = s^(2z) r^(2z) prod_i sin^2(pi s r n_i) / (pi n_i)^2
        acc = np.zeros(len(sub))
        for coeffs in product((0, 1, -1), repeat=k):
            # sin^2(a) = (1 - cos 2a)/2: expand the product into cosines of signed sums
            active = [c for c in coeffs if c]
            weight = (0.5 ** k) * ((-0.5) ** len(active))
            freq = TWO_PI * side * (sub @ np.array(coeffs, dtype=float))
            acc += weight * _cos_moment(2 * z, freq)
        denom = np.prod((math.pi * sub) ** 2, axis=1)
        out[sel] = side ** (2 * z) * acc / denom
    return out


def radial_weights(body: B.BodySpec, ns) -> np.ndarray:
    """w(n) for an array of nonzero integer vectors (shape (K, d))."""
    ns = np.asarray(ns, dtype=float).reshape(-1, body.dimension)
    if np.any(np.all(ns == 0, axis=1)):
        raise DomainError("radial weight is undefined at n = 0")
    d = body.dimension
    if body.kind in ("ball", "ellipsoid") or (body.kind == "superellipsoid" and body.p == 2):
        ax = np.full(d, body.radius) if body.kind == "ball" else np.asarray(body.axes)
        u = np.linalg.norm(ns * ax, axis=1)
        return float(np.prod(ax)) ** 2 * _ball_table(d).ratio(u)
    if body.kind == "cube":
        return _cube_weights(body.side, ns)
    return np.array([_numeric_weight(body, n) for n in ns])


def _numeric_weight(body: B.BodySpec, n: np.ndarray) -> float:
    norm = float(np.linalg.norm(n))
    th = n / norm
    sup = B.support_interval(body, th)
    panels = max(4, int(math.ceil(norm * (sup.a + sup.b))))
    s, w = composite_gauss(0.0, norm, panels, 12)
    vals = F.transform_many(body, th, s, 1e-9)
    return float(np.sum(w * s ** (2 * body.dimension) * np.abs(vals) ** 2)) * norm ** (-2 * body.dimension - 1)


def radial_weight(body: B.BodySpec, n) -> float:
    """w(n) = int_0^1 r^(2d) |chi_hat(r n)|^2 dr for a nonzero integer vector n."""
    return float(radial_weights(body, np.asarray(n, dtype=float)[None, :])[0])


# ---------------------------------------------------------------------------
# L2 discrepancy
# ---------------------------------------------------------------------------

@dataclass
class DiscrepancyResult:
    value: float
    method: str
    truncation: float
    error: float
    extra: dict = field(default_factory=dict)

    def to_record(self) -> dict:
        return {"method": self.method, "value": self.value, "err": self.error, "truncation": self.truncation,
                **self.extra}


def fit_to_torus(body: B.BodySpec, outer: float = 0.25) -> B.BodySpec:
    """Rescale a centered body so that its outer radius equals ``outer``."""
    if not 0 < outer < 0.5:
        raise ConfigurationError("outer radius must lie in (0, 0.5)")
    if body.kind == "double-cone":
        raise ConfigurationError("the double cone cannot be rescaled")
    return B.scaled(body, outer / B.outer_radius(body))


def _require_small(body: B.BodySpec):
    if not B.diameter(body) < 1.0:
        raise ConfigurationError("body diameter must be < 1 for discrepancy on the torus")


def single_point_discrepancy(body: B.BodySpec) -> float:
    """Exact D^2 for one point: |Omega|/(d+1) - |Omega|^2/(2d+1)."""
    vol = B.volume(body)
    d = body.dimension
    return vol / (d + 1) - vol ** 2 / (2 * d + 1)


def _quadrant_weights(body: B.BodySpec, M: int, tail: tuple = ()) -> np.ndarray:
    # every catalog body is symmetric under coordinate sign flips, so w(n) depends on |n_i| only
    m = np.arange(M + 1, dtype=float)
    grids = np.meshgrid(m, m, indexing="ij")
    ns = np.stack([g.ravel() for g in grids] + [np.full(grids[0].size, float(t)) for t in tail], axis=1)
    w = np.zeros(len(ns))
    keep = np.any(ns != 0, axis=1)
    w[keep] = radial_weights(body, ns[keep])
    idx = np.abs(np.arange(-M, M + 1))
    return w.reshape(M + 1, M + 1)[np.ix_(idx, idx)]


def _parseval_box_sum(points: PointSet, body: B.BodySpec, M: int) -> float:
    d = points.dimension
    if d == 2:
        _, S = next(lattice_slices(points, M))
        return float(np.sum(np.abs(S) ** 2 * _quadrant_weights(body, M)))
    if d == 3:
        total = 0.0
        for n3, S in lattice_slices(points, M, nonnegative=True):
            # S(-n) is the conjugate of S(n), so the slice at -n3 contributes the same amount
            part = float(np.sum(np.abs(S) ** 2 * _quadrant_weights(body, M, (n3,))))
            total += part if n3 == 0 else 2.0 * part
        return total
    raise ConfigurationError("Parseval sums are implemented for d = 2 and d = 3")


def l2_discrepancy_parseval(points: PointSet, body: B.BodySpec, M_trunc: float | None = None,
                            rel: float = 0.01, C: float = 4.0, max_M: int | None = None) -> DiscrepancyResult:
    """Parseval lattice series, doubling the box size until the relative increment is below ``rel``.

    The terms decay like |n|^-(d+1) on average, so the tail beyond M behaves
    like 1/M; the last doubling increment then equals the remaining tail, which
    is added to the value and reported as the error bar.
    """
    _require_small(body)
    if body.dimension != points.dimension:
        raise ConfigurationError("body and point set dimensions differ")
    d = points.dimension
    M = int(math.ceil(M_trunc if M_trunc is not None else C * points.N ** (1.0 / d)))
    M = max(M, 2)
    if max_M is None:
        max_M = 1024 if d == 2 else 128
    prev = _parseval_box_sum(points, body, M)
    history = [(M, prev)]
    while True:
        M2 = 2 * M
        if M2 > max_M:
            break
        cur = _parseval_box_sum(points, body, M2)
        history.append((M2, cur))
        inc = cur - prev
        M, prev = M2, cur
        if abs(inc) < rel * abs(cur):
            break
    if len(history) >= 2:
        tail = history[-1][1] - history[-2][1]
    else:
        tail = 0.0
    value = history[-1][1] + tail
    return DiscrepancyResult(value, "parseval", float(history[-1][0]), abs(tail),
                             {"N": points.N, "history": [[m, v] for m, v in history]})


def _wrap_offsets(body: B.BodySpec) -> np.ndarray | None:
    # a body inside the ball of radius 1/2 about the origin needs only the nearest image
    if B.outer_radius(body) < 0.5:
        return None
    return np.array(list(product((-1.0, 0.0, 1.0), repeat=body.dimension)))


def torus_count(points: np.ndarray, body: B.BodySpec, x: np.ndarray, r: np.ndarray) -> np.ndarray:
    """Number of points z_j with z_j in x + r*Omega on the torus, for each sample (x, r)."""
    points = np.asarray(points, dtype=float).reshape(-1, body.dimension)
    x = np.asarray(x, dtype=float).reshape(-1, body.dimension)
    r = np.asarray(r, dtype=float).reshape(-1)
    offsets = _wrap_offsets(body)
    counts = np.zeros(len(x))
    for z in points:
        y = z[None, :] - x
        if offsets is None:
            y = y - np.round(y)
            counts += B.membership(body, y / r[:, None])
        else:
            hit = np.zeros(len(x), dtype=bool)
            for off in offsets:
                hit |= B.membership(body, (y + off) / r[:, None])
            counts += hit
    return counts


def _mc_block(points: np.ndarray, body: B.BodySpec, n: int, seed: int, task: int, vol: float) -> tuple:
    rng = counter_rng(seed, task)
    x = rng.random((n, body.dimension))
    r = rng.random(n)
    dev = torus_count(points, body, x, r) - len(points) * r ** body.dimension * vol
    sq = dev * dev
    return float(np.sum(sq)), float(np.sum(sq * sq))


def l2_discrepancy_mc(points: PointSet | None, body: B.BodySpec, samples: int = 1_000_000, seed: int = 0,
                      block: int = 65536, threads: int = 1) -> DiscrepancyResult:
    """Monte-Carlo mean of the squared discrepancy over uniform (x, r) in T^d x (0, 1)."""
    if samples < 100:
        raise ConfigurationError("Monte-Carlo estimate needs at least 100 samples")
    _require_small(body)
    if points is None or points.N == 0:
        return DiscrepancyResult(0.0, "monte-carlo", float(samples), 0.0, {"N": 0})
    if body.dimension != points.dimension:
        raise ConfigurationError("body and point set dimensions differ")
    vol = B.volume(body)
    sizes = [min(block, samples - s) for s in range(0, samples, block)]
    args = [(points.points, body, n, seed, 1 + i, vol) for i, n in enumerate(sizes)]
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as ex:
            parts = list(ex.map(lambda a: _mc_block(*a), args))
    else:
        parts = [_mc_block(*a) for a in args]
    s1 = float(np.sum([p[0] for p in parts]))
    s2 = float(np.sum([p[1] for p in parts]))
    mean = s1 / samples
    var = max(s2 / samples - mean ** 2, 0.0) * samples / (samples - 1)
    return DiscrepancyResult(mean, "monte-carlo", float(samples), math.sqrt(var / samples),
                             {"N": points.N, "seed": seed})


# ---------------------------------------------------------------------------
# Pair-sum route through the r-averaged covariogram
# ---------------------------------------------------------------------------

class _BallKernel:
    """K(rho) = int_0^1 r^d g(rho / r) dr for the unit ball, tabulated and splined."""

    def __init__(self, d: int, knots: int = 4097):
        self.d = d
        rho = np.linspace(0.0, 2.0, knots)
        x, w = gauss_legendre(64)
        t = 0.5 * (x + 1.0)
        wt = 0.5 * w
        vol = B.unit_ball_volume(d)
        vals = np.empty_like(rho)
        for i, p in enumerate(rho):
            r0 = 0.5 * p
            # r = r0 + (1 - r0) t^2 absorbs the (r - r0)^((d+1)/2) onset
            r = r0 + (1.0 - r0) * t ** 2
            jac = 2.0 * (1.0 - r0) * t
            z = np.clip(1.0 - (p / (2.0 * r)) ** 2, 0.0, 1.0)
            g = r ** d * vol * betainc((d + 1) / 2.0, 0.5, z)
            vals[i] = np.sum(wt * jac * g)
        vals[-1] = 0.0
        self.spline = CubicSpline(rho, vals)

    def __call__(self, rho: np.ndarray) -> np.ndarray:
        rho = np.asarray(rho, dtype=float)
        return np.where(rho < 2.0, self.spline(np.minimum(rho, 2.0)), 0.0)


@lru_cache(maxsize=None)
def _ball_kernel(d: int) -> _BallKernel:
    return _BallKernel(d)


def _cube_kernel(side: float, u: np.ndarray) -> np.ndarray:
    """int_0^1 prod_i (r s - |u_i|)_+ dr, integrated exactly as a polynomial in r."""
    a = np.abs(u)
    d = a.shape[1]
    r0 = np.max(a, axis=1) / side
    inside = r0 < 1.0
    # coefficients of prod (s r - a_i) in powers of r, highest first
    coef = np.ones((len(a), 1))
    for i in range(d):
        nxt = np.zeros((len(a), coef.shape[1] + 1))
        nxt[:, :-1] += side * coef
        nxt[:, 1:] -= a[:, i:i + 1] * coef
        coef = nxt
    deg = np.arange(d, -1, -1)
    anti = coef / (deg + 1)
    val = np.zeros(len(a))
    for k, p in enumerate(deg + 1):
        val += anti[:, k] * (1.0 - r0 ** p)
    return np.where(inside, val, 0.0)


def covariogram_kernel(body: B.BodySpec, u: np.ndarray) -> np.ndarray:
    """K(u) = int_0^1 |rOmega cap (rOmega + u)| dr for displacement vectors u (shape (K, d))."""
    u = np.asarray(u, dtype=float).reshape(-1, body.dimension)
    d = body.dimension
    if body.kind == "cube":
        return _cube_kernel(body.side, u)
    if body.kind in ("ball", "ellipsoid") or (body.kind == "superellipsoid" and body.p == 2):
        ax = np.full(d, body.radius) if body.kind == "ball" else np.asarray(body.axes)
        return float(np.prod(ax)) * _ball_kernel(d)(np.linalg.norm(u / ax, axis=1))
    raise UnsupportedBodyError(f"no covariogram kernel for {body.kind} with p={body.p}")


def l2_discrepancy_pairs(points: PointSet, body: B.BodySpec, chunk: int = 1024) -> DiscrepancyResult:
    """Pair-sum form sum_{j,k} K(z_j - z_k) - N^2 |Omega|^2 / (2d + 1)."""
    _require_small(body)
    if body.dimension != points.dimension:
        raise ConfigurationError("body and point set dimensions differ")
    z = points.points
    N, d = z.shape
    # with diameter < 1 only images within {-1, 0, 1}^d of the nearest one can overlap
    offsets = np.zeros((1, d)) if B.diameter(body) <= 0.5 else np.array(list(product((-1.0, 0.0, 1.0), repeat=d)))
    total = 0.0
    for start in range(0, N, chunk):
        diff = z[start:start + chunk, None, :] - z[None, :, :]
        diff -= np.round(diff)
        flat = diff.reshape(-1, d)
        for off in offsets:
            total += float(np.sum(covariogram_kernel(body, flat + off)))
    vol = B.volume(body)
    value = total - N * N * vol ** 2 / (2 * d + 1)
    return DiscrepancyResult(value, "pair-sum", float(N * N), 1e-9 * abs(total), {"N": N})


# ---------------------------------------------------------------------------
# Scaling experiment
# ---------------------------------------------------------------------------

def discrepancy_value(points: PointSet, body: B.BodySpec) -> float:
    try:
        return l2_discrepancy_pairs(points, body).value
    except UnsupportedBodyError:
        return l2_discrepancy_parseval(points, body).value


def scaling_experiment(body: B.BodySpec, generators, N_list, repeats: int = 1, seed: int = 0,
                       slack: float = 2.0) -> dict:
    """D^2(N) for each generator with log-log slopes and lower-bound verdicts.

    For every generator, c is fitted at the smallest N as D^2 / N^(1 - 1/d)
    and the bound D^2(N) >= c N^(1 - 1/d) / slack is checked at every N.
    """
    N_list = [int(n) for n in N_list]
    if any(b <= a for a, b in zip(N_list, N_list[1:])):
        raise ConfigurationError("N_list must be increasing")
    if repeats < 1:
        raise ConfigurationError("repeats must be positive")
    d = body.dimension
    expo = 1.0 - 1.0 / d
    rows = []
    summary = {}
    for gen in generators:
        values = []
        for N in N_list:
            reps = repeats if gen == "uniform-random" else 1
            vals = [discrepancy_value(generate_points(gen, N, d, seed + k), body) for k in range(reps)]
            v = float(np.mean(vals))
            values.append(v)
            rows.append({"generator": gen, "N": N, "D2": v, "D2_over_bound": v / N ** expo,
                         "repeats": reps})
        values = np.asarray(values)
        c = values[0] / N_list[0] ** expo
        ratio = values / (c * np.asarray(N_list, dtype=float) ** expo)
        slope = loglog_slope(N_list, values)
        entry = {
            "slope": slope,
            "c_fit": float(c),
            "min_ratio_to_fit": float(ratio.min()),
            "lower_bound_holds": bool(ratio.min() >= 1.0 / slack),
        }
        if body.smooth:
            entry["passed"] = entry["lower_bound_holds"]
        else:
            # polylogarithmic growth shows up as a slope well below the smooth-body exponent
            entry["slow_growth"] = bool(slope < 0.5 * expo)
            entry["passed"] = entry["slow_growth"] if gen == "hammersley" else True
        summary[gen] = entry
    passed = all(s["passed"] for s in summary.values())
    return {"body": B.body_to_json(body), "N_list": N_list, "rows": rows, "summary": summary, "passed": passed,
            "config": {"repeats": repeats, "seed": seed, "slack": slack, "exponent": expo}}
