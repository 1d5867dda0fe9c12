"""Numerical certification of the decay and comparability inequalities.

Each check computes a normalized ratio over a (theta, rho) grid and reports
its empirical infimum/supremum. "Bounded" is operationalized by comparing
the extremal statistic over the upper half of the rho-grid (beyond kappa)
with the lower half, up to a configurable slack factor.
"""

from __future__ import annotations

import math
from functools import lru_cache
from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np

from . import bodies as B
from . import fourier as F
from .errors import ConfigurationError, DomainError, UnsupportedBodyError
from .quadrature import gauss_legendre, loglog_slope
from .reports import CheckReport

CHECK_NAMES = (
    "bnw-upper", "double-cone-failure", "lower-average", "single-scale", "corollary",
    "spherical-average", "brunn", "concave-lemma", "uniform-ball",
)


@dataclass(frozen=True)
class RatioScan:
    """A (theta, rho) grid together with the constants of the averaged bounds."""

    body: B.BodySpec
    thetas: tuple
    rhos: tuple
    alpha: float = 0.25
    beta: float = 4.0
    gamma: float | None = None
    kappa: float = 8.0
    slack: float = 2.0
    ceiling: float = 100.0
    band: float = 50.0
    tolerance: float = 1e-9

    def __post_init__(self):
        thetas = tuple(tuple(float(x) for x in B.as_direction(t, self.body.dimension)) for t in self.thetas)
        rhos = tuple(float(r) for r in self.rhos)
        object.__setattr__(self, "thetas", thetas)
        object.__setattr__(self, "rhos", rhos)
        if not thetas or not rhos:
            raise ConfigurationError("direction and rho grids must be non-empty")
        if any(r <= 0 for r in rhos) or any(b <= a for a, b in zip(rhos, rhos[1:])):
            raise ConfigurationError("rho grid must be positive and strictly increasing")
        if not 0 < self.alpha < 1 < self.beta:
            raise ConfigurationError("need 0 < alpha < 1 < beta")
        if self.gamma is None:
            object.__setattr__(self, "gamma", self.alpha / self.beta)
        if not 0 < self.gamma < 1:
            raise ConfigurationError("gamma must lie in (0, 1)")
        if not (self.slack >= 1 and self.ceiling > 0 and self.band >= 1 and self.kappa >= 0):
            raise ConfigurationError("slack and band must be >= 1, ceiling positive, kappa nonnegative")

    @classmethod
    def build(cls, body: B.BodySpec, theta_count: int = 64, rho_min: float = 8.0, rho_max: float = 256.0,
              rho_steps: int = 11, **kw) -> "RatioScan":
        if rho_steps < 2 or not 0 < rho_min < rho_max:
            raise ConfigurationError("need rho_steps >= 2 and 0 < rho_min < rho_max")
        thetas = B.direction_grid(body.dimension, theta_count)
        rhos = np.geomspace(rho_min, rho_max, rho_steps)
        return cls(body, tuple(map(tuple, thetas)), tuple(rhos), **kw)

    @property
    def theta_array(self) -> np.ndarray:
        return np.asarray(self.thetas)

    @property
    def rho_array(self) -> np.ndarray:
        return np.asarray(self.rhos)

    def echo(self) -> dict:
        return {
            "body": B.body_to_json(self.body), "theta_count": len(self.thetas),
            "rho_min": self.rhos[0], "rho_max": self.rhos[-1], "rho_steps": len(self.rhos),
            "alpha": self.alpha, "beta": self.beta, "gamma": self.gamma, "kappa": self.kappa,
            "slack": self.slack, "ceiling": self.ceiling, "band": self.band, "tolerance": self.tolerance,
        }


def _halves(rhos: np.ndarray, kappa: float):
    idx = np.flatnonzero(rhos >= kappa)
    if idx.size < 2:
        raise ConfigurationError("need at least two grid points with rho >= kappa")
    m = idx.size // 2
    return idx[:m], idx[m:]


def _require_smooth(body: B.BodySpec):
    if not body.smooth:
        raise UnsupportedBodyError(f"unsupported: non-smooth body ({body.kind})")


# ---------------------------------------------------------------------------
# Per-direction quantities, shared between checks through a symmetry-keyed cache
# ---------------------------------------------------------------------------

def energy_integrals(body: B.BodySpec, theta, intervals, tolerance: float = 1e-9, order: int = 12) -> np.ndarray:
    """Integrals of |chi_hat(s theta)|^2 over each (lo, hi) in ``intervals``.

    A single composite Gauss rule is laid over the union of the intervals,
    with panel breaks at every endpoint and panels no longer than 1/width,
    the shortest oscillation period of |chi_hat(s theta)|^2 in s, so all
    integrals share one batch of transform evaluations.
    """
    th = B.as_direction(theta, body.dimension)
    iv = np.asarray(intervals, dtype=float).reshape(-1, 2)
    if np.any(iv[:, 1] < iv[:, 0]) or np.any(iv < 0):
        raise ConfigurationError("energy intervals must satisfy 0 <= lo <= hi")
    sup = B.support_interval(body, th)
    width = sup.a + sup.b
    hmax = 1.0 / width
    bps = np.unique(iv.ravel())
    x, w = gauss_legendre(order)
    gaps = np.diff(bps)
    npan = np.maximum(1, np.ceil(gaps / hmax).astype(int))
    edges = np.concatenate([np.linspace(lo, hi, n + 1)[:-1] for lo, hi, n in zip(bps[:-1], bps[1:], npan)]
                           + [bps[-1:]])
    mid = 0.5 * (edges[1:] + edges[:-1])
    half = 0.5 * (edges[1:] - edges[:-1])
    nodes = mid[:, None] + half[:, None] * x[None, :]
    if F.closed_form_available(body, th):
        vals = F.ft_closed_form_many(body, th, nodes.ravel())
    else:
        vals = F.SectionTransformer(body, th).transform_bulk(nodes.ravel(), tolerance)
    panel = np.sum(half[:, None] * w[None, :] * np.abs(vals.reshape(nodes.shape)) ** 2, axis=1)
    # cumulative integral at each panel edge, then pick the edges that are breakpoints
    cum = np.concatenate([[0.0], np.cumsum(panel)])
    pos = np.searchsorted(edges, iv)
    return cum[pos[:, 1]] - cum[pos[:, 0]]


@dataclass
class _DirectionData:
    a: float
    b: float
    a_minus: np.ndarray  # A(-a + 1/rho)
    a_plus: np.ndarray   # A(b - 1/rho)
    chi: np.ndarray | None = None
    energy: dict = field(default_factory=dict)


class _ScanCache:
    def __init__(self, scan: RatioScan):
        self.scan = scan
        self._dirs: dict = {}

    def direction(self, theta) -> _DirectionData:
        body = self.scan.body
        key = B.symmetry_key(body, theta)
        if key not in self._dirs:
            th = B.as_direction(theta, body.dimension)
            rhos = self.scan.rho_array
            sup = B.support_interval(body, th)
            if np.any(1.0 / rhos >= min(sup.a, sup.b)):
                raise DomainError("rho grid reaches below 1/min(a, b); section ends are undefined")
            am = np.asarray(B.section_from_ends(body, th, 1.0 / rhos, side="a"))
            ap = np.asarray(B.section_from_ends(body, th, 1.0 / rhos, side="b"))
            self._dirs[key] = (th, _DirectionData(sup.a, sup.b, am, ap))
        return self._dirs[key][1]

    def chi(self, theta) -> np.ndarray:
        dd = self.direction(theta)
        if dd.chi is None:
            th = self._dirs[B.symmetry_key(self.scan.body, theta)][0]
            dd.chi = F.transform_many(self.scan.body, th, self.scan.rho_array, self.scan.tolerance)
        return dd.chi

    def energy(self, theta, kind: str) -> np.ndarray:
        """Energy integrals for every rho; kinds: average, single, corollary."""
        dd = self.direction(theta)
        if not dd.energy:
            th = self._dirs[B.symmetry_key(self.scan.body, theta)][0]
            s = self.scan
            r = s.rho_array
            spans = {
                "average": np.stack([s.alpha * r, s.beta * r], axis=1),
                "single": np.stack([r, r + 1.0], axis=1),
                "corollary": np.stack([s.gamma * r, r], axis=1),
            }
            names = list(spans)
            vals = energy_integrals(s.body, th, np.concatenate([spans[k] for k in names]), s.tolerance)
            for i, k in enumerate(names):
                dd.energy[k] = vals[i * len(r):(i + 1) * len(r)]
        return dd.energy[kind]


@lru_cache(maxsize=8)
def _cache_for(scan: RatioScan) -> _ScanCache:
    # checks on the same scan share transforms and energy integrals
    return _ScanCache(scan)


def _grid_rows(scan: RatioScan, values: np.ndarray, extra: dict | None = None) -> list[dict]:
    rows = []
    for i, th in enumerate(scan.thetas):
        for j, rho in enumerate(scan.rhos):
            row = {"theta_index": i, "theta": list(th), "rho": rho, "ratio": float(values[i, j])}
            if extra:
                for k, arr in extra.items():
                    row[k] = float(arr[i, j])
            rows.append(row)
    return rows


def _lower_bounded_report(name, scan, values, extra=None, details=None) -> CheckReport:
    rhos = scan.rho_array
    lo, hi = _halves(rhos, scan.kappa)
    per_rho = np.min(values, axis=0)
    active = np.concatenate([lo, hi])
    inf = float(np.min(per_rho[active]))
    sup = float(np.max(np.max(values, axis=0)[active]))
    inf_lo, inf_hi = float(np.min(per_rho[lo])), float(np.min(per_rho[hi]))
    passed = inf > 0 and math.isfinite(sup) and inf_hi >= inf_lo / scan.slack
    det = {"inf_lower_half": inf_lo, "inf_upper_half": inf_hi}
    det.update(details or {})
    return CheckReport(name, _grid_rows(scan, values, extra), inf, sup, bool(passed), None, det, scan.echo())


# ---------------------------------------------------------------------------
# Checks
# ---------------------------------------------------------------------------

def check_bnw_upper(scan: RatioScan) -> CheckReport:
    """R = |chi_hat(rho theta)| rho / (A(-a + 1/rho) + A(b - 1/rho)) stays bounded."""
    _require_smooth(scan.body)
    cache = _cache_for(scan)
    rhos = scan.rho_array
    R = np.empty((len(scan.thetas), rhos.size))
    chi_abs = np.empty_like(R)
    for i, th in enumerate(scan.thetas):
        dd = cache.direction(th)
        chi_abs[i] = np.abs(cache.chi(th))
        R[i] = chi_abs[i] * rhos / (dd.a_minus + dd.a_plus)
    lo, hi = _halves(rhos, scan.kappa)
    per_rho = np.max(R, axis=0)
    sup_lo, sup_hi = float(np.max(per_rho[lo])), float(np.max(per_rho[hi]))
    sup = max(sup_lo, sup_hi)
    inf = float(np.min(R[:, np.concatenate([lo, hi])]))
    passed = sup <= scan.ceiling and sup_hi <= scan.slack * sup_lo
    return CheckReport("bnw-upper", _grid_rows(scan, R, {"chi_abs": chi_abs}), inf, sup, bool(passed), None,
                       {"sup_lower_half": sup_lo, "sup_upper_half": sup_hi}, scan.echo())


def double_cone_ratio(rhos) -> np.ndarray:
    """|chi_hat(rho, 0, 0)| / (rho^-1 A(1 - 1/rho)) for the double cone."""
    rhos = np.asarray(rhos, dtype=float)
    body = B.double_cone()
    chi = np.abs(F.ft_closed_form_many(body, np.array([1.0, 0.0, 0.0]), rhos))
    area = B.section_function(body, np.array([1.0, 0.0, 0.0]), 1.0 - 1.0 / rhos)
    return chi / (area / rhos)


def check_double_cone_failure(rho_grid, min_slope: float = 0.8) -> CheckReport:
    """The cap-volume bound fails for the double cone: the ratio grows like rho."""
    rhos = np.asarray(rho_grid, dtype=float)
    if rhos.size < 2 or np.any(rhos <= 1):
        raise DomainError("double-cone check needs at least two rho values, all > 1")
    R = double_cone_ratio(rhos)
    slope = loglog_slope(rhos, R)
    rows = [{"rho": float(r), "ratio": float(v)} for r, v in zip(rhos, R)]
    cfg = {"rho_min": float(rhos[0]), "rho_max": float(rhos[-1]), "rho_steps": int(rhos.size),
           "min_slope": min_slope}
    return CheckReport("double-cone-failure", rows, float(R.min()), float(R.max()), bool(slope >= min_slope),
                       slope, {}, cfg)


def check_lower_average(scan: RatioScan) -> CheckReport:
    """L = rho * int_{alpha rho}^{beta rho} |chi_hat|^2 / (A(-a+1/rho)^2 + A(b-1/rho)^2)."""
    _require_smooth(scan.body)
    cache = _cache_for(scan)
    rhos = scan.rho_array
    L = np.empty((len(scan.thetas), rhos.size))
    for i, th in enumerate(scan.thetas):
        dd = cache.direction(th)
        L[i] = rhos * cache.energy(th, "average") / (dd.a_minus ** 2 + dd.a_plus ** 2)
    return _lower_bounded_report("lower-average", scan, L)


def check_single_scale_lower(body: B.BodySpec, scan: RatioScan) -> CheckReport:
    """U = rho^(d+1) * int_rho^(rho+1) |chi_hat|^2 lies in a fixed band."""
    if scan.body != body:
        raise ConfigurationError("scan body differs from the checked body")
    F._require_positive_curvature(body)
    d = body.dimension
    cache = _cache_for(scan)
    rhos = scan.rho_array
    U = np.empty((len(scan.thetas), rhos.size))
    widths = []
    for i, th in enumerate(scan.thetas):
        th_arr = np.asarray(th)
        # the phase theta . (p(theta) - p(-theta)) is the width, positive by convexity
        width = float(th_arr @ (B.normal_point(body, th_arr) - B.normal_point(body, -th_arr)))
        if not width > 0:
            raise DomainError("non-positive width in direction theta")
        widths.append(width)
        U[i] = rhos ** (d + 1) * cache.energy(th, "single")
    lo, hi = _halves(rhos, scan.kappa)
    active = np.concatenate([lo, hi])
    inf, sup = float(U[:, active].min()), float(U[:, active].max())
    passed = 0 < inf <= sup < math.inf and sup / inf <= scan.band
    return CheckReport("single-scale", _grid_rows(scan, U), inf, sup, bool(passed), None,
                       {"sup_over_inf": sup / inf if inf > 0 else math.inf, "min_width": min(widths)},
                       scan.echo())


def check_corollary_rho_d(scan: RatioScan) -> CheckReport:
    """V = rho^d * int_{gamma rho}^{rho} |chi_hat|^2 is bounded below."""
    _require_smooth(scan.body)
    cache = _cache_for(scan)
    rhos = scan.rho_array
    d = scan.body.dimension
    V = np.array([rhos ** d * cache.energy(th, "corollary") for th in scan.thetas])
    return _lower_bounded_report("corollary", scan, V)


def check_spherical_average(scan: RatioScan) -> CheckReport:
    """rho^d times the sphere integral of int_{alpha rho}^{beta rho} |chi_hat|^2, bounded above and below."""
    _require_smooth(scan.body)
    cache = _cache_for(scan)
    rhos = scan.rho_array
    d = scan.body.dimension
    E = np.array([cache.energy(th, "average") for th in scan.thetas])
    S = rhos ** d * B.unit_sphere_area(d) * np.mean(E, axis=0)
    lo, hi = _halves(rhos, scan.kappa)
    active = np.concatenate([lo, hi])
    inf, sup = float(S[active].min()), float(S[active].max())
    lo_inf, hi_inf = float(S[lo].min()), float(S[hi].min())
    lo_sup, hi_sup = float(S[lo].max()), float(S[hi].max())
    passed = inf > 0 and hi_inf >= lo_inf / scan.slack and hi_sup <= scan.slack * lo_sup
    rows = [{"rho": float(r), "ratio": float(v)} for r, v in zip(rhos, S)]
    return CheckReport("spherical-average", rows, inf, sup, bool(passed), None,
                       {"inf_lower_half": lo_inf, "inf_upper_half": hi_inf,
                        "sup_lower_half": lo_sup, "sup_upper_half": hi_sup}, scan.echo())


def check_brunn(body: B.BodySpec, theta, grid_size: int = 1000, rel_slack: float = 1e-9) -> CheckReport:
    """A^(1/(d-1)) is concave: every second difference on a uniform grid is <= slack."""
    th = B.as_direction(theta, body.dimension)
    if grid_size < 3:
        raise ConfigurationError("grid_size must be at least 3")
    sup = B.support_interval(body, th)
    t = np.linspace(-sup.a, sup.b, grid_size)
    f = np.asarray(B.section_function(body, th, t)) ** (1.0 / (body.dimension - 1))
    second = f[:-2] - 2 * f[1:-1] + f[2:]
    scale = float(np.max(f))
    worst = float(np.max(second))
    rows = [{"t": float(tt), "f": float(ff)} for tt, ff in zip(t, f)]
    cfg = {"body": B.body_to_json(body), "theta": list(th), "grid_size": grid_size, "rel_slack": rel_slack}
    return CheckReport("brunn", rows, float(np.min(second)), worst, bool(worst <= rel_slack * scale), None,
                       {"scale": scale, "max_second_difference": worst}, cfg)


@dataclass(frozen=True)
class ConcaveFunction:
    """A function on [-a, b], assumed nonnegative and concave there and zero at both ends."""

    func: Callable
    a: float
    b: float

    @classmethod
    def from_profile(cls, profile: B.SectionProfile, dimension: int) -> "ConcaveFunction":
        k = 1.0 / (dimension - 1)
        return cls(lambda t: np.asarray(profile(t), dtype=float) ** k, profile.support.a, profile.support.b)


def grid_pairs(a: float, b: float, grid_size: int) -> np.ndarray:
    """All ordered pairs (l1, l2), l1 != l2, of a uniform grid on [-a, b]."""
    t = np.linspace(-a, b, grid_size)
    i, j = np.meshgrid(np.arange(grid_size), np.arange(grid_size), indexing="ij")
    mask = i != j
    return np.stack([t[i[mask]], t[j[mask]]], axis=1)


def check_concave_lemma(profile, pairs, rel_slack: float = 1e-9) -> CheckReport:
    """Pointwise inequalities satisfied by every concave f vanishing at -a and b.

    With m = max(b/a, a/b):
      (i)   f(l2) <= (1 + m) f(l1) for 0 <= l1 < l2 <= b or -a <= l2 < l1 <= 0
      (ii)  f(x) <= (1 + m) f(0)
      (iii) f(l1) <= (b - l1)/(b - l2) f(l2) for 0 <= l1 < l2 < b
      (iv)  f(l1) <= (a + l1)/(a + l2) f(l2) for -a < l2 < l1 <= 0
    """
    if isinstance(profile, B.SectionProfile):
        profile = ConcaveFunction.from_profile(profile, len(profile.direction))
    a, b = float(profile.a), float(profile.b)
    P = np.asarray(pairs, dtype=float).reshape(-1, 2)
    tol = 1e-12 * (a + b)
    if np.any(P < -a - tol) or np.any(P > b + tol):
        raise DomainError("pair outside the support [-a, b]")
    P = np.clip(P, -a, b)
    pts, inv = np.unique(np.concatenate([P.ravel(), [0.0]]), return_inverse=True)
    fv = np.asarray(profile.func(pts), dtype=float)
    f1, f2 = fv[inv[:-1:2]], fv[inv[1:-1:2]]
    f0 = fv[inv[-1]]
    l1, l2 = P[:, 0], P[:, 1]
    m = max(b / a, a / b)
    scale = max(float(np.max(fv)), 1e-300)
    slack = rel_slack * scale
    fam = {}
    s1 = ((0 <= l1) & (l1 < l2) & (l2 <= b)) | ((-a <= l2) & (l2 < l1) & (l1 <= 0))
    fam["ratio_bound"] = (f2 - (1 + m) * f1)[s1]
    fam["center_bound"] = np.concatenate([f1, f2]) - (1 + m) * f0
    s3 = (0 <= l1) & (l1 < l2) & (l2 < b)
    fam["right_chord"] = f1[s3] - (b - l1[s3]) / (b - l2[s3]) * f2[s3]
    s4 = (-a < l2) & (l2 < l1) & (l1 <= 0)
    fam["left_chord"] = f1[s4] - (a + l1[s4]) / (a + l2[s4]) * f2[s4]
    worst = {k: (float(v.max()) if v.size else -math.inf) for k, v in fam.items()}
    counts = {k: int(v.size) for k, v in fam.items()}
    passed = all(w <= slack for w in worst.values())
    rows = [{"family": k, "pairs": counts[k], "max_violation": worst[k]} for k in fam]
    overall = max(worst.values())
    cfg = {"a": a, "b": b, "pairs": int(P.shape[0]), "rel_slack": rel_slack}
    return CheckReport("concave-lemma", rows, float(min(worst.values())), float(overall), bool(passed), None,
                       {"scale": scale, "m": m}, cfg)


def check_uniform_ball(body: B.BodySpec, scan: RatioScan) -> CheckReport:
    """W = A(-a + 1/rho) rho^((d-1)/2) (and the b-side analog) is bounded below."""
    if scan.body != body:
        raise ConfigurationError("scan body differs from the checked body")
    _require_smooth(body)
    r_min = B.min_curvature_radius(body)
    threshold = 2.0 / r_min
    rhos = scan.rho_array
    if rhos[0] < threshold * (1 - 1e-12):
        raise DomainError(f"rho grid must start at or above 2/r_min = {threshold:.6g}")
    cache = _cache_for(scan)
    d = body.dimension
    Wm = np.empty((len(scan.thetas), rhos.size))
    Wp = np.empty_like(Wm)
    for i, th in enumerate(scan.thetas):
        dd = cache.direction(th)
        Wm[i] = dd.a_minus * rhos ** ((d - 1) / 2)
        Wp[i] = dd.a_plus * rhos ** ((d - 1) / 2)
    W = np.minimum(Wm, Wp)
    # kappa is superseded by the rolling-ball threshold for this check
    scan_all = replace(scan, kappa=0.0)
    return _lower_bounded_report("uniform-ball", scan_all, W, {"w_minus": Wm, "w_plus": Wp},
                                 {"r_min": r_min, "rho_threshold": threshold})


def run_suite(scan: RatioScan, checks=CHECK_NAMES, brunn_directions: int = 10, grid_size: int = 1000,
              seed: int = 0) -> list[CheckReport]:
    """Run the requested checks on one body; the double-cone check ignores the body."""
    body = scan.body
    out = []
    for name in checks:
        if name == "bnw-upper":
            out.append(check_bnw_upper(scan))
        elif name == "double-cone-failure":
            out.append(check_double_cone_failure(np.geomspace(2, 1024, 40)))
        elif name == "lower-average":
            out.append(check_lower_average(scan))
        elif name == "single-scale":
            out.append(check_single_scale_lower(body, scan))
        elif name == "corollary":
            out.append(check_corollary_rho_d(scan))
        elif name == "spherical-average":
            out.append(check_spherical_average(scan))
        elif name in ("brunn", "concave-lemma"):
            for th in random_directions(body.dimension, brunn_directions, seed):
                if name == "brunn":
                    out.append(check_brunn(body, th, grid_size))
                else:
                    prof = B.section_profile(body, th)
                    out.append(check_concave_lemma(prof, grid_pairs(prof.support.a, prof.support.b, grid_size)))
        elif name == "uniform-ball":
            thr = 2.0 / B.min_curvature_radius(body)
            rhos = scan.rho_array
            if rhos[0] < thr:
                rhos = np.geomspace(thr, max(rhos[-1], 2 * thr), len(rhos))
            out.append(check_uniform_ball(body, replace(scan, rhos=tuple(rhos))))
        else:
            raise ConfigurationError(f"unknown check {name!r}; expected one of {CHECK_NAMES}")
    return out


def random_directions(dimension: int, count: int, seed: int = 0) -> np.ndarray:
    rng = np.random.default_rng(seed)
    v = rng.normal(size=(count, dimension))
    return v / np.linalg.norm(v, axis=1, keepdims=True)
