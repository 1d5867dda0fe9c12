"""Catalog of convex bodies and the geometric queries built on them.

Smooth bodies (ball, ellipsoid, superellipsoid) are all handled through the
gauge ``G(x) = sum(((x - c) / a) ** p)`` with an even exponent ``p``; the
ball and the ellipsoid are the case ``p = 2``. The double cone and the cube
carry their own closed forms and are flagged non-smooth.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from itertools import product
from typing import Callable

import numpy as np
from scipy.special import gamma, gammaln

from .errors import ConfigurationError, DomainError, UnsupportedBodyError
from .quadrature import gauss_legendre, sphere_rule

KINDS = ("ball", "ellipsoid", "superellipsoid", "double-cone", "cube")
SMOOTH_KINDS = ("ball", "ellipsoid", "superellipsoid")
_DIRECTION_TOL = 1e-12
# Below this size a cube direction component is treated as exactly zero.
_CUBE_COMPONENT_CUTOFF = 1e-7


def unit_ball_volume(k: int) -> float:
    """Volume of the unit ball in R^k."""
    if k == 0:
        return 1.0
    return math.pi ** (k / 2) / math.gamma(k / 2 + 1)


def unit_sphere_area(k: int) -> float:
    """Surface measure of the unit sphere S^(k-1) in R^k."""
    return k * unit_ball_volume(k)


@dataclass(frozen=True)
class BodySpec:
    """A convex body from the fixed catalog.

    ``axes`` is used by ellipsoids and superellipsoids, ``radius`` by balls,
    ``side`` by cubes; the double cone has no parameters and lives in R^3.
    """

    kind: str
    dimension: int
    radius: float | None = None
    axes: tuple[float, ...] | None = None
    p: int | None = None
    side: float | None = None
    center: tuple[float, ...] = field(default=())

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ConfigurationError(f"unknown body kind {self.kind!r}; expected one of {KINDS}")
        d = self.dimension
        if not isinstance(d, (int, np.integer)) or d < 2:
            raise ConfigurationError(f"dimension must be an integer >= 2, got {d!r}")
        if self.center == ():
            object.__setattr__(self, "center", (0.0,) * d)
        center = tuple(float(c) for c in self.center)
        if len(center) != d or not all(math.isfinite(c) for c in center):
            raise ConfigurationError(f"center must have {d} finite components")
        object.__setattr__(self, "center", center)

        if self.kind == "ball":
            if self.radius is None or not self.radius > 0:
                raise ConfigurationError("ball radius must be strictly positive")
        elif self.kind in ("ellipsoid", "superellipsoid"):
            if self.axes is None or len(self.axes) != d:
                raise ConfigurationError(f"{self.kind} needs {d} semi-axes")
            axes = tuple(float(a) for a in self.axes)
            if not all(a > 0 and math.isfinite(a) for a in axes):
                raise ConfigurationError("semi-axes must be strictly positive")
            object.__setattr__(self, "axes", axes)
            if self.kind == "superellipsoid":
                p = self.p
                if not isinstance(p, (int, np.integer)) or p < 2 or p % 2:
                    raise ConfigurationError(f"superellipsoid exponent must be an even integer >= 2, got {p!r}")
                if p > 2 and d > 3:
                    raise ConfigurationError("superellipsoids with p > 2 are supported in dimensions 2 and 3 only")
        elif self.kind == "cube":
            if self.side is None or not self.side > 0:
                raise ConfigurationError("cube side must be strictly positive")
        elif self.kind == "double-cone":
            if d != 3:
                raise ConfigurationError("the double cone is defined in dimension 3")

    @property
    def smooth(self) -> bool:
        return self.kind in SMOOTH_KINDS

    @property
    def center_array(self) -> np.ndarray:
        return np.asarray(self.center, dtype=float)


def ball(radius: float = 1.0, dimension: int = 3, center=()) -> BodySpec:
    return BodySpec("ball", dimension, radius=float(radius), center=tuple(center))


def ellipsoid(axes, center=()) -> BodySpec:
    axes = tuple(float(a) for a in axes)
    return BodySpec("ellipsoid", len(axes), axes=axes, center=tuple(center))


def superellipsoid(p: int = 4, axes=(1.0, 1.0, 1.0), center=()) -> BodySpec:
    axes = tuple(float(a) for a in axes)
    return BodySpec("superellipsoid", len(axes), axes=axes, p=p, center=tuple(center))


def double_cone(center=()) -> BodySpec:
    return BodySpec("double-cone", 3, center=tuple(center))


def cube(side: float = 1.0, dimension: int = 2, center=()) -> BodySpec:
    return BodySpec("cube", dimension, side=float(side), center=tuple(center))


_JSON_KEYS = {
    "ball": {"kind", "radius", "dimension", "center"},
    "ellipsoid": {"kind", "axes", "center"},
    "superellipsoid": {"kind", "p", "axes", "center"},
    "double-cone": {"kind", "center"},
    "cube": {"kind", "side", "dimension", "center"},
}


def body_from_json(obj: dict) -> BodySpec:
    """Build a body from its JSON object; unknown keys are rejected."""
    if not isinstance(obj, dict) or "kind" not in obj:
        raise ConfigurationError("body JSON must be an object with a 'kind' field")
    kind = obj["kind"]
    if kind not in _JSON_KEYS:
        raise ConfigurationError(f"unknown body kind {kind!r}")
    extra = set(obj) - _JSON_KEYS[kind]
    if extra:
        raise ConfigurationError(f"unknown keys for {kind}: {sorted(extra)}")
    center = tuple(obj.get("center", ()))
    try:
        if kind == "ball":
            return ball(obj["radius"], int(obj.get("dimension", 3)), center)
        if kind == "ellipsoid":
            return ellipsoid(obj["axes"], center)
        if kind == "superellipsoid":
            return superellipsoid(int(obj.get("p", 4)), obj["axes"], center)
        if kind == "double-cone":
            return double_cone(center)
        return cube(obj["side"], int(obj.get("dimension", 2)), center)
    except KeyError as exc:
        raise ConfigurationError(f"missing key {exc.args[0]!r} for {kind}") from None
    except TypeError as exc:
        raise ConfigurationError(str(exc)) from None


def body_to_json(body: BodySpec) -> dict:
    out: dict = {"kind": body.kind}
    if body.kind == "ball":
        out.update(radius=body.radius, dimension=body.dimension)
    elif body.kind == "ellipsoid":
        out.update(axes=list(body.axes))
    elif body.kind == "superellipsoid":
        out.update(p=int(body.p), axes=list(body.axes))
    elif body.kind == "cube":
        out.update(side=body.side, dimension=body.dimension)
    if any(body.center):
        out["center"] = list(body.center)
    return out


def scaled(body: BodySpec, factor: float) -> BodySpec:
    """The body dilated by ``factor`` about its center."""
    if not factor > 0:
        raise ConfigurationError("scale factor must be positive")
    if body.kind == "ball":
        return BodySpec("ball", body.dimension, radius=body.radius * factor, center=body.center)
    if body.kind in ("ellipsoid", "superellipsoid"):
        return BodySpec(body.kind, body.dimension, axes=tuple(a * factor for a in body.axes),
                        p=body.p, center=body.center)
    if body.kind == "cube":
        return BodySpec("cube", body.dimension, side=body.side * factor, center=body.center)
    raise ConfigurationError("the double cone has a fixed size and cannot be rescaled")


# ---------------------------------------------------------------------------
# Directions and the gauge of smooth bodies
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Direction:
    """A unit vector on the (d-1)-sphere."""

    components: tuple[float, ...]

    def __post_init__(self):
        v = np.asarray(self.components, dtype=float)
        if v.ndim != 1 or v.size < 2:
            raise ConfigurationError("a direction needs at least two components")
        if abs(np.linalg.norm(v) - 1.0) > _DIRECTION_TOL:
            raise ConfigurationError(f"direction must have unit norm, got |theta| = {np.linalg.norm(v)!r}")
        object.__setattr__(self, "components", tuple(float(c) for c in v))

    @classmethod
    def from_vector(cls, v) -> "Direction":
        v = np.asarray(v, dtype=float)
        n = np.linalg.norm(v)
        if n == 0:
            raise ConfigurationError("cannot normalize the zero vector")
        return cls(tuple(v / n))

    @property
    def vec(self) -> np.ndarray:
        return np.asarray(self.components)

    def __neg__(self) -> "Direction":
        return Direction(tuple(-c for c in self.components))


def as_direction(theta, dimension: int | None = None) -> np.ndarray:
    """Validate a direction (Direction or array-like) and return it as an array."""
    v = theta.vec if isinstance(theta, Direction) else np.asarray(theta, dtype=float)
    if v.ndim != 1:
        raise ConfigurationError("direction must be a 1-D vector")
    if dimension is not None and v.size != dimension:
        raise ConfigurationError(f"direction has {v.size} components, body has dimension {dimension}")
    if abs(np.linalg.norm(v) - 1.0) > _DIRECTION_TOL:
        raise ConfigurationError(f"direction must have unit norm, got |theta| = {np.linalg.norm(v)!r}")
    return v


def _gauge_params(body: BodySpec) -> tuple[int, np.ndarray]:
    if body.kind == "ball":
        return 2, np.full(body.dimension, body.radius)
    if body.kind == "ellipsoid":
        return 2, np.asarray(body.axes)
    if body.kind == "superellipsoid":
        return int(body.p), np.asarray(body.axes)
    raise UnsupportedBodyError(f"unsupported: non-smooth body ({body.kind})")


def _require_smooth(body: BodySpec):
    if not body.smooth:
        raise UnsupportedBodyError(f"unsupported: non-smooth body ({body.kind})")


def gauge(body: BodySpec, x) -> np.ndarray:
    """Minkowski functional of the body about its center (<= 1 inside)."""
    x = np.asarray(x, dtype=float)
    y = x - body.center_array
    if body.kind == "cube":
        return np.max(np.abs(y), axis=-1) / (0.5 * body.side)
    if body.kind == "double-cone":
        return np.abs(y[..., 0]) + np.hypot(y[..., 1], y[..., 2])
    p, a = _gauge_params(body)
    return np.sum((y / a) ** p, axis=-1) ** (1.0 / p)


def orthonormal_complement(theta: np.ndarray) -> np.ndarray:
    """Columns spanning theta-perp, built deterministically by Householder reflection."""
    d = theta.size
    e = np.zeros(d)
    k = int(np.argmax(np.abs(theta)))
    e[k] = 1.0
    s = 1.0 if theta[k] >= 0 else -1.0
    v = theta + s * e
    H = np.eye(d) - 2.0 * np.outer(v, v) / (v @ v)
    # H maps e_k to -s*theta; the remaining columns span theta-perp.
    cols = [j for j in range(d) if j != k]
    return H[:, cols]


# ---------------------------------------------------------------------------
# Support function, radii, volume, membership
# ---------------------------------------------------------------------------

def _support_centered(body: BodySpec, theta: np.ndarray) -> float:
    if body.kind == "cube":
        return 0.5 * body.side * float(np.sum(np.abs(theta)))
    if body.kind == "double-cone":
        return float(max(abs(theta[0]), math.hypot(theta[1], theta[2])))
    p, a = _gauge_params(body)
    c = a * theta
    if p == 2:
        return float(np.linalg.norm(c))
    q = p / (p - 1.0)
    return float(np.sum(np.abs(c) ** q) ** (1.0 / q))


def support_value(body: BodySpec, theta) -> float:
    """Support function h(theta) = max over the body of theta . x."""
    th = as_direction(theta, body.dimension)
    return float(th @ body.center_array) + _support_centered(body, th)


def _outer_radius_centered(body: BodySpec) -> float:
    if body.kind == "cube":
        return 0.5 * body.side * math.sqrt(body.dimension)
    if body.kind == "double-cone":
        return 1.0
    p, a = _gauge_params(body)
    if p == 2:
        return float(np.max(a))
    # maximize sum a_i^2 y_i^(2/p) over the simplex; concave, closed-form KKT point
    e = 2.0 * p / (p - 2.0)
    y = a ** e / np.sum(a ** e)
    return float(math.sqrt(np.sum(a ** 2 * y ** (2.0 / p))))


def _inner_radius_centered(body: BodySpec) -> float:
    if body.kind == "cube":
        return 0.5 * body.side
    if body.kind == "double-cone":
        return 1.0 / math.sqrt(2.0)
    _, a = _gauge_params(body)
    return float(np.min(a))


def inner_radius(body: BodySpec) -> float:
    """Radius r1 of a ball about the origin contained in the body."""
    r = _inner_radius_centered(body) - float(np.linalg.norm(body.center_array))
    if r <= 0:
        raise ConfigurationError("origin is not interior to the body")
    return r


def outer_radius(body: BodySpec) -> float:
    """Radius r2 of a ball about the origin containing the body."""
    return _outer_radius_centered(body) + float(np.linalg.norm(body.center_array))


def diameter(body: BodySpec) -> float:
    # every catalog body is centrally symmetric about its center
    return 2.0 * _outer_radius_centered(body)


def volume(body: BodySpec) -> float:
    """Lebesgue volume of the body."""
    d = body.dimension
    if body.kind == "ball":
        return unit_ball_volume(d) * body.radius ** d
    if body.kind == "ellipsoid":
        return unit_ball_volume(d) * float(np.prod(body.axes))
    if body.kind == "superellipsoid":
        p = body.p
        return float(2.0 ** d * np.prod(body.axes) * gamma(1 + 1 / p) ** d / gamma(1 + d / p))
    if body.kind == "double-cone":
        return 2.0 * math.pi / 3.0
    return body.side ** d


def membership(body: BodySpec, x, rtol: float = 1e-12) -> np.ndarray | bool:
    """True where x lies in the closed body (boundary included)."""
    g = gauge(body, x)
    inside = g <= 1.0 + rtol
    return bool(inside) if np.ndim(inside) == 0 else inside


def _require_origin_interior(body: BodySpec):
    if not gauge(body, np.zeros(body.dimension)) < 1.0:
        raise ConfigurationError("origin is not interior to the body")


@dataclass(frozen=True)
class SectionSupport:
    """Support [-a, b] of the parallel section function."""

    a: float
    b: float

    def __post_init__(self):
        if not (self.a > 0 and self.b > 0):
            raise ConfigurationError("support endpoints a, b must be positive")


def support_interval(body: BodySpec, theta) -> SectionSupport:
    """(a, b) with a = h(-theta), b = h(theta)."""
    th = as_direction(theta, body.dimension)
    _require_origin_interior(body)
    return SectionSupport(a=support_value(body, -th), b=support_value(body, th))


# ---------------------------------------------------------------------------
# Normal points and curvature
# ---------------------------------------------------------------------------

def _normal_point_centered(p: int, a: np.ndarray, theta: np.ndarray) -> np.ndarray:
    c = a * theta
    if p == 2:
        return a * c / np.linalg.norm(c)
    q = p / (p - 1.0)
    h = np.sum(np.abs(c) ** q) ** (1.0 / q)
    y = np.sign(c) * np.abs(c) ** (q - 1.0) / h ** (q - 1.0)
    return a * y


def normal_point(body: BodySpec, theta) -> np.ndarray:
    """The boundary point whose outward unit normal is theta."""
    _require_smooth(body)
    th = as_direction(theta, body.dimension)
    p, a = _gauge_params(body)
    return body.center_array + _normal_point_centered(p, a, th)


def _gauge_derivatives(body: BodySpec, x: np.ndarray):
    # gradient and diagonal Hessian of G(x) = sum(((x - c)/a)^p)
    p, a = _gauge_params(body)
    y = (x - body.center_array) / a
    grad = p * y ** (p - 1) / a
    hess = p * (p - 1) * y ** (p - 2) / a ** 2
    return grad, hess


def gauss_curvature(body: BodySpec, theta) -> float:
    """Gaussian curvature of the boundary at normal_point(body, theta)."""
    x = normal_point(body, theta)
    g, h = _gauge_derivatives(body, x)
    d = body.dimension
    total = 0.0
    for i in range(d):
        total += g[i] ** 2 * float(np.prod(np.delete(h, i)))
    return float(total / np.linalg.norm(g) ** (d + 1))


def principal_curvatures(body: BodySpec, x) -> np.ndarray:
    """Principal curvatures of the boundary at the boundary point x."""
    _require_smooth(body)
    x = np.asarray(x, dtype=float)
    g, h = _gauge_derivatives(body, x)
    n = g / np.linalg.norm(g)
    B = orthonormal_complement(n)
    S = (B.T * h) @ B / np.linalg.norm(g)
    return np.sort(np.linalg.eigvalsh(S))


def direction_grid(dimension: int, count: int) -> np.ndarray:
    """Deterministic direction grid: uniform angles on S^1, Fibonacci spiral on S^2."""
    if count < 1:
        raise ConfigurationError("direction grid needs at least one point")
    if dimension == 2:
        phi = 2.0 * np.pi * np.arange(count) / count
        return np.stack([np.cos(phi), np.sin(phi)], axis=1)
    if dimension == 3:
        k = np.arange(count) + 0.5
        z = 1.0 - 2.0 * k / count
        golden = math.pi * (3.0 - math.sqrt(5.0))
        phi = golden * np.arange(count)
        s = np.sqrt(1.0 - z ** 2)
        return np.stack([s * np.cos(phi), s * np.sin(phi), z], axis=1)
    raise ConfigurationError("direction grids are provided for d = 2 and d = 3")


def min_curvature_radius(body: BodySpec, grid_size: int = 2048) -> float:
    """Smallest principal radius of curvature over a boundary grid.

    Used as the rolling-ball radius estimate: a ball of this radius rolls
    freely inside the body near every boundary point.
    """
    _require_smooth(body)
    p, a = _gauge_params(body)
    if p == 2:
        # ellipsoid: the extreme radius of curvature is min_i a_i^2 / max_j a_j
        return float(np.min(a) ** 2 / np.max(a))
    kmax = 0.0
    for th in direction_grid(body.dimension, grid_size):
        x = body.center_array + _normal_point_centered(p, a, th)
        kmax = max(kmax, float(principal_curvatures(body, x)[-1]))
    return 1.0 / kmax


# ---------------------------------------------------------------------------
# Parallel section function
# ---------------------------------------------------------------------------

def singular_points(body: BodySpec, theta) -> np.ndarray:
    """Sorted t-values where the section function may fail to be analytic."""
    th = as_direction(theta, body.dimension)
    a = support_value(body, -th)
    b = support_value(body, th)
    shift = float(th @ body.center_array)
    pts = [-a, b]
    if body.kind == "double-cone":
        tau = math.hypot(th[1], th[2])
        pts += [shift + s for s in (th[0], -th[0], tau, -tau)]
    elif body.kind == "cube":
        half = 0.5 * body.side
        for v in product((-half, half), repeat=body.dimension):
            pts.append(shift + float(th @ np.asarray(v)))
    pts = np.asarray(pts)
    tol = 1e-13 * (a + b)
    inner = pts[(pts > -a + tol) & (pts < b - tol)]
    return np.unique(np.concatenate([[-a], inner, [b]]))


def section_function(body: BodySpec, theta, t):
    """(d-1)-volume of the slice {x in body : theta . x = t}.

    Returns 0 outside the open support (-a, b), endpoints included.
    Accepts scalar or array ``t``.
    """
    th = as_direction(theta, body.dimension)
    t_arr = np.asarray(t, dtype=float)
    flat = np.atleast_1d(t_arr).ravel()
    shift = float(th @ body.center_array)
    tt = flat - shift
    a0 = _support_centered(body, -th)
    b0 = _support_centered(body, th)
    inside = (tt > -a0) & (tt < b0)
    out = np.zeros_like(tt)
    if np.any(inside):
        out[inside] = _section_centered(body, th, tt[inside], a0, b0)
    out = np.maximum(out, 0.0)
    return float(out[0]) if t_arr.ndim == 0 else out.reshape(t_arr.shape)


def section_from_ends(body: BodySpec, theta, s, side: str = "b"):
    """A(b - s) (side='b') or A(-a + s) (side='a') evaluated without cancellation."""
    th = as_direction(theta, body.dimension)
    s = np.asarray(s, dtype=float)
    if body.kind in ("ball", "ellipsoid"):
        p, ax = _gauge_params(body)
        h = float(np.linalg.norm(ax * th))
        d = body.dimension
        ss = np.clip(s, 0.0, 2 * h)
        base = unit_ball_volume(d - 1) * float(np.prod(ax)) / h
        val = base * (ss * (2 * h - ss) / h ** 2) ** ((d - 1) / 2)
        return np.where((s > 0) & (s < 2 * h), val, 0.0)
    if side == "b":
        return section_function(body, th, support_value(body, th) - s)
    return section_function(body, th, -support_value(body, -th) + s)


def _section_centered(body: BodySpec, th: np.ndarray, tt: np.ndarray, a0: float, b0: float) -> np.ndarray:
    d = body.dimension
    if body.kind in ("ball", "ellipsoid"):
        _, ax = _gauge_params(body)
        h = float(np.linalg.norm(ax * th))
        base = unit_ball_volume(d - 1) * float(np.prod(ax)) / h
        return base * ((h - tt) * (h + tt) / h ** 2) ** ((d - 1) / 2)
    if body.kind == "superellipsoid":
        return _section_superellipsoid(body, th, tt, a0, b0)
    if body.kind == "cube":
        return _section_cube(body.side, th, tt)
    return _section_double_cone(th, tt)


def _section_superellipsoid(body, th, tt, a0, b0):
    p, ax = _gauge_params(body)
    d = body.dimension
    axis = np.flatnonzero(np.abs(th) > 1e-15)
    if axis.size == 1:
        i = int(axis[0])
        others = np.delete(ax, i)
        u = np.abs(tt) / ax[i]
        frac = -np.expm1(p * np.log(np.maximum(u, 1e-300)))  # 1 - u^p
        unit = 2.0 ** (d - 1) * math.exp((d - 1) * gammaln(1 + 1 / p) - gammaln(1 + (d - 1) / p))
        return unit * float(np.prod(others)) * frac ** ((d - 1) / p)
    return _polar_slice_volume(body, th, tt + float(th @ body.center_array))


def _section_cube(side: float, th: np.ndarray, tt: np.ndarray) -> np.ndarray:
    # unit centered cube, then rescale; reflections make every component nonnegative
    w = np.abs(th)
    w = w[w > _CUBE_COMPONENT_CUTOFF]
    u = tt / side
    k = w.size
    tau = u + 0.5 * np.sum(w)
    total = np.zeros_like(tau)
    for v in product((0, 1), repeat=k):
        shift = float(np.dot(w, v))
        sign = -1.0 if sum(v) % 2 else 1.0
        if k == 1:
            total += sign * (tau - shift > 0)
        else:
            total += sign * np.maximum(tau - shift, 0.0) ** (k - 1)
    dens = total / (math.factorial(k - 1) * float(np.prod(w)))
    return side ** (len(th) - 1) * dens


def _section_double_cone(th: np.ndarray, tt: np.ndarray) -> np.ndarray:
    t1 = float(th[0])
    tau = math.hypot(th[1], th[2])
    if tau < 1e-14:
        return math.pi * (1.0 - np.abs(tt)) ** 2
    x, w = gauss_legendre(48)
    phi = 0.5 * np.pi * (x + 1.0)
    # x = l + (h - l) sin^2(phi/2) absorbs square-root endpoint behavior
    lift = np.sin(0.5 * phi) ** 2
    jac = 0.5 * np.sin(phi) * 0.5 * np.pi
    out = np.zeros_like(tt)
    for s, lo, hi in ((1.0, 0.0, 1.0), (-1.0, -1.0, 0.0)):
        # L1 = (tau - t) + (t1 - tau s) x >= 0, L2 = (tau + t) - (t1 + tau s) x >= 0
        l = np.full_like(tt, lo)
        h = np.full_like(tt, hi)
        for c0, c1 in (((tau - tt), t1 - tau * s), ((tau + tt), -(t1 + tau * s))):
            if abs(c1) < 1e-300:
                bad = c0 < 0
                h = np.where(bad, l, h)
                continue
            root = -c0 / c1
            if c1 > 0:
                l = np.maximum(l, root)
            else:
                h = np.minimum(h, root)
        ok = h > l
        if not np.any(ok):
            continue
        L = l[ok, None]
        span = (h - l)[ok, None]
        xx = L + span * lift[None, :]
        L1 = (tau - tt[ok, None]) + (t1 - tau * s) * xx
        L2 = (tau + tt[ok, None]) - (t1 + tau * s) * xx
        integrand = np.sqrt(np.maximum(L1 * L2, 0.0)) * span * jac[None, :]
        out[ok] += (2.0 / tau ** 2) * (integrand @ w)
    return out


def _ray_exit(p, ax, center, q, w, r_hi, r0=None):
    """Positive root of G(q + r w) = 1 for points q strictly inside.

    G is convex along every line, so Newton's method started beyond the
    root decreases monotonically onto it. A guess ``r0`` near the root is
    used when given; entries whose first step misbehaves restart at ``r_hi``.
    """
    shape = np.broadcast_shapes(q.shape[:-1], w.shape[:-1])
    qb = np.broadcast_to(q, shape + (q.shape[-1],)).reshape(-1, q.shape[-1])
    wb = np.broadcast_to(w, shape + (w.shape[-1],)).reshape(-1, w.shape[-1])
    m = qb.shape[0]
    if r0 is None:
        r = np.full(m, float(r_hi))
    else:
        r = np.broadcast_to(np.asarray(r0, dtype=float), shape).ravel().copy()

    def newton_step(rr, qq, ww):
        y = (qq + rr[:, None] * ww - center) / ax
        y2 = y * y
        ypm1 = y if p == 2 else y * y2 ** (p // 2 - 1)
        F = np.einsum("ij,ij->i", ypm1, y) - 1.0
        dF = p * np.einsum("ij,ij->i", ypm1, ww / ax)
        return F, dF

    if r0 is not None:
        F, dF = newton_step(r, qb, wb)
        with np.errstate(divide="ignore", invalid="ignore"):
            rn = r - F / dF
        bad = ~(dF > 0) | ~(rn > 0)
        r = np.where(bad, float(r_hi), rn)
    active = np.arange(m)
    for _ in range(400):
        if not active.size:
            break
        rr = r[active]
        F, dF = newton_step(rr, qb[active], wb[active])
        step = F / dF
        rn = rr - step
        r[active] = rn
        # quadratic convergence: the iterate after a 1e-10 step is exact to rounding
        done = np.abs(step) <= 1e-10 * np.abs(rn) + 1e-300
        active = active[~done]
    return r.reshape(shape)


def _support_points(body: BodySpec, th: np.ndarray):
    p, ax = _gauge_params(body)
    c = body.center_array
    return c + _normal_point_centered(p, ax, th), c + _normal_point_centered(p, ax, -th)


def _polar_centers(body, th, t):
    xp, xm = _support_points(body, th)
    lo, hi = float(th @ xm), float(th @ xp)
    lam = (t - lo) / (hi - lo)
    return xm[None, :] + lam[:, None] * (xp - xm)[None, :]


def _polar_slice_volume(body, th, t, rtol: float = 1e-13):
    """Slice volume by the polar formula around an interior point of each slice.

    In d = 3 a coarse pass estimates the slice's second moments and the
    trapezoid rule then runs in the normalized frame, which keeps thin slices
    near flat boundary points well resolved.
    """
    p, ax = _gauge_params(body)
    d = body.dimension
    c = body.center_array
    U = orthonormal_complement(th)
    q = _polar_centers(body, th, np.asarray(t, dtype=float))
    r_hi = 2.5 * _outer_radius_centered(body)
    if d == 2:
        w = U[:, 0]
        r_plus = _ray_exit(p, ax, c, q, w[None, :], r_hi)
        r_minus = _ray_exit(p, ax, c, q, -w[None, :], r_hi)
        return r_plus + r_minus
    # d == 3: coarse pass for the normalizing frame
    n0 = 32
    om, _ = sphere_rule(1, n0)
    dirs = om @ U.T  # (n0, 3)
    r0 = _ray_exit(p, ax, c, q[:, None, :], dirs[None, :, :], r_hi)  # (T, n0)
    pts = r0[:, :, None] * om[None, :, :]  # boundary points in plane coordinates
    M = np.einsum("tki,tkj->tij", pts, pts) / n0
    evals, evecs = np.linalg.eigh(M)
    T = evecs * np.sqrt(2.0 * np.maximum(evals, 1e-300))[:, None, :]  # columns scaled
    detT = np.abs(np.linalg.det(T))
    vol = np.full(len(t), np.nan)
    active = np.arange(len(t))
    scale_floor = 1e-15 * volume(body) / (2 * r_hi)
    n = 32
    while active.size:
        om, wts = sphere_rule(1, 2 * n)
        plane = np.einsum("tij,kj->tki", T[active], om)  # (A, 2n, 2)
        dirs3 = plane @ U.T
        r = _ray_exit(p, ax, c, q[active][:, None, :], dirs3, r_hi, r0=1.0)
        fine = 0.5 * np.sum(r ** 2, axis=1) * (2 * np.pi / (2 * n)) * detT[active]
        coarse = 0.5 * np.sum(r[:, ::2] ** 2, axis=1) * (2 * np.pi / n) * detT[active]
        ok = np.abs(fine - coarse) <= rtol * np.abs(fine) + scale_floor
        if n >= 4096:
            ok[:] = True
        vol[active[ok]] = fine[ok]
        active = active[~ok]
        n *= 2
    return vol


# ---------------------------------------------------------------------------
# Section profile and spherical caps
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SectionProfile:
    """The section function in one direction, with its support."""

    direction: np.ndarray
    support: SectionSupport
    evaluator: Callable

    def __call__(self, t):
        return self.evaluator(t)


def section_profile(body: BodySpec, theta) -> SectionProfile:
    th = as_direction(theta, body.dimension)
    sup = support_interval(body, th)
    return SectionProfile(th, sup, lambda t: section_function(body, th, t))


def _cap_measure_one(body: BodySpec, th: np.ndarray, depth: float, rtol: float = 1e-10) -> float:
    """Area of {y on the boundary : theta . y > h(theta) - depth}."""
    p, ax = _gauge_params(body)
    d = body.dimension
    c = body.center_array
    b = support_value(body, th)
    t = b - depth
    U = orthonormal_complement(th)
    q = _polar_centers(body, th, np.array([t]))[0]
    r_hi = 2.5 * _outer_radius_centered(body)
    if d == 2:
        om = np.array([[1.0], [-1.0]])
        T = np.eye(1)
    else:
        om0, _ = sphere_rule(1, 32)
        r0 = _ray_exit(p, ax, c, q[None, :], om0 @ U.T, r_hi)
        pts = r0[:, None] * om0
        evals, evecs = np.linalg.eigh(pts.T @ pts / len(om0))
        T = evecs * np.sqrt(2.0 * evals)[None, :]
    detT = abs(float(np.linalg.det(T)))

    def estimate(n_ang, n_rad):
        if d == 2:
            dirs_plane, wang = om, np.array([1.0, 1.0])
        else:
            dirs_plane, wang = sphere_rule(1, n_ang)
        plane = dirs_plane @ T.T
        dirs = plane @ U.T
        r = _ray_exit(p, ax, c, q[None, :], dirs, r_hi)  # (K,)
        x, wx = gauss_legendre(n_rad)
        u = 0.5 * (x + 1.0)
        wu = 0.5 * wx
        z = q[None, None, :] + (u[None, :, None] * r[:, None, None]) * dirs[:, None, :]
        lam = _ray_exit(p, ax, c, z, np.broadcast_to(th, z.shape), depth * (1 + 1e-12) + 1e-300)
        y = z + lam[..., None] * th
        g, _ = _gauge_derivatives(body, y)
        cos_n = (g @ th) / np.linalg.norm(g, axis=-1)
        if np.any(cos_n <= 0):
            raise DomainError("cap is not a graph over the tangent plane; increase rho")
        integrand = (u[None, :] ** (d - 2)) * (r[:, None] ** (d - 1)) / cos_n
        return detT * float(np.sum(wang[:, None] * wu[None, :] * integrand))

    n_ang, n_rad = 32, 16
    prev = estimate(n_ang, n_rad)
    for _ in range(8):
        n_ang, n_rad = 2 * n_ang, 2 * n_rad
        cur = estimate(n_ang, n_rad)
        if abs(cur - prev) <= rtol * abs(cur):
            return cur
        prev = cur
    return cur


def cap_surface_measure(body: BodySpec, theta, rho: float) -> tuple[float, float]:
    """Surface measures of the caps of depth 1/rho at p(-theta) and p(theta)."""
    _require_smooth(body)
    th = as_direction(theta, body.dimension)
    r1 = inner_radius(body)
    if not rho > 1.0 / r1:
        raise DomainError(f"rho must exceed 1/r1 = {1.0 / r1:.6g}, got {rho}")
    depth = 1.0 / rho
    return _cap_measure_one(body, -th, depth), _cap_measure_one(body, th, depth)


def symmetry_key(body: BodySpec, theta) -> tuple:
    """A key shared by directions related by a symmetry of the centered body.

    Sign flips of coordinates map every centered catalog body to itself;
    permutations do as well when the semi-axes coincide. Quantities such as
    |chi_hat(s theta)| and the section function values at the support ends
    agree for directions with equal keys.
    """
    th = as_direction(theta, body.dimension)
    if any(body.center):
        return tuple(np.round(th, 12))
    v = np.abs(th)
    if body.kind == "double-cone":
        v = np.array([v[0], math.hypot(v[1], v[2]), 0.0])
    elif body.kind in ("ball", "cube") or len(set(body.axes or ())) == 1:
        v = np.sort(v)
    return (body.kind,) + tuple(np.round(v, 12) + 0.0)
