"""Fourier transforms of indicator functions of convex bodies.

Forward convention: chi_hat(xi) = integral over the body of exp(-2 pi i xi . x).
Three independent routes are provided (closed form, section function,
boundary integral) together with the leading stationary-phase term for
positively curved bodies and the finite-difference operator.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.special import jv

from . import bodies as B
from .errors import AccuracyError, ConfigurationError, UnsupportedBodyError, UnsupportedQueryError
from .quadrature import PanelRule, filon_transform, gauss_legendre, graded_breakpoints

TWO_PI = 2.0 * math.pi
EPS = np.finfo(float).eps

# (Gauss order per panel, interior panels per gap) for successive refinement levels
SECTION_LEVELS = ((16, 4), (24, 6), (32, 8), (40, 10), (48, 12), (56, 16))
_GRADING = dict(sigma=0.15, levels=18)


@dataclass(frozen=True)
class FourierQuery:
    """Evaluate chi_hat at xi = rho * theta."""

    body: B.BodySpec
    theta: tuple[float, ...]
    rho: float
    tolerance: float = 1e-10

    def __post_init__(self):
        th = B.as_direction(self.theta, self.body.dimension)
        object.__setattr__(self, "theta", tuple(float(x) for x in th))
        if not (self.rho >= 0 and math.isfinite(self.rho)):
            raise ConfigurationError(f"rho must be finite and nonnegative, got {self.rho!r}")
        if not (0 < self.tolerance <= 1e-2):
            raise ConfigurationError("tolerance must lie in (0, 1e-2]")

    @property
    def direction(self) -> np.ndarray:
        return np.asarray(self.theta)


@dataclass(frozen=True)
class FiniteDifferenceSpec:
    order: int
    step: float

    def __post_init__(self):
        if not isinstance(self.order, (int, np.integer)) or not 1 <= self.order <= 12:
            raise ConfigurationError("finite-difference order must be an integer in [1, 12]")
        if not self.step > 0:
            raise ConfigurationError("finite-difference step must be positive")


def _phase(body: B.BodySpec, xi: np.ndarray) -> np.ndarray:
    # translation by the center multiplies the transform by exp(-2 pi i xi . c)
    c = body.center_array
    if not np.any(c):
        return np.ones(xi.shape[:-1], dtype=complex)
    return np.exp(-1j * TWO_PI * (xi @ c))


# ---------------------------------------------------------------------------
# Closed forms
# ---------------------------------------------------------------------------

def _ball_radial(d: int, R: float, rho: np.ndarray) -> np.ndarray:
    """Transform of the centered ball of radius R at |xi| = rho."""
    rho = np.asarray(rho, dtype=float)
    out = np.empty_like(rho)
    small = rho * R < 1e-3
    x = TWO_PI * R * rho
    if np.any(small):
        # series: vol * sum_k (-1)^k (x/2)^(2k) Gamma(d/2+1) / (k! Gamma(d/2+k+1))
        z = (0.5 * x[small]) ** 2
        nu = d / 2.0
        term = np.ones_like(z)
        acc = np.ones_like(z)
        for k in range(1, 8):
            term = -term * z / (k * (nu + k))
            acc += term
        out[small] = B.unit_ball_volume(d) * R ** d * acc
    big = ~small
    if np.any(big):
        r = rho[big]
        out[big] = R ** (d / 2.0) * r ** (-d / 2.0) * jv(d / 2.0, x[big])
    return out


def closed_form_available(body: B.BodySpec, theta=None) -> bool:
    if body.kind in ("ball", "ellipsoid", "cube"):
        return True
    if body.kind == "superellipsoid" and body.p == 2:
        return True
    if body.kind == "double-cone" and theta is not None:
        th = np.asarray(theta, dtype=float)
        return bool(np.all(np.abs(th[1:]) < 1e-15))
    return False


def _double_cone_axis(rho: np.ndarray) -> np.ndarray:
    rho = np.asarray(rho, dtype=float)
    out = np.empty_like(rho)
    small = rho < 0.05
    if np.any(small):
        # 2 pi * integral_0^1 (1-t)^2 cos(2 pi rho t) dt as a Taylor series
        w2 = (TWO_PI * rho[small]) ** 2
        acc = np.zeros_like(w2)
        term = np.ones_like(w2)
        for k in range(0, 10):
            if k:
                term = -term * w2 / ((2 * k - 1) * (2 * k))
            acc += term * 2.0 / ((2 * k + 1) * (2 * k + 2) * (2 * k + 3))
        out[small] = TWO_PI * acc
    r = rho[~small]
    out[~small] = 1.0 / (math.pi * r ** 2) - np.sin(TWO_PI * r) / (2 * math.pi ** 2 * r ** 3)
    return out


def closed_form_xi(body: B.BodySpec, xi) -> np.ndarray:
    """Closed-form transform at arbitrary frequency vectors xi (shape (..., d))."""
    xi = np.asarray(xi, dtype=float)
    if xi.shape[-1] != body.dimension:
        raise ConfigurationError("frequency dimension does not match the body")
    d = body.dimension
    if body.kind == "ball":
        core = _ball_radial(d, body.radius, np.linalg.norm(xi, axis=-1))
    elif body.kind == "ellipsoid" or (body.kind == "superellipsoid" and body.p == 2):
        ax = np.asarray(body.axes)
        core = float(np.prod(ax)) * _ball_radial(d, 1.0, np.linalg.norm(xi * ax, axis=-1))
    elif body.kind == "cube":
        s = body.side
        core = np.prod(s * np.sinc(s * xi), axis=-1)
    elif body.kind == "double-cone":
        if np.any(np.abs(xi[..., 1:]) > 1e-15 * np.maximum(1.0, np.abs(xi[..., :1]))):
            raise UnsupportedQueryError("double cone closed form is available along its axis only")
        core = _double_cone_axis(np.abs(xi[..., 0]))
    else:
        raise UnsupportedQueryError(f"no closed form for {body.kind} with p={body.p}")
    return core * _phase(body, xi)


def ft_closed_form_many(body: B.BodySpec, theta, rhos) -> np.ndarray:
    th = B.as_direction(theta, body.dimension)
    if not closed_form_available(body, th):
        raise UnsupportedQueryError(f"no closed form for {body.kind} in direction {tuple(th)}")
    rhos = np.asarray(rhos, dtype=float)
    return closed_form_xi(body, rhos[..., None] * th)


def ft_closed_form(query: FourierQuery) -> complex:
    if query.rho == 0:
        return complex(B.volume(query.body))
    return complex(ft_closed_form_many(query.body, query.direction, np.array([query.rho]))[0])


# ---------------------------------------------------------------------------
# Transform of the section function
# ---------------------------------------------------------------------------

@dataclass
class SectionTransformer:
    """Filon-Legendre transform of one body's section function in one direction.

    Section samples are cached per refinement level, so repeated calls
    with new frequencies only pay for the oscillatory moments.
    """

    body: B.BodySpec
    theta: np.ndarray
    levels: tuple = SECTION_LEVELS

    def __post_init__(self):
        self.theta = B.as_direction(self.theta, self.body.dimension)
        self.singular = B.singular_points(self.body, self.theta)
        self.vol = B.volume(self.body)
        self._cache: dict[int, tuple[PanelRule, np.ndarray]] = {}

    def _level(self, k: int) -> tuple[PanelRule, np.ndarray]:
        if k not in self._cache:
            order, interior = self.levels[k]
            edges = graded_breakpoints(self.singular, interior=interior, **_GRADING)
            rule = PanelRule.from_breakpoints(edges, order)
            vals = B.section_function(self.body, self.theta, rule.nodes)
            self._cache[k] = (rule, vals)
        return self._cache[k]

    def transform(self, rhos, tolerance: float = 1e-10, strict: bool = True) -> np.ndarray:
        """Transform at each rho, refining level by level until successive levels agree."""
        rhos = np.asarray(rhos, dtype=float)
        flat = rhos.ravel()
        out = np.full(flat.shape, np.nan, dtype=complex)
        zero = flat == 0
        out[zero] = self.vol
        todo = np.flatnonzero(~zero)
        floor = 32 * EPS * self.vol
        prev = None
        last = ()
        for k in range(len(self.levels)):
            if not todo.size:
                break
            rule, vals = self._level(k)
            cur = filon_transform(rule, vals, flat[todo], direct_limit=1.0)
            if prev is not None:
                ok = np.abs(cur - prev) <= tolerance * np.abs(cur) + floor
                out[todo[ok]] = cur[ok]
                last = (prev[~ok], cur[~ok])
                todo, cur = todo[~ok], cur[~ok]
            prev = cur
        if todo.size:
            if strict:
                raise AccuracyError(
                    f"section transform did not reach tolerance {tolerance:g} at rho = {flat[todo][:4]}",
                    iterates=last)
            out[todo] = prev
        return out.reshape(rhos.shape)

    def transform_bulk(self, rhos, tolerance: float = 1e-10, probes: int = 24) -> np.ndarray:
        """Transform at many frequencies using one refinement level for all of them.

        The level is the first one certified on a log-spaced probe subset that
        includes the largest frequency; the error of the panel rule varies
        smoothly with frequency, so the probes stand in for the full set.
        """
        rhos = np.asarray(rhos, dtype=float)
        flat = np.abs(rhos.ravel())
        pos = flat[flat > 0]
        if pos.size <= 2 * probes:
            return self.transform(rhos, tolerance)
        probe = np.unique(np.quantile(pos, np.linspace(0.0, 1.0, probes)))
        floor = 32 * EPS * self.vol
        prev = None
        for k in range(len(self.levels)):
            rule, vals = self._level(k)
            cur = filon_transform(rule, vals, probe, direct_limit=1.0)
            if prev is not None and np.all(np.abs(cur - prev) <= tolerance * np.abs(cur) + floor):
                break
            if k == len(self.levels) - 1:
                raise AccuracyError(f"section transform did not reach tolerance {tolerance:g}",
                                    iterates=(prev, cur))
            prev = cur
        return filon_transform(rule, vals, rhos.ravel(), direct_limit=1.0).reshape(rhos.shape)


def ft_via_section_many(body: B.BodySpec, theta, rhos, tolerance: float = 1e-10) -> np.ndarray:
    return SectionTransformer(body, theta).transform(rhos, tolerance)


def ft_via_section(query: FourierQuery) -> complex:
    if query.rho == 0:
        return complex(B.volume(query.body))
    return complex(ft_via_section_many(query.body, query.direction, [query.rho], query.tolerance)[0])


# ---------------------------------------------------------------------------
# Divergence-theorem boundary integral
# ---------------------------------------------------------------------------

def _int_power(x: np.ndarray, k: int) -> np.ndarray:
    out = x
    for _ in range(k - 1):
        out = out * x
    return out


def _radial_boundary(body: B.BodySpec, omega: np.ndarray):
    """Boundary radius along unit vectors omega and the vector area density."""
    p, ax = B._gauge_params(body)
    u = omega / ax
    u2 = u * u
    g = np.sum(_int_power(u2, p // 2), axis=-1) ** (1.0 / p)
    r = 1.0 / g
    y = r[..., None] * omega
    # n dsigma = r^d grad G / p domega for the degree-p homogeneous gauge G
    grad = _int_power(y, p - 1) / ax ** p
    return r, y, grad


def _surface_sum(body, th, rho, n_theta_panels, order, n_phi):
    d = body.dimension
    if d == 2:
        phi = TWO_PI * np.arange(n_phi) / n_phi
        U = B.orthonormal_complement(th)[:, 0]
        omega = np.cos(phi)[:, None] * th + np.sin(phi)[:, None] * U
        r, y, grad = _radial_boundary(body, omega)
        integrand = np.exp(-1j * TWO_PI * rho * (y @ th)) * r ** 2 * (grad @ th)
        return np.sum(integrand) * (TWO_PI / n_phi)
    U = B.orthonormal_complement(th)
    x, w = gauss_legendre(order)
    edges = np.linspace(0.0, math.pi, n_theta_panels + 1)
    mid = 0.5 * (edges[1:] + edges[:-1])
    half = 0.5 * (edges[1:] - edges[:-1])
    theta = (mid[:, None] + half[:, None] * x[None, :]).ravel()
    wt = (half[:, None] * w[None, :]).ravel() * np.sin(theta)
    phi = TWO_PI * np.arange(n_phi) / n_phi
    ring = np.cos(phi)[:, None] * U[:, 0] + np.sin(phi)[:, None] * U[:, 1]  # (n_phi, 3)
    total = 0.0 + 0.0j
    block = max(1, 200_000 // n_phi)
    for start in range(0, theta.size, block):
        ct = np.cos(theta[start:start + block])
        st = np.sin(theta[start:start + block])
        omega = ct[:, None, None] * th + st[:, None, None] * ring[None, :, :]
        r, y, grad = _radial_boundary(body, omega)
        integrand = np.exp(-1j * TWO_PI * rho * (y @ th)) * r ** 3 * (grad @ th)
        total += np.sum(integrand.sum(axis=1) * wt[start:start + block])
    return total * (TWO_PI / n_phi)


def ft_via_surface(query: FourierQuery, max_refinements: int = 5) -> complex:
    """(i / (2 pi rho)) * boundary integral of exp(-2 pi i xi . x) (theta . n) dsigma."""
    body = query.body
    if not body.smooth:
        raise UnsupportedBodyError(f"unsupported: non-smooth body ({body.kind})")
    if body.dimension not in (2, 3):
        raise UnsupportedQueryError("boundary quadrature is implemented for d = 2 and d = 3")
    rho = query.rho
    if rho == 0:
        return complex(B.volume(body))
    th = query.direction
    r1 = B._inner_radius_centered(body)
    r2 = B._outer_radius_centered(body)
    order = 24
    # phase budget: about 2.5 radians of oscillation per Gauss node in the polar angle
    n_panels = int(math.ceil(TWO_PI * rho * 2 * r2 / (2.5 * order))) + 4
    # in d = 2 the angle carries the full phase; in d = 3 only its variation across a ring
    spread = r2 if body.dimension == 2 else r2 - r1
    n_phi = int(math.ceil(1.1 * TWO_PI * rho * spread)) + 48
    floor = 8 * EPS * B.volume(body) * TWO_PI * rho
    prev = _surface_sum(body, th, rho, n_panels, order, n_phi)
    for _ in range(max_refinements):
        n_panels = int(math.ceil(1.3 * n_panels))
        n_phi = int(math.ceil(1.3 * n_phi))
        cur = _surface_sum(body, th, rho, n_panels, order, n_phi)
        converged = abs(cur - prev) <= query.tolerance * abs(cur) + floor
        prev = cur
        if converged:
            break
    else:
        raise AccuracyError(f"boundary quadrature did not converge at rho = {rho}", iterates=(prev, cur))
    return complex(1j / (TWO_PI * rho) * prev * _phase(body, rho * th))


# ---------------------------------------------------------------------------
# Leading stationary-phase term
# ---------------------------------------------------------------------------

def _require_positive_curvature(body: B.BodySpec):
    if not body.smooth:
        raise UnsupportedBodyError(f"unsupported: non-smooth body ({body.kind})")
    if body.kind == "superellipsoid" and body.p != 2:
        raise UnsupportedBodyError("curvature vanishes on superellipsoids with p > 2")


def herz_leading_term_many(body: B.BodySpec, theta, rhos) -> np.ndarray:
    _require_positive_curvature(body)
    th = B.as_direction(theta, body.dimension)
    rhos = np.asarray(rhos, dtype=float)
    d = body.dimension
    k_plus = B.gauss_curvature(body, th)
    k_minus = B.gauss_curvature(body, -th)
    if not (k_plus > 0 and k_minus > 0):
        raise UnsupportedBodyError("curvature must be positive at both normal points")
    s_plus = float(th @ B.normal_point(body, th))
    s_minus = float(th @ B.normal_point(body, -th))
    shift = (d - 1) / 8.0
    bracket = (k_plus ** -0.5 * np.exp(-1j * TWO_PI * (rhos * s_plus - shift))
               - k_minus ** -0.5 * np.exp(-1j * TWO_PI * (rhos * s_minus + shift)))
    return -1.0 / (TWO_PI * 1j) * rhos ** (-(d + 1) / 2.0) * bracket


def herz_leading_term(query: FourierQuery) -> complex:
    if query.rho < 1:
        raise ConfigurationError("the leading term is defined for rho >= 1")
    return complex(herz_leading_term_many(query.body, query.direction, [query.rho])[0])


def herz_residual_envelope(body: B.BodySpec, theta, rhos, samples: int = 32) -> np.ndarray:
    """max over [rho, rho + 1] of |chi_hat - leading term|, for each rho."""
    th = B.as_direction(theta, body.dimension)
    rhos = np.asarray(rhos, dtype=float)
    grid = rhos[:, None] + np.linspace(0.0, 1.0, samples)[None, :]
    exact = transform_many(body, th, grid.ravel()).reshape(grid.shape)
    lead = herz_leading_term_many(body, th, grid.ravel()).reshape(grid.shape)
    return np.max(np.abs(exact - lead), axis=1)


# ---------------------------------------------------------------------------
# Best-available transform
# ---------------------------------------------------------------------------

def transform_many(body: B.BodySpec, theta, rhos, tolerance: float = 1e-10) -> np.ndarray:
    """chi_hat(rho * theta) by the closed form when one exists, else via sections."""
    th = B.as_direction(theta, body.dimension)
    if closed_form_available(body, th):
        return ft_closed_form_many(body, th, rhos)
    return ft_via_section_many(body, th, rhos, tolerance)


# ---------------------------------------------------------------------------
# Finite differences
# ---------------------------------------------------------------------------

def finite_difference(f: Callable, spec: FiniteDifferenceSpec, t):
    """Forward difference of order d: sum_k C(d,k) (-1)^(d-k) f(t + k h)."""
    d, h = int(spec.order), spec.step
    total = 0.0
    for k in range(d + 1):
        total = total + math.comb(d, k) * (-1) ** (d - k) * f(t + k * h)
    return total


def fd_multiplier(xi, spec: FiniteDifferenceSpec):
    """Fourier multiplier (exp(2 pi i h xi) - 1)^d of the forward difference."""
    val = (np.exp(1j * TWO_PI * spec.step * np.asarray(xi, dtype=float)) - 1.0) ** int(spec.order)
    return complex(val) if np.ndim(val) == 0 else val
