"""Quadrature building blocks: Gauss rules, graded panels and Filon-Legendre transforms."""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from numpy.polynomial import legendre as npleg
from scipy.special import spherical_jn

TWO_PI = 2.0 * np.pi


@lru_cache(maxsize=None)
def gauss_legendre(n: int) -> tuple[np.ndarray, np.ndarray]:
    """Nodes and weights of the n-point Gauss-Legendre rule on [-1, 1]."""
    x, w = npleg.leggauss(n)
    x.setflags(write=False)
    w.setflags(write=False)
    return x, w


@lru_cache(maxsize=None)
def _legendre_projector(n: int) -> np.ndarray:
    # Row k maps nodal values to the k-th Legendre coefficient of the interpolant.
    x, w = gauss_legendre(n)
    V = npleg.legvander(x, n - 1)  # (n, n): P_k(x_j)
    k = np.arange(n)
    P = ((2 * k + 1) / 2.0)[:, None] * (V.T * w[None, :])
    P.setflags(write=False)
    return P


def composite_gauss(lo: float, hi: float, panels: int, order: int) -> tuple[np.ndarray, np.ndarray]:
    """Composite Gauss-Legendre rule with ``panels`` equal panels on [lo, hi]."""
    x, w = gauss_legendre(order)
    edges = np.linspace(lo, hi, panels + 1)
    mid = 0.5 * (edges[1:] + edges[:-1])
    half = 0.5 * (edges[1:] - edges[:-1])
    nodes = (mid[:, None] + half[:, None] * x[None, :]).ravel()
    weights = (half[:, None] * w[None, :]).ravel()
    return nodes, weights


def graded_breakpoints(points, sigma: float = 0.25, levels: int = 24, interior: int = 4) -> np.ndarray:
    """Breakpoints refined geometrically toward every entry of ``points``.

    ``points`` are the sorted singular locations (interval ends included).
    Each gap is split into a quarter graded toward its left end, a quarter
    graded toward its right end, and ``interior`` equal middle panels.
    """
    pts = np.unique(np.asarray(points, dtype=float))
    out = [pts[0]]
    for left, right in zip(pts[:-1], pts[1:]):
        L = right - left
        if L <= 0:
            continue
        q = 0.25 * L
        scales = q * sigma ** np.arange(levels - 1, -1, -1)  # ascending
        out.extend(left + scales)
        out.extend(np.linspace(left + q, right - q, interior + 1)[1:-1])
        out.extend(right - scales[::-1])
        out.append(right)
    return np.unique(np.asarray(out))


@dataclass(frozen=True)
class PanelRule:
    """Gauss nodes laid out on a list of panels; the nodes are the sample sites."""

    mid: np.ndarray    # (P,)
    half: np.ndarray   # (P,)
    order: int

    @classmethod
    def from_breakpoints(cls, edges: np.ndarray, order: int) -> "PanelRule":
        edges = np.asarray(edges, dtype=float)
        mid = 0.5 * (edges[1:] + edges[:-1])
        half = 0.5 * (edges[1:] - edges[:-1])
        keep = half > 0
        return cls(mid[keep], half[keep], order)

    @property
    def nodes(self) -> np.ndarray:
        x, _ = gauss_legendre(self.order)
        return self.mid[:, None] + self.half[:, None] * x[None, :]

    def integrate(self, values: np.ndarray) -> float:
        _, w = gauss_legendre(self.order)
        return float(np.sum(self.half[:, None] * w[None, :] * values))


def spherical_bessel_table(n: int, x: np.ndarray) -> np.ndarray:
    """j_0..j_(n-1) at nonnegative x, stacked on a new last axis.

    Upward recurrence is stable while the order stays below the argument,
    so it is used for x >= n; smaller arguments go through scipy.
    """
    x = np.asarray(x, dtype=float)
    out = np.empty(x.shape + (n,))
    big = x >= n
    if np.any(big):
        xb = x[big]
        s, c = np.sin(xb), np.cos(xb)
        inv = 1.0 / xb
        j0 = s * inv
        tab = np.empty(xb.shape + (n,))
        tab[..., 0] = j0
        if n > 1:
            j1 = (j0 - c) * inv
            tab[..., 1] = j1
            for k in range(1, n - 1):
                j0, j1 = j1, (2 * k + 1) * inv * j1 - j0
                tab[..., k + 1] = j1
        out[big] = tab
    small = ~big
    if np.any(small):
        out[small] = spherical_jn(np.arange(n)[None, :], x[small][:, None])
    return out


def filon_transform(rule: PanelRule, values: np.ndarray, freqs, direct_limit: float = 6.0,
                    chunk: int = 2048) -> np.ndarray:
    """Evaluate sum over panels of the integral f(t) exp(-2 pi i nu t) dt.

    ``values`` has shape (P, order) and holds f at ``rule.nodes``. On each
    panel f is replaced by its Legendre interpolant and the product with the
    exponential is integrated exactly through spherical Bessel moments, so the
    error does not grow with the frequency. Panels whose phase excursion
    2 pi nu h stays below ``direct_limit`` use the plain Gauss sum instead.
    """
    freqs = np.atleast_1d(np.asarray(freqs, dtype=float))
    n = rule.order
    x, w = gauss_legendre(n)
    values = np.asarray(values, dtype=float).reshape(len(rule.mid), n)
    coeffs = values @ _legendre_projector(n).T  # (P, n)
    kk = np.arange(n)
    phase_k = 2.0 * (-1j) ** kk  # 2 (-i)^k

    out = np.empty(freqs.shape, dtype=complex)
    nu_max = np.max(np.abs(freqs)) if freqs.size else 0.0
    omega_max = TWO_PI * nu_max * rule.half
    direct = omega_max <= direct_limit
    filon = ~direct

    d_nodes = (rule.mid[direct][:, None] + rule.half[direct][:, None] * x[None, :]).ravel()
    d_wf = (rule.half[direct][:, None] * w[None, :] * values[direct]).ravel()
    f_mid = rule.mid[filon]
    f_half = rule.half[filon]
    f_coef = coeffs[filon] * phase_k[None, :]  # (Pf, n)

    for start in range(0, freqs.size, chunk):
        nu = freqs[start:start + chunk]
        acc = np.zeros(nu.shape, dtype=complex)
        if d_nodes.size:
            acc += np.exp(-1j * TWO_PI * np.outer(nu, d_nodes)) @ d_wf
        if f_mid.size:
            om = TWO_PI * nu[:, None] * f_half[None, :]  # (F, Pf)
            # spherical_jn is even/odd in its argument; use |omega| and fix the sign.
            jk = spherical_bessel_table(n, np.abs(om))  # (F, Pf, n)
            sgn = np.where(om[:, :, None] < 0, (-1.0) ** kk[None, None, :], 1.0)
            moments = np.einsum("fpk,pk->fp", jk * sgn, f_coef)
            acc += np.sum(f_half[None, :] * np.exp(-1j * TWO_PI * nu[:, None] * f_mid[None, :]) * moments,
                          axis=1)
        out[start:start + chunk] = acc
    return out


@lru_cache(maxsize=None)
def sphere_rule(dim: int, n: int) -> tuple[np.ndarray, np.ndarray]:
    """Product quadrature on the unit sphere S^dim embedded in R^(dim+1).

    dim=0: the two points +-1. dim=1: n-point trapezoid on the circle.
    dim=2: n Gauss nodes in cos(theta) times 2n trapezoid nodes in phi.
    Returns (points, weights) with weights summing to the sphere measure.
    """
    if dim == 0:
        pts = np.array([[1.0], [-1.0]])
        wts = np.array([1.0, 1.0])
    elif dim == 1:
        phi = TWO_PI * np.arange(n) / n
        pts = np.stack([np.cos(phi), np.sin(phi)], axis=1)
        wts = np.full(n, TWO_PI / n)
    elif dim == 2:
        z, wz = gauss_legendre(n)
        m = 2 * n
        phi = TWO_PI * np.arange(m) / m
        s = np.sqrt(1.0 - z ** 2)
        pts = np.stack([
            np.outer(s, np.cos(phi)).ravel(),
            np.outer(s, np.sin(phi)).ravel(),
            np.repeat(z, m),
        ], axis=1)
        wts = np.repeat(wz, m) * (TWO_PI / m)
    else:
        raise ValueError(f"sphere_rule supports dim <= 2, got {dim}")
    pts.setflags(write=False)
    wts.setflags(write=False)
    return pts, wts


def loglog_slope(x, y) -> float:
    """Least-squares slope of log(y) against log(x)."""
    lx = np.log(np.asarray(x, dtype=float))
    ly = np.log(np.asarray(y, dtype=float))
    A = np.vstack([lx, np.ones_like(lx)]).T
    slope, _ = np.linalg.lstsq(A, ly, rcond=None)[0]
    return float(slope)
