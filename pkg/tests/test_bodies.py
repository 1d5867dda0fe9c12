import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.optimize import fsolve, minimize
from scipy.special import gamma

from disclab import bodies as B
from disclab.errors import ConfigurationError, DomainError, UnsupportedBodyError


def test_validation_rejects_bad_bodies():
    with pytest.raises(ConfigurationError):
        B.ball(-1.0, 2)
    with pytest.raises(ConfigurationError):
        B.superellipsoid(3, (1.0, 1.0))
    with pytest.raises(ConfigurationError):
        B.ellipsoid((1.0, 0.0))
    with pytest.raises(ConfigurationError):
        B.body_from_json({"kind": "ball", "radius": 1.0, "dimension": 2, "colour": "red"})


def test_json_roundtrip():
    for body in (B.ball(2.0, 3), B.ellipsoid((2.0, 1.0)), B.superellipsoid(4, (1.0, 2.0)), B.double_cone(),
                 B.cube(0.5, 2)):
        assert B.body_from_json(B.body_to_json(body)) == body


def test_smoothness_flags():
    assert B.ball(1.0, 2).smooth and B.superellipsoid(4, (1.0, 1.0)).smooth
    assert not B.double_cone().smooth and not B.cube(1.0, 3).smooth


def test_volumes():
    assert B.volume(B.ball(1.0, 2)) == pytest.approx(math.pi, rel=1e-15)
    assert B.volume(B.double_cone()) == pytest.approx(2 * math.pi / 3, rel=1e-15)
    expected = 4 * gamma(1.25) ** 2 / gamma(1.5)
    assert B.volume(B.superellipsoid(4, (1.0, 1.0))) == pytest.approx(expected, rel=1e-12)
    assert expected == pytest.approx(3.7081, abs=5e-5)


def test_superellipsoid_volume_monte_carlo():
    rng = np.random.default_rng(1)
    x = rng.uniform(-1, 1, size=(1_000_000, 2))
    frac = np.mean(B.membership(B.superellipsoid(4, (1.0, 1.0)), x))
    assert 4 * frac == pytest.approx(B.volume(B.superellipsoid(4, (1.0, 1.0))), abs=1e-2)


def test_sections_of_ball_and_cone():
    ball = B.ball(1.0, 3)
    th = np.array([0.3, -0.4, 0.866])
    th /= np.linalg.norm(th)
    assert B.section_function(ball, th, 0.0) == pytest.approx(math.pi, rel=1e-14)
    assert B.section_function(ball, th, 0.6) == pytest.approx(0.64 * math.pi, rel=1e-14)
    cone = B.double_cone()
    t = np.linspace(-0.99, 0.99, 21)
    assert np.allclose(B.section_function(cone, [1.0, 0.0, 0.0], t), math.pi * (1 - np.abs(t)) ** 2,
                       rtol=1e-12)


def test_ball_slice_area_monte_carlo():
    # fraction of the square [-1, 1]^2 covered by the slice of the unit ball at height 0.6
    rng = np.random.default_rng(5)
    u = rng.uniform(-1, 1, size=(1_000_000, 2))
    est = 4 * np.mean(np.sum(u ** 2, axis=1) + 0.36 <= 1)
    assert est == pytest.approx(float(B.section_function(B.ball(1.0, 3), [0, 0, 1.0], 0.6)), rel=5e-3)


@pytest.mark.parametrize("body", [B.ball(1.0, 2), B.ellipsoid((2.0, 1.0)), B.superellipsoid(4, (1.0, 1.0)),
                                  B.superellipsoid(4, (1.0, 0.7, 1.3)), B.cube(1.0, 3), B.double_cone(),
                                  B.ellipsoid((1.0, 2.0, 0.5))])
def test_sections_integrate_to_volume(body):
    v = np.arange(1, body.dimension + 1, dtype=float)
    th = v / np.linalg.norm(v)
    sup = B.support_interval(body, th)
    from disclab.quadrature import composite_gauss
    t, w = composite_gauss(-sup.a, sup.b, 64, 16)
    assert np.sum(w * B.section_function(body, th, t)) == pytest.approx(B.volume(body), rel=1e-6)


def test_support_intervals():
    s = B.support_interval(B.ball(1.0, 3), [0.0, 1.0, 0.0])
    assert (s.a, s.b) == pytest.approx((1.0, 1.0))
    s = B.support_interval(B.ellipsoid((2.0, 1.0)), [1.0, 0.0])
    assert (s.a, s.b) == pytest.approx((2.0, 2.0))


def test_superellipsoid_support_against_constrained_maximum():
    body = B.superellipsoid(4, (1.0, 1.0, 1.0))
    th = np.ones(3) / math.sqrt(3)
    res = minimize(lambda x: -th @ x, x0=np.full(3, 0.5), method="SLSQP",
                   constraints=[{"type": "eq", "fun": lambda x: np.sum(x ** 4) - 1}],
                   options={"ftol": 1e-15, "maxiter": 500})
    numeric = -res.fun
    assert B.support_interval(body, th).b == pytest.approx(numeric, abs=1e-8)
    assert numeric == pytest.approx(3 ** 0.25, abs=1e-8)


def test_normal_points():
    th = np.array([0.6, 0.8])
    assert np.allclose(B.normal_point(B.ball(1.0, 2), th), th)
    assert np.allclose(B.normal_point(B.ellipsoid((1.0, 2.0, 3.0)), [0, 0, 1.0]), [0, 0, 3.0])


def test_superellipsoid_normal_point_lagrange_residual():
    body = B.superellipsoid(4, (1.0, 1.0))
    th = np.array([1.0, 1.0]) / math.sqrt(2)
    x = B.normal_point(body, th)

    def lagrange(v):
        p, lam = v[:2], v[2]
        return np.concatenate([4 * p ** 3 - lam * th, [np.sum(p ** 4) - 1]])

    ref = fsolve(lagrange, [0.8, 0.8, 3.0], xtol=1e-14)
    assert np.max(np.abs(lagrange(np.concatenate([x, [ref[2]]])))) <= 1e-10
    assert np.allclose(x, ref[:2], atol=1e-10)


def test_gauss_curvature():
    assert B.gauss_curvature(B.ball(2.0, 3), [0.0, 0.0, 1.0]) == pytest.approx(0.25, rel=1e-12)
    assert B.gauss_curvature(B.superellipsoid(4, (1.0, 1.0)), [1.0, 0.0]) == pytest.approx(0.0, abs=1e-12)


def test_ellipse_curvature_against_finite_differences():
    # boundary (2 cos s, sin s); curvature |x'y'' - y'x''| / |x'|^3 at s = 0 by central differences
    h = 1e-4
    s = np.array([-h, 0.0, h])
    x, y = 2 * np.cos(s), np.sin(s)
    dx, dy = (x[2] - x[0]) / (2 * h), (y[2] - y[0]) / (2 * h)
    ddx, ddy = (x[2] - 2 * x[1] + x[0]) / h ** 2, (y[2] - 2 * y[1] + y[0]) / h ** 2
    oracle = abs(dx * ddy - dy * ddx) / (dx * dx + dy * dy) ** 1.5
    value = B.gauss_curvature(B.ellipsoid((2.0, 1.0)), [1.0, 0.0])
    assert value == pytest.approx(oracle, rel=1e-6)
    assert value == pytest.approx(2.0, rel=1e-12)


def test_cap_measures():
    lo, hi = B.cap_surface_measure(B.ball(1.0, 3), [0.0, 0.0, 1.0], 10.0)
    assert lo == pytest.approx(2 * math.pi / 10, rel=1e-9) and hi == pytest.approx(2 * math.pi / 10, rel=1e-9)
    lo, hi = B.cap_surface_measure(B.ball(1.0, 2), [1.0, 0.0], 100.0)
    exact = 2 * math.acos(1 - 1 / 100)
    assert hi == pytest.approx(exact, rel=1e-9)
    assert exact == pytest.approx(2 * math.sqrt(2 / 100), rel=2e-3)


def test_superellipsoid_cap_against_arc_length():
    rho = 100.0
    body = B.superellipsoid(4, (1.0, 1.0))
    _, cap = B.cap_surface_measure(body, [1.0, 0.0], rho)
    y0 = (1 - (1 - 1 / rho) ** 4) ** 0.25
    from scipy.integrate import quad

    def speed(y):
        x = (1 - y ** 4) ** 0.25
        return math.sqrt(1 + (y ** 3 / x ** 3) ** 2)

    arc = 2 * quad(speed, 0.0, y0, epsabs=1e-13, epsrel=1e-12)[0]
    assert cap == pytest.approx(arc, rel=1e-6)
    slice_len = float(B.section_function(body, [1.0, 0.0], 1 - 1 / rho))
    assert slice_len == pytest.approx(2 * y0, rel=1e-9)
    assert 0.25 <= cap / slice_len <= 4


def test_cap_domain_and_smoothness_errors():
    with pytest.raises(DomainError):
        B.cap_surface_measure(B.ball(1.0, 2), [1.0, 0.0], 0.5)
    with pytest.raises(UnsupportedBodyError):
        B.cap_surface_measure(B.cube(1.0, 2), [1.0, 0.0], 10.0)


def test_membership():
    assert B.membership(B.ball(1.0, 3), [0.0, 0.0, 0.0])
    assert B.membership(B.ball(1.0, 3), [1.0, 0.0, 0.0])
    assert not B.membership(B.cube(1.0, 3), [0.51, 0.0, 0.0])


def test_inner_outer_radii():
    e = B.ellipsoid((2.0, 1.0))
    assert B.inner_radius(e) == pytest.approx(1.0) and B.outer_radius(e) == pytest.approx(2.0)
    c = B.cube(1.0, 3)
    assert B.inner_radius(c) == pytest.approx(0.5) and B.outer_radius(c) == pytest.approx(math.sqrt(3) / 2)


@settings(max_examples=40, deadline=None)
@given(st.floats(0.2, 3.0), st.floats(0.2, 3.0), st.floats(0, 2 * math.pi), st.floats(-0.95, 0.95))
def test_brunn_concavity_of_random_ellipses(a, b, phi, frac):
    body = B.ellipsoid((a, b))
    th = np.array([math.cos(phi), math.sin(phi)])
    sup = B.support_interval(body, th)
    t = frac * min(sup.a, sup.b)
    h = 1e-3 * min(sup.a, sup.b)
    f = B.section_function(body, th, np.array([t - h, t, t + h]))
    assert f[0] - 2 * f[1] + f[2] <= 1e-9 * f.max()


@settings(max_examples=30, deadline=None)
@given(st.floats(0.2, 2.0), st.integers(2, 3), st.floats(0.3, 3.0))
def test_volume_scales_like_power_of_dilation(r, d, k):
    body = B.ball(r, d)
    assert B.volume(B.scaled(body, k)) == pytest.approx(k ** d * B.volume(body), rel=1e-12)
