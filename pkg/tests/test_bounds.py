import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from disclab import bodies as B
from disclab import bounds as V
from disclab.errors import ConfigurationError, DomainError, UnsupportedBodyError


def small_scan(body, **kw):
    kw.setdefault("theta_count", 16)
    kw.setdefault("rho_min", 8.0)
    kw.setdefault("rho_max", 128.0)
    kw.setdefault("rho_steps", 7)
    return V.RatioScan.build(body, **kw)


def test_scan_validation():
    with pytest.raises(ConfigurationError):
        V.RatioScan.build(B.ball(1.0, 2), 8, 10.0, 5.0, 5)
    with pytest.raises(ConfigurationError):
        V.RatioScan.build(B.ball(1.0, 2), 8, 1.0, 5.0, 5, alpha=2.0)
    scan = V.RatioScan.build(B.ball(1.0, 2), 8, 1.0, 5.0, 5, alpha=0.5, beta=2.0)
    assert scan.gamma == pytest.approx(0.25)


def test_non_smooth_bodies_are_refused():
    scan = small_scan(B.double_cone())
    for check in (V.check_bnw_upper, V.check_lower_average, V.check_corollary_rho_d, V.check_spherical_average):
        with pytest.raises(UnsupportedBodyError, match="non-smooth"):
            check(scan)


def test_bnw_ratio_is_direction_independent_for_the_ball():
    rep = V.check_bnw_upper(small_scan(B.ball(1.0, 3), rho_min=4.0, rho_max=512.0, rho_steps=9))
    assert rep.passed
    R = np.array([r["ratio"] for r in rep.rows]).reshape(16, 9)
    assert np.allclose(R, R[0][None, :], rtol=1e-8)


def test_bnw_ratio_for_the_disk_against_closed_form():
    rhos = np.geomspace(4.0, 512.0, 9)
    rep = V.check_bnw_upper(V.RatioScan(B.ball(1.0, 2), ((1.0, 0.0),), tuple(rhos)))
    from scipy.special import jv
    chi = np.abs(jv(1, 2 * math.pi * rhos) / rhos)
    t = 1 - 1 / rhos
    area = 2 * np.sqrt(1 - t * t)
    assert np.allclose([r["ratio"] for r in rep.rows], chi * rhos / (2 * area), rtol=1e-9)


def test_bnw_superellipsoid_flat_direction():
    body = B.superellipsoid(4, (1.0, 1.0))
    scan = V.RatioScan(body, ((1.0, 0.0), (0.0, 1.0), (math.sqrt(0.5), math.sqrt(0.5))),
                       tuple(np.geomspace(4, 256, 7)))
    rep = V.check_bnw_upper(scan)
    assert rep.passed and math.isfinite(rep.sup)


def test_double_cone_ratio_values():
    R = V.double_cone_ratio([2.0, 10.0])
    assert R[0] == pytest.approx(2 / math.pi ** 2, rel=1e-12)
    assert R[1] == pytest.approx(10 / math.pi ** 2, rel=1e-10)
    rep = V.check_double_cone_failure(np.geomspace(2, 1024, 30))
    assert rep.slope == pytest.approx(1.0, abs=0.05) and rep.passed


def test_lower_average_is_theta_independent_for_the_ball():
    rep = V.check_lower_average(small_scan(B.ball(1.0, 2)))
    assert rep.passed and rep.inf > 0
    L = np.array([r["ratio"] for r in rep.rows]).reshape(16, 7)
    assert np.allclose(L, L[0][None, :], rtol=1e-6)


def test_lower_average_flat_direction():
    body = B.superellipsoid(4, (1.0, 1.0))
    rep = V.check_lower_average(V.RatioScan(body, ((1.0, 0.0),), tuple(np.geomspace(8, 128, 5))))
    assert rep.passed and rep.inf > 0


def test_single_scale_and_width_precondition():
    rep = V.check_single_scale_lower(B.ellipsoid((2.0, 1.0)),
                                     small_scan(B.ellipsoid((2.0, 1.0)), theta_count=8))
    assert rep.inf > 0 and rep.details["min_width"] > 0
    assert rep.details["sup_over_inf"] == pytest.approx(rep.sup / rep.inf)


def test_corollary_and_spherical_average_for_balls():
    for d in (2, 3):
        scan = small_scan(B.ball(1.0, d), theta_count=8)
        assert V.check_corollary_rho_d(scan).passed
        rep = V.check_spherical_average(scan)
        assert rep.passed and rep.inf > 0 and math.isfinite(rep.sup)


def test_brunn_examples():
    rep = V.check_brunn(B.ball(1.0, 3), [0.0, 0.0, 1.0], 1000)
    assert rep.passed
    f = np.array([r["f"] for r in rep.rows])
    t = np.array([r["t"] for r in rep.rows])
    assert np.allclose(f, np.sqrt(math.pi) * np.sqrt(np.clip(1 - t * t, 0, None)), atol=1e-12)
    rep = V.check_brunn(B.double_cone(), [1.0, 0.0, 0.0], 1000)
    f = np.array([r["f"] for r in rep.rows])
    t = np.array([r["t"] for r in rep.rows])
    assert rep.passed and np.allclose(f, np.sqrt(math.pi) * (1 - np.abs(t)), atol=1e-12)
    for th in V.random_directions(3, 10, seed=4):
        assert V.check_brunn(B.superellipsoid(4, (1.0, 1.0, 1.0)), th, 1000).passed


def test_concave_lemma_examples():
    tent = V.ConcaveFunction(lambda t: np.minimum(np.asarray(t) + 1, 1 - np.asarray(t)), 1.0, 1.0)
    assert V.check_concave_lemma(tent, [(0.0, 0.5)]).passed
    # linear on [0, b] with f(b) = 0: the right-chord bound is an equality
    b = 2.0
    lin = V.ConcaveFunction(lambda t: np.where(np.asarray(t) >= 0, b - np.asarray(t), b + np.asarray(t) * b), 1.0, b)
    rep = V.check_concave_lemma(lin, [(0.3, 1.1), (0.0, 1.9)])
    right = [r for r in rep.rows if r["family"] == "right_chord"][0]
    assert abs(right["max_violation"]) <= 1e-14 and rep.passed
    ball = B.section_profile(B.ball(1.0, 2), [1.0, 0.0])
    rhos = np.geomspace(2, 1000, 40)
    pairs = np.stack([np.zeros_like(rhos), 1 - 1 / rhos], axis=1)
    assert V.check_concave_lemma(ball, pairs).passed


def test_concave_lemma_detects_convex_function():
    bad = V.ConcaveFunction(lambda t: np.asarray(t) ** 2 * (1 - np.asarray(t) ** 2) + 0.0, 1.0, 1.0)
    assert not V.check_concave_lemma(bad, V.grid_pairs(1.0, 1.0, 41)).passed


def test_uniform_ball_ball_values():
    rhos = np.geomspace(2.0, 200.0, 6)
    rep = V.check_uniform_ball(B.ball(1.0, 3), V.RatioScan(B.ball(1.0, 3), ((0.0, 0.0, 1.0),), tuple(rhos)))
    W = np.array([r["ratio"] for r in rep.rows])
    assert np.allclose(W, math.pi * (2 - 1 / rhos), rtol=1e-10)
    assert rep.passed
    with pytest.raises(DomainError):
        V.check_uniform_ball(B.ball(1.0, 3), V.RatioScan(B.ball(1.0, 3), ((0.0, 0.0, 1.0),), (1.0, 4.0)))


def test_uniform_ball_ellipse():
    e = B.ellipsoid((2.0, 1.0))
    thr = 2.0 / B.min_curvature_radius(e)
    rep = V.check_uniform_ball(e, small_scan(e, theta_count=8, rho_min=thr, rho_max=64 * thr))
    assert rep.inf > 0 and rep.passed


def test_suite_runs_requested_checks():
    scan = small_scan(B.ball(1.0, 2), theta_count=4)
    reports = V.run_suite(scan, ("bnw-upper", "brunn"), brunn_directions=3, grid_size=100)
    assert [r.name for r in reports] == ["bnw-upper", "brunn", "brunn", "brunn"]
    with pytest.raises(ConfigurationError):
        V.run_suite(scan, ("nope",))


@settings(max_examples=20, deadline=None)
@given(st.floats(0.1, 5.0), st.floats(0.1, 5.0), st.integers(0, 10 ** 6))
def test_concave_lemma_holds_for_random_concave_polygons(a, b, seed):
    rng = np.random.default_rng(seed)
    knots = np.sort(rng.uniform(-a, b, size=4))
    heights = np.sort(rng.uniform(0.1, 2.0, size=4))[::-1]
    # minimum of affine functions vanishing at one end each is concave
    slopes_r = heights / (b - knots)
    slopes_l = heights / (knots + a)

    def f(t):
        t = np.asarray(t, dtype=float)
        right = np.min(slopes_r[:, None] * (b - t[None, :]), axis=0)
        left = np.min(slopes_l[:, None] * (t[None, :] + a), axis=0)
        return np.minimum(left, right)

    assert V.check_concave_lemma(V.ConcaveFunction(f, a, b), V.grid_pairs(a, b, 60)).passed
