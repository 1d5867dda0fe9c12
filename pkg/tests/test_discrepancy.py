import math
from itertools import product

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.special import jv

from disclab import bodies as B
from disclab import discrepancy as D
from disclab.errors import ConfigurationError, DomainError
from disclab.quadrature import composite_gauss

DISK = B.ball(0.2, 2)


def test_grid_and_hammersley_examples():
    g = D.generate_points("grid", 4, 2)
    assert sorted(map(tuple, g.points)) == [(0.25, 0.25), (0.25, 0.75), (0.75, 0.25), (0.75, 0.75)]
    with pytest.raises(ConfigurationError):
        D.generate_points("grid", 10, 2)
    h = D.generate_points("hammersley", 8, 2)
    reversed_bits = [int(f"{k:03b}"[::-1], 2) for k in range(8)]
    assert np.array_equal(h.points[:, 0], np.arange(8) / 8)
    assert np.array_equal(h.points[:, 1], np.array(reversed_bits) / 8)
    with pytest.raises(ConfigurationError):
        D.generate_points("hammersley", 8, 3)


def test_random_points_are_reproducible():
    a = D.generate_points("uniform-random", 100, 2, seed=7)
    b = D.generate_points("uniform-random", 100, 2, seed=7)
    c = D.generate_points("uniform-random", 100, 2, seed=8)
    assert np.array_equal(a.points, b.points) and not np.array_equal(a.points, c.points)
    k = D.generate_points("kronecker", 500, 3)
    assert np.all((k.points >= 0) & (k.points < 1))


def test_csv_roundtrip_is_exact():
    p = D.generate_points("uniform-random", 50, 3, seed=2)
    q = D.PointSet.from_csv(p.to_csv())
    assert np.array_equal(p.points, q.points)
    with pytest.raises(ConfigurationError):
        D.PointSet(2, [[0.5, 1.0]])


def test_exp_sum_examples():
    origin = D.PointSet(2, np.zeros((5, 2)))
    assert D.exp_sum(origin, [3, -7]) == pytest.approx(5)
    two = D.PointSet(2, [[0.0, 0.0], [0.5, 0.5]])
    assert abs(D.exp_sum(two, [1, 0])) < 1e-15
    grid = D.generate_points("grid", 16, 2)
    for n in product(range(-8, 9), repeat=2):
        s = D.exp_sum(grid, n)
        if n[0] % 4 == 0 and n[1] % 4 == 0:
            assert abs(s) == pytest.approx(16)
        else:
            assert abs(s) < 1e-12


def test_lattice_slices_match_direct_sums():
    pts = D.generate_points("uniform-random", 20, 3, seed=1)
    M = 3
    for n3, S in D.lattice_slices(pts, M):
        ns = np.array([(a, b, n3) for a in range(-M, M + 1) for b in range(-M, M + 1)])
        assert np.allclose(S.ravel(), D.exp_sums(pts, ns), atol=1e-12)


def test_cassels_montgomery_origin_example():
    # 12 vectors lie on |n| = 10, so the open disk holds 304 and the closed one 316
    open_count = sum(1 for a in range(-10, 11) for b in range(-10, 11) if 0 < a * a + b * b < 100)
    closed_count = sum(1 for a in range(-10, 11) for b in range(-10, 11) if 0 < a * a + b * b <= 100)
    assert (open_count, closed_count) == (304, 316)
    N = 6
    origin = D.PointSet(2, np.zeros((N, 2)))
    total, rep = D.cassels_montgomery(origin, D.LatticeShell(0, 10))
    assert total == pytest.approx(N * N * 304) and rep.rows[0]["shell_size"] == 304
    total, rep = D.cassels_montgomery(origin, D.LatticeShell(0, 10 + 1e-9))
    assert total == pytest.approx(N * N * 316) and rep.rows[0]["shell_size"] == 316


def test_cassels_montgomery_grid_alignment():
    m = 8
    grid = D.generate_points("grid", m * m, 2)
    M = m + 0.5
    total, _ = D.cassels_montgomery(grid, D.LatticeShell(4, M))
    multiples = sum(1 for a in range(-2 * m, 2 * m + 1, m) for b in range(-2 * m, 2 * m + 1, m)
                    if 16 < a * a + b * b < M * M)
    assert multiples == 4 and total >= m ** 4 * multiples * (1 - 1e-12)


def test_cassels_montgomery_random_ratio():
    N, M, H = 256, 64, 4
    ratios, means = [], []
    for seed in range(20):
        total, rep = D.cassels_montgomery(D.generate_points("uniform-random", N, 2, seed), D.LatticeShell(H, M))
        ratios.append(rep.rows[0]["ratio"])
        means.append(rep.details["mean_abs_S2"])
        assert rep.passed
    assert np.mean(means) == pytest.approx(N, rel=0.02)
    # the expected ratio is the area of the annulus over M^2
    assert np.mean(ratios) == pytest.approx(math.pi * (1 - (H / M) ** 2), rel=0.03)


def test_empty_shell():
    with pytest.raises(DomainError):
        D.cassels_montgomery(D.generate_points("grid", 4, 2), D.LatticeShell(0.2, 0.6))


def test_mean_square_exp_sum_over_seeds():
    N = 32
    n = np.array([3, -2])
    vals = [abs(D.exp_sum(D.generate_points("uniform-random", N, 2, seed), n)) ** 2 for seed in range(4000)]
    assert np.mean(vals) == pytest.approx(N, rel=0.05)


def _disk_weight_oracle(panels):
    r, w = composite_gauss(0.0, 1.0, panels, 20)
    chi = jv(1, 2 * math.pi * r) / r
    return float(np.sum(w * r ** 4 * chi ** 2))


def test_radial_weight_unit_disk():
    coarse, fine = _disk_weight_oracle(8), _disk_weight_oracle(32)
    assert coarse == pytest.approx(fine, rel=1e-6)
    assert D.radial_weight(B.ball(1.0, 2), [1, 0]) == pytest.approx(fine, rel=1e-6)
    with pytest.raises(DomainError):
        D.radial_weight(B.ball(1.0, 2), [0, 0])


def test_ball_weight_depends_on_norm_only():
    b = B.ball(0.25, 2)
    assert D.radial_weight(b, [3, 4]) == pytest.approx(D.radial_weight(b, [5, 0]), rel=1e-13)
    assert D.radial_weight(b, [0, -5]) == pytest.approx(D.radial_weight(b, [-4, 3]), rel=1e-13)


@pytest.mark.parametrize("body", [B.cube(0.5, 2), B.cube(0.3, 3), B.ellipsoid((0.25, 0.1)),
                                  B.ellipsoid((0.2, 0.1, 0.15))])
def test_weights_against_direct_quadrature(body):
    from disclab import fourier as F
    for n in ([1] + [0] * (body.dimension - 1), [3, -2] + [1] * (body.dimension - 2), [7] * body.dimension):
        n = np.array(n, dtype=float)
        r, w = composite_gauss(0.0, 1.0, 64, 20)
        chi = F.closed_form_xi(body, r[:, None] * n[None, :])
        ref = float(np.sum(w * r ** (2 * body.dimension) * np.abs(chi) ** 2))
        assert D.radial_weight(body, n) == pytest.approx(ref, rel=1e-6)


def test_superellipsoid_weight_lower_bound():
    body = D.fit_to_torus(B.superellipsoid(4, (1.0, 1.0)))
    scaled = []
    for k in (8, 16, 32, 64, 128):
        for direction in ((1, 0), (1, 1), (2, 1)):
            n = np.array(direction) * k / np.linalg.norm(direction)
            n = np.round(n)
            scaled.append(D.radial_weight(body, n) * np.linalg.norm(n) ** 3)
    scaled = np.array(scaled)
    assert scaled.min() > 0 and scaled.max() / scaled.min() < 50


def test_fit_to_torus():
    body = D.fit_to_torus(B.ellipsoid((2.0, 1.0)))
    assert B.outer_radius(body) == pytest.approx(0.25)
    with pytest.raises(ConfigurationError):
        D.l2_discrepancy_parseval(D.generate_points("grid", 4, 2), B.ball(0.6, 2))
    with pytest.raises(ConfigurationError):
        D.l2_discrepancy_mc(D.generate_points("grid", 4, 2), DISK, samples=50)


def test_covariogram_kernel_at_zero():
    for body in (DISK, B.cube(0.3, 3), B.ellipsoid((0.2, 0.1, 0.15))):
        k0 = D.covariogram_kernel(body, np.zeros((1, body.dimension)))[0]
        assert k0 == pytest.approx(B.volume(body) / (body.dimension + 1), rel=1e-9)


def test_single_point_routes():
    for body in (DISK, B.cube(0.4, 2), B.ball(0.2, 3)):
        one = D.PointSet(body.dimension, np.full((1, body.dimension), 0.3))
        exact = D.single_point_discrepancy(body)
        assert D.l2_discrepancy_pairs(one, body).value == pytest.approx(exact, rel=1e-9)
        pa = D.l2_discrepancy_parseval(one, body)
        assert abs(pa.value - exact) <= pa.error


def test_single_point_disk_parseval_vs_monte_carlo():
    one = D.PointSet(2, [[0.4, 0.7]])
    pa = D.l2_discrepancy_parseval(one, DISK)
    mc = D.l2_discrepancy_mc(one, DISK, samples=1_000_000, seed=3)
    assert abs(pa.value - mc.value) <= 3 * (pa.error + mc.error)


def test_antipodal_points_disk():
    pts = D.PointSet(2, [[0.25, 0.25], [0.75, 0.75]])
    pa = D.l2_discrepancy_parseval(pts, DISK)
    mc = D.l2_discrepancy_mc(pts, DISK, samples=400_000, seed=1)
    ex = D.l2_discrepancy_pairs(pts, DISK)
    assert abs(pa.value - mc.value) <= 3 * (pa.error + mc.error)
    assert abs(pa.value - ex.value) <= pa.error


def test_coincident_and_duplicated_points():
    one = D.PointSet(2, [[0.1, 0.2]])
    many = D.PointSet(2, np.tile([[0.1, 0.2]], (5, 1)))
    base = D.l2_discrepancy_parseval(one, DISK, M_trunc=8).value
    assert D.l2_discrepancy_parseval(many, DISK, M_trunc=8).value == pytest.approx(25 * base, rel=1e-12)
    pts = D.generate_points("uniform-random", 12, 2, seed=4)
    doubled = D.PointSet(2, np.concatenate([pts.points, pts.points]))
    a = D.l2_discrepancy_parseval(pts, DISK, M_trunc=16).value
    b = D.l2_discrepancy_parseval(doubled, DISK, M_trunc=16).value
    assert b == pytest.approx(4 * a, rel=1e-12)


def test_translation_invariance():
    pts = D.generate_points("kronecker", 30, 2)
    moved = pts.translated([0.37, 0.81])
    a = D.l2_discrepancy_parseval(pts, DISK, M_trunc=16)
    b = D.l2_discrepancy_parseval(moved, DISK, M_trunc=16)
    assert b.value == pytest.approx(a.value, rel=1e-10)
    assert D.l2_discrepancy_pairs(moved, DISK).value == pytest.approx(D.l2_discrepancy_pairs(pts, DISK).value,
                                                                      rel=1e-10)
    ma = D.l2_discrepancy_mc(pts, DISK, 200_000, seed=2)
    mb = D.l2_discrepancy_mc(moved, DISK, 200_000, seed=9)
    assert abs(ma.value - mb.value) <= 3 * math.hypot(ma.error, mb.error)


def test_monte_carlo_edge_cases_and_wrap():
    assert D.l2_discrepancy_mc(D.PointSet(2, np.zeros((0, 2))), DISK).value == 0.0
    z = np.array([[0.01, 0.99]])
    x = np.array([[0.01, 0.99], [0.99, 0.01], [0.5, 0.5]])
    r = np.array([1e-6, 0.5, 0.5])
    # z coincides with x; wraps across both edges; lies far away
    assert np.array_equal(D.torus_count(z, DISK, x, r), [1, 1, 0])
    big = B.ball(0.45, 2)
    assert np.array_equal(D.torus_count(z, big, x, np.array([1e-6, 0.2, 0.1])), [1, 1, 0])


def test_monte_carlo_is_thread_count_independent():
    pts = D.generate_points("uniform-random", 16, 2, seed=1)
    a = D.l2_discrepancy_mc(pts, DISK, 50_000, seed=5, block=8192, threads=1)
    b = D.l2_discrepancy_mc(pts, DISK, 50_000, seed=5, block=8192, threads=3)
    assert a.value == b.value and a.error == b.error


def test_scaling_experiment_small():
    disk = D.fit_to_torus(B.ball(1.0, 2))
    res = D.scaling_experiment(disk, ["grid", "uniform-random"], [16, 64, 256, 1024], repeats=4)
    assert res["summary"]["grid"]["slope"] == pytest.approx(0.5, abs=0.1)
    assert res["summary"]["uniform-random"]["slope"] == pytest.approx(1.0, abs=0.15)
    assert res["passed"]
    with pytest.raises(ConfigurationError):
        D.scaling_experiment(disk, ["grid"], [64, 16])


@settings(max_examples=30, deadline=None)
@given(st.integers(1, 40), st.integers(0, 2 ** 32), st.lists(st.integers(-20, 20), min_size=2, max_size=2))
def test_exp_sum_bounds(N, seed, n):
    pts = D.generate_points("uniform-random", N, 2, seed)
    s = D.exp_sum(pts, n)
    assert abs(s) <= N * (1 + 1e-12)
    assert D.exp_sum(pts, [0, 0]) == pytest.approx(N)
    assert D.exp_sum(pts, [-n[0], -n[1]]) == pytest.approx(np.conj(s), abs=1e-10)


@settings(max_examples=15, deadline=None)
@given(st.integers(1, 20), st.integers(0, 1000), st.floats(0.05, 0.24))
def test_pair_sum_matches_parseval(N, seed, radius):
    pts = D.generate_points("uniform-random", N, 2, seed)
    body = B.ball(radius, 2)
    ex = D.l2_discrepancy_pairs(pts, body).value
    pa = D.l2_discrepancy_parseval(pts, body)
    assert ex >= 0 and abs(pa.value - ex) <= pa.error + 1e-9
