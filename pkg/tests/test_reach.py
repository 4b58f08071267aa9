import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

import oracles
from conftest import ROTATION
from eigensets import (
    ControlSet,
    InvalidInputError,
    PointCloud,
    ResourceError,
    convexity_defect,
    eigenset_verify,
    example20_system,
    hausdorff,
    ivy,
    omega_limit,
    reach_set,
    shift,
    step_map,
    symmetric_body_system,
    vertex_kernel_check,
)
from eigensets import reach
from eigensets.construct import kernel_lines, square_body
from eigensets.reach import hull_cloud, is_connected, prune, reach_sets, sample_convex_hull

EPS = 0.02


def circle_cloud(eps=EPS, n=400, radius=1.0):
    return PointCloud.from_points(oracles.circle_points(n, radius), eps)


def square_cloud(eps=EPS):
    return hull_cloud(square_body().vertices, eps)


def distance_to_cloud(q, cloud):
    return float(np.min(np.linalg.norm(cloud.points - np.asarray(q), axis=1)))


def line_distance(points, direction):
    u = np.asarray(direction, float) / np.linalg.norm(direction)
    return np.abs(points[:, 0] * u[1] - points[:, 1] * u[0])


# PointCloud and pruning


def test_cloud_validation():
    with pytest.raises(InvalidInputError):
        PointCloud([[0.0, np.nan]], 0.1)
    with pytest.raises(InvalidInputError):
        PointCloud([[0.0, 1.0]], 0.0)
    cloud = PointCloud([[0.0, 1.0]], 0.1, "seed")
    assert cloud.d == 2 and len(cloud) == 1 and cloud.metadata == "seed"
    with pytest.raises(ValueError):
        cloud.points[0, 0] = 3.0


@given(arrays(np.float64, (60, 2), elements=st.floats(-1, 1)), st.sampled_from([0.05, 0.1, 0.3]))
@settings(max_examples=60, deadline=None)
def test_prune_keeps_members_and_covers_cells(pts, eps):
    kept = prune(pts, eps)
    # every kept point is an input point
    assert all(np.any(np.all(pts == k, axis=1)) for k in kept)
    # every occupied cell keeps a point: coverage within one cell diagonal
    assert oracles.brute_hausdorff(pts, kept) <= eps * math.sqrt(2) + 1e-12
    # deterministic and idempotent
    np.testing.assert_array_equal(prune(pts, eps), kept)
    assert len(prune(kept, eps)) == len(kept)


def test_prune_bounds_points_per_cell():
    rng = np.random.default_rng(0)
    pts = rng.uniform(-1, 1, (20000, 2))
    kept = prune(pts, 0.1)
    cells = np.unique(np.floor(kept / 0.1), axis=0)
    assert len(kept) <= len(cells) * len(reach.prune_directions(2))
    assert len(kept) < len(pts) / 10


# step_map and reach_set


def test_step_map_origin_is_fixed():
    out = step_map(PointCloud([[0.0, 0.0]], EPS), example20_system(0.5), 0.1)
    np.testing.assert_array_equal(out.points, [[0.0, 0.0]])


def test_step_map_zero_system_is_identity():
    cloud = circle_cloud()
    out = step_map(cloud, ControlSet([np.zeros((2, 2))]), 0.1)
    assert hausdorff(out, cloud) == 0.0


def test_step_map_quarter_rotation():
    out = step_map(PointCloud([[1.0, 0.0]], EPS), ControlSet([ROTATION]), math.pi / 2)
    assert hausdorff(out.points, [[0.0, 1.0]]) <= EPS


def test_step_map_size_guard(monkeypatch):
    monkeypatch.setattr(reach, "MAX_CLOUD", 100)
    with pytest.raises(ResourceError):
        step_map(circle_cloud(), example20_system(0.5), 0.1)


def test_step_map_dimension_mismatch():
    with pytest.raises(InvalidInputError):
        step_map(PointCloud([[1.0, 0.0, 0.0]], EPS), example20_system(0.5), 0.1)


def test_reach_set_time_zero():
    cloud = circle_cloud()
    out = reach_set(cloud, example20_system(0.5), 0.0)
    np.testing.assert_array_equal(out.points, cloud.points)


@pytest.mark.parametrize("t", [0.37, 1.0, 3.0])
def test_reach_set_rotation_keeps_circle(t):
    cloud = circle_cloud()
    out = reach_set(cloud, ControlSet([ROTATION]), t, h=0.01)
    assert hausdorff(out.points, oracles.circle_points(2000)) <= EPS + 0.01


def test_reach_set_adjusts_step():
    out = reach_set(circle_cloud(), ControlSet([ROTATION]), 0.125, h=0.05)
    assert "steps=3" in out.metadata and "adjusted" in out.metadata


def test_square_is_invariant_under_its_system():
    cloud = square_cloud()
    sys = symmetric_body_system(square_body(), 32)
    for t, out in zip((0.5, 1.0, 2.0), reach_sets(cloud, sys, (0.5, 1.0, 2.0), h=0.01)):
        assert hausdorff(out, cloud) <= 0.05, t


def test_reach_set_semigroup():
    sys = example20_system(0.5)
    cloud = PointCloud.from_points(oracles.circle_points(200, 0.7) + [0.1, 0.2], EPS)
    whole = reach_set(cloud, sys, 1.0)
    parts = reach_set(reach_set(cloud, sys, 0.4), sys, 0.6)
    assert hausdorff(whole, parts) <= 2 * (EPS + EPS * math.sqrt(2))


@pytest.mark.parametrize("lam", [0.5, 2.0])
def test_reach_set_homogeneity(lam):
    sys = example20_system(0.5)
    cloud = PointCloud.from_points(oracles.circle_points(300, 0.8) + [0.0, 0.2], EPS)
    scaled = reach_set(PointCloud.from_points(cloud.points * lam, EPS), sys, 1.0)
    base = reach_set(cloud, sys, 1.0)
    assert hausdorff(scaled.points, lam * base.points) <= EPS * (1 + lam)


@pytest.mark.parametrize("beta", [-0.3, 0.4])
def test_reach_set_shift_equivariance(beta):
    sys = symmetric_body_system(square_body(), 16)
    cloud = PointCloud.from_points(oracles.circle_points(300, 0.8), EPS)
    shifted = reach_set(cloud, shift(sys, beta), 1.0)
    base = reach_set(cloud, sys, 1.0)
    assert hausdorff(shifted.points, base.points * math.exp(-beta)) <= 2 * EPS


# Hausdorff distance


def test_hausdorff_examples():
    cloud = circle_cloud()
    assert hausdorff(cloud, cloud) == 0.0
    assert hausdorff([[0.0, 0.0]], [[3.0, 4.0]]) == pytest.approx(5.0)
    g = np.arange(11) * 0.1
    grid = np.array([(x, y) for x in g for y in g])
    assert hausdorff(grid, grid + [0.1, 0.0]) == pytest.approx(0.1)
    assert oracles.brute_hausdorff(grid, grid + [0.1, 0.0]) == pytest.approx(0.1)


def test_hausdorff_rejects_empty():
    with pytest.raises(InvalidInputError):
        hausdorff(np.zeros((0, 2)), [[1.0, 1.0]])


@given(arrays(np.float64, (15, 3), elements=st.floats(-5, 5)),
       arrays(np.float64, (9, 3), elements=st.floats(-5, 5)))
@settings(max_examples=80, deadline=None)
def test_hausdorff_matches_brute_force_and_is_symmetric(a, b):
    assert hausdorff(a, b) == pytest.approx(oracles.brute_hausdorff(a, b), abs=1e-12)
    assert hausdorff(a, b) == hausdorff(b, a)


# omega limits and ivies


def test_omega_limit_zero_system():
    out = omega_limit(PointCloud([[0.3, -0.2]], EPS), ControlSet([np.zeros((2, 2))]))
    np.testing.assert_array_equal(out.points, [[0.3, -0.2]])


def test_omega_limit_rotation_orbit():
    out, info = omega_limit(PointCloud([[1.0, 0.0]], EPS), ControlSet([ROTATION]), h=0.05,
                            return_info=True)
    assert info["converged"]
    assert hausdorff(out.points, oracles.circle_points(4000)) <= EPS + 0.05


def test_omega_limit_flags_non_convergence():
    out, info = omega_limit(PointCloud([[1.0, 0.0]], EPS), example20_system(0.5), h=0.01,
                            max_steps=100, return_info=True)
    assert not info["converged"] and info["steps"] == 100
    assert "converged=False" in out.metadata


def test_omega_limit_ex62(ex62_eigensets, ex62):
    for name in ("r1", "r2"):
        cloud, info = ex62_eigensets[name]
        assert info["converged"]
        assert distance_to_cloud([0.0, 0.0], cloud) <= 0.03
        for direction in kernel_lines(0.5):
            near = cloud.points[line_distance(cloud.points, direction) <= 0.03]
            # a genuine segment: the near points extend well away from the origin
            assert np.linalg.norm(near, axis=1).max() >= 0.5


def test_omega_limit_is_a_numerical_fixed_point(ex62_eigensets, ex62):
    cloud, info = ex62_eigensets["r1"]
    assert hausdorff(step_map(cloud, ex62, 0.01), cloud) <= max(info["residual"], cloud.epsilon) + 0.01


def test_ivy_of_a_kernel_point():
    q1 = [0.5, 1.0]
    cloud = ivy(PointCloud([q1], EPS), example20_system(0.5), h=0.01, t_max=20.0)
    # A2 slides q1 vertically onto the other kernel line, A1 then slides horizontally
    for s in np.linspace(0, 1, 21):
        vertical = [0.5, 1.0 - 2.0 * s]
        horizontal = [0.5 - s, -1.0]
        assert distance_to_cloud(vertical, cloud) <= 0.03
        assert distance_to_cloud(horizontal, cloud) <= 0.03


def test_ivy_trivial_stems():
    circ = circle_cloud()
    out = ivy(circ, ControlSet([ROTATION]), h=0.05, t_max=1.0)
    assert hausdorff(out.points, oracles.circle_points(4000)) <= EPS + 0.05
    single = ivy(PointCloud([[1.0, 2.0]], EPS), ControlSet([np.zeros((2, 2))]), t_max=1.0)
    np.testing.assert_array_equal(single.points, [[1.0, 2.0]])


# verification battery


def test_verify_unit_circle():
    rep = eigenset_verify(circle_cloud(), ControlSet([ROTATION]), alpha=0.0)
    assert rep.verdict and rep.isotropic
    assert max(rep.hausdorff_errors) <= EPS + 0.01
    d = rep.to_dict()
    assert d["verdict"] == "pass" and list(d)[0] == "verdict"


def test_verify_square():
    rep = eigenset_verify(square_cloud(), symmetric_body_system(square_body(), 32),
                          alpha=0.0, times=(0.5, 1.0, 2.0), h=0.01, tol=0.05,
                          vertices=square_body().vertices)
    assert rep.verdict, rep.failures
    assert rep.vertex_kernel == [True] * 4
    assert rep.contains_origin and rep.connected


def test_verify_growth_rate_alpha():
    # the disc under sI + skew grows like e^{st}
    sys = ControlSet([[[0.2, -1.0], [1.0, 0.2]]])
    cloud = hull_cloud(oracles.circle_points(64), 0.05)
    assert eigenset_verify(cloud, sys, alpha=0.2, tol=0.1).verdict
    assert not eigenset_verify(cloud, sys, alpha=0.0, tol=0.1).verdict


def test_verify_rejects_origin_alone():
    rep = eigenset_verify(PointCloud([[0.0, 0.0]], EPS), example20_system(0.5))
    assert not rep.verdict
    assert any("origin alone" in f for f in rep.failures)


def test_verify_non_isotropic_needs_origin():
    # an invariant annulus of the square system misses the origin
    sys = symmetric_body_system(square_body(), 32)
    ring = PointCloud.from_points(square_body().vertices, EPS)
    rep = eigenset_verify(ring, sys)
    assert not rep.verdict and not rep.contains_origin


def test_vertex_kernel_examples():
    verts = square_body().vertices
    assert vertex_kernel_check(verts, symmetric_body_system(square_body(), 32)) == [True] * 4
    assert vertex_kernel_check([[1.0, 0.0]], ControlSet([np.eye(2)])) == [False]
    with pytest.raises(InvalidInputError):
        vertex_kernel_check([[0.0, 0.0]], ControlSet([np.eye(2)]))


def test_convexity_defect_examples():
    g = np.arange(-50, 51) * EPS
    grid = PointCloud(np.array([(x, y) for x in g for y in g]), EPS)
    assert convexity_defect(grid) <= EPS
    # a pruned cloud keeps one point per cell, so its covering radius is a cell diagonal
    assert convexity_defect(square_cloud()) <= EPS * math.sqrt(2)
    eps = 0.01
    defect = convexity_defect(PointCloud([[-1.0, 0.0], [1.0, 0.0]], eps))
    assert 1 - 2 * eps <= defect <= 1.0


def test_sample_convex_hull_degenerate_inputs():
    seg = sample_convex_hull([[0.0, 0.0, 0.0], [1.0, 1.0, 1.0]], 0.1)
    assert np.allclose(seg[:, 0], seg[:, 1]) and len(seg) >= 18
    assert len(sample_convex_hull([[2.0, 3.0]], 0.1)) == 1
    tri = sample_convex_hull([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]], 0.05)
    assert all(oracles.distance_to_triangle(p, [[0, 0], [1, 0], [0, 1]]) <= 1e-9 for p in tri)


def test_is_connected():
    assert is_connected(square_cloud())
    two = PointCloud([[0.0, 0.0], [1.0, 0.0]], EPS)
    assert not is_connected(two)


def test_barabanov_ball_trap(pump_normed, pump_norm):
    sys_n, _ = pump_normed
    cloud = hull_cloud(pump_norm.ball_points(), 0.02)
    top = float(np.max(pump_norm(cloud.points)))
    out = step_map(cloud, sys_n, 0.01)
    assert float(np.max(pump_norm(out.points))) <= top * (1 + pump_norm.error_bound) + 1e-12
