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
    Schedule,
    example20_system,
    fundamental_matrix,
    irreducibility_test,
    mat_exp,
    point_in_hull,
    shift,
    simulate,
)
from eigensets.core import hull_distance, invariant_closure

finite = st.floats(-2.0, 2.0, allow_nan=False, allow_infinity=False)


def matrices(d):
    return arrays(np.float64, (d, d), elements=finite)


@st.composite
def systems_and_schedules(draw, max_d=4, max_m=3, max_segments=4):
    d = draw(st.integers(1, max_d))
    m = draw(st.integers(1, max_m))
    gens = [draw(matrices(d)) for _ in range(m)]
    segs = []
    for _ in range(draw(st.integers(1, max_segments))):
        w = np.array(draw(st.lists(st.floats(0.01, 1.0), min_size=m, max_size=m)))
        segs.append((w / w.sum(), draw(st.floats(0.05, 1.0))))
    return ControlSet(gens), Schedule(segs)


# mat_exp


def test_mat_exp_zero_is_identity():
    np.testing.assert_array_equal(mat_exp(np.zeros((3, 3)), 7.0), np.eye(3))


def test_mat_exp_diagonal():
    np.testing.assert_allclose(mat_exp(np.diag([-1.0, 2.0]), 1.0),
                               np.diag([math.exp(-1), math.exp(2)]), rtol=1e-14)


def test_mat_exp_quarter_rotation():
    np.testing.assert_allclose(mat_exp(ROTATION, math.pi / 2), ROTATION, atol=1e-14)


def test_mat_exp_rejects_nonfinite():
    with pytest.raises(InvalidInputError):
        mat_exp([[np.nan, 0.0], [0.0, 1.0]], 1.0)


@given(st.integers(1, 4).flatmap(matrices), st.floats(0.0, 1.5), st.floats(0.0, 1.5))
@settings(max_examples=60, deadline=None)
def test_mat_exp_semigroup(a, s, t):
    lhs = mat_exp(a, s + t)
    rhs = mat_exp(a, s) @ mat_exp(a, t)
    assert np.linalg.norm(lhs - rhs) <= 1e-10 * max(1.0, np.linalg.norm(lhs))


def test_mat_exp_against_eigendecomposition(rng):
    for _ in range(20):
        d = int(rng.integers(1, 5))
        a = rng.standard_normal((d, d))
        np.testing.assert_allclose(mat_exp(a, 0.7), oracles.expm_eig(a, 0.7), rtol=1e-9, atol=1e-11)


# fundamental_matrix and simulate


def test_fundamental_matrix_empty_schedule():
    sys = example20_system(0.5)
    np.testing.assert_array_equal(fundamental_matrix(sys, Schedule()), np.eye(2))


def test_fundamental_matrix_stationary():
    sys = example20_system(0.5)
    pi = fundamental_matrix(sys, Schedule.stationary(1, 2.5, 2))
    np.testing.assert_allclose(pi, mat_exp(sys.generators[1], 2.5), rtol=1e-14)


def test_fundamental_matrix_composition_order():
    a = np.array([[0.0, 1.0], [0.0, 0.0]])
    b = np.array([[0.0, 0.0], [1.0, 0.0]])
    sys = ControlSet([a, b])
    pi = fundamental_matrix(sys, Schedule([([1, 0], 1.0), ([0, 1], 1.0)]))
    np.testing.assert_allclose(pi, mat_exp(b) @ mat_exp(a), rtol=1e-14)
    assert not np.allclose(pi, mat_exp(a) @ mat_exp(b))


@given(systems_and_schedules(), st.data())
@settings(max_examples=50, deadline=None)
def test_fundamental_matrix_semigroup(pair, data):
    sys, sched = pair
    extra = [(np.full(sys.m, 1.0 / sys.m), data.draw(st.floats(0.05, 1.0)))]
    later = Schedule(extra)
    whole = fundamental_matrix(sys, sched + later)
    parts = fundamental_matrix(sys, later) @ fundamental_matrix(sys, sched)
    assert np.linalg.norm(whole - parts) <= 1e-10 * max(1.0, np.linalg.norm(whole))


@given(systems_and_schedules(), st.floats(-2.0, 2.0))
@settings(max_examples=50, deadline=None)
def test_shift_covariance(pair, beta):
    sys, sched = pair
    lhs = fundamental_matrix(shift(sys, beta), sched)
    rhs = math.exp(-beta * sched.duration) * fundamental_matrix(sys, sched)
    assert np.linalg.norm(lhs - rhs) <= 1e-9 * max(1.0, np.linalg.norm(rhs))


def test_simulate_origin_stays_put():
    sys = example20_system(0.5)
    traj = simulate(sys, [0.0, 0.0], Schedule([([0.3, 0.7], 2.0)]), 0.1)
    assert np.all(traj.points == 0)


def test_simulate_rotation_stays_on_circle():
    sys = ControlSet([ROTATION])
    traj = simulate(sys, [1.0, 0.0], Schedule([([1.0], 2 * math.pi)]), 0.05)
    np.testing.assert_allclose(np.linalg.norm(traj.points, axis=1), 1.0, atol=1e-9)
    np.testing.assert_allclose(traj.points[-1], [1.0, 0.0], atol=1e-9)
    assert np.all(np.diff(traj.times) > 0)
    assert traj.times[-1] == pytest.approx(2 * math.pi)


def test_simulate_ex62_relaxes_to_kernel_line():
    sys = example20_system(0.5)
    traj = simulate(sys, [2.0, 2.0], Schedule.stationary(0, 30.0, 2), 0.5)
    np.testing.assert_allclose(traj.points[-1], [1.0, 2.0], atol=1e-6)
    np.testing.assert_allclose(traj.points[:, 1], 2.0, atol=1e-12)
    for t, x in zip(traj.times, traj.points):
        np.testing.assert_allclose(x, oracles.ex62_stationary([2.0, 2.0], 0, t), atol=1e-10)


def test_simulate_samples_are_flow_related(rng):
    sys = ControlSet([rng.standard_normal((3, 3)) for _ in range(2)])
    sched = Schedule([([0.5, 0.5], 0.37), ([1.0, 0.0], 0.81)])
    traj = simulate(sys, rng.standard_normal(3), sched, 0.1)
    a = sys.combine([0.5, 0.5])
    for k in range(1, 4):
        dt = traj.times[k] - traj.times[k - 1]
        np.testing.assert_allclose(traj.points[k], mat_exp(a, dt) @ traj.points[k - 1], rtol=1e-10)


# shift and validation


def test_shift_zero_is_identity():
    sys = example20_system(0.5)
    assert shift(sys, 0.0) == sys


def test_shift_minus_identity():
    out = shift(ControlSet([-np.eye(2)]), -1.0)
    np.testing.assert_array_equal(out.generators[0], np.zeros((2, 2)))


@pytest.mark.parametrize("gens", [[], [np.zeros((2, 3))], [np.eye(2), np.eye(3)],
                                  [np.full((2, 2), np.inf)], [np.eye(7)]])
def test_control_set_rejects_bad_generators(gens):
    with pytest.raises(InvalidInputError):
        ControlSet(gens)


@pytest.mark.parametrize("segs", [[([0.5, 0.6], 1.0)], [([-0.1, 1.1], 1.0)], [([1.0], 0.0)]])
def test_schedule_rejects_bad_segments(segs):
    with pytest.raises(InvalidInputError):
        Schedule(segs)


def test_schedule_weight_count_must_match():
    with pytest.raises(InvalidInputError):
        fundamental_matrix(example20_system(0.5), Schedule([([1.0], 1.0)]))


def test_generators_are_immutable():
    sys = example20_system(0.5)
    with pytest.raises(ValueError):
        sys.generators[0][0, 0] = 5.0


# irreducibility


def test_identity_is_reducible():
    basis = irreducibility_test(ControlSet([np.eye(2)]))
    assert basis is not None and basis.shape == (2, 1)


def test_ex62_is_irreducible():
    assert irreducibility_test(example20_system(0.5)) is None


def test_block_triangular_pair_shares_e1():
    a = np.array([[1.0, 2.0, 0.5], [0.0, -1.0, 3.0], [0.0, 0.7, 0.2]])
    b = np.array([[-0.3, 1.0, 1.0], [0.0, 0.4, -2.0], [0.0, 1.5, 1.1]])
    basis = irreducibility_test(ControlSet([a, b]))
    assert basis is not None and basis.shape == (3, 1)
    assert abs(abs(basis[0, 0]) - 1.0) < 1e-9


def test_shared_eigenvector_is_found():
    # invariant line spanned by a common eigenvector that random probes miss
    t = np.array([[1.0, 2.0], [0.5, -1.0]])
    ti = np.linalg.inv(t)
    a = t @ np.array([[1.0, 3.0], [0.0, 2.0]]) @ ti
    b = t @ np.array([[-1.0, 1.0], [0.0, 0.5]]) @ ti
    basis = irreducibility_test(ControlSet([a, b]))
    assert basis is not None
    v = basis[:, 0]
    for g in (a, b):
        w = g @ v
        assert np.linalg.norm(w - (w @ v) * v) < 1e-8


def test_conjugated_irreducible_stays_irreducible(rng):
    sys = example20_system(0.5)
    for seed in range(5):
        t = rng.standard_normal((2, 2)) + 2 * np.eye(2)
        ti = np.linalg.inv(t)
        conj = ControlSet([t @ g @ ti for g in sys.generators])
        assert irreducibility_test(conj, seed=seed) is None


def test_invariant_closure_of_full_orbit():
    basis = invariant_closure([np.array([[0.0, 1.0], [1.0, 0.0]])], [1.0, 0.0])
    assert basis.shape == (2, 2)


# point_in_hull


def test_point_in_hull_member():
    pts = [[0.3, 0.1], [2.0, 1.0], [-1.0, 4.0]]
    assert point_in_hull([2.0, 1.0], pts)


def test_point_in_hull_segment_misses_origin():
    assert not point_in_hull([0.0, 0.0], [[1.0, 0.0], [0.0, 1.0]], tol=1e-9)


def test_point_in_hull_barycentric():
    assert point_in_hull([0.25, 0.25], [[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]])


@given(arrays(np.float64, 2, elements=st.floats(-3, 3)),
       arrays(np.float64, (3, 2), elements=st.floats(-2, 2)))
@settings(max_examples=100, deadline=None)
def test_hull_distance_matches_triangle_oracle(q, tri):
    u, v = tri[1] - tri[0], tri[2] - tri[0]
    area = abs(u[0] * v[1] - u[1] * v[0])
    if area < 1e-3:
        return
    assert hull_distance(q, tri) == pytest.approx(oracles.distance_to_triangle(q, tri), abs=1e-7)
