import math

import numpy as np
import pytest

from orbitresponse import anosov as an
from orbitresponse.determinant import coefficients, decay_fit, smallest_zero
from orbitresponse.traces import TraceSet
from orbitresponse.validation import COS_X1, cat_perturbed

CAT = np.array([[2, 1], [1, 1]])
SIN_X1 = an.TrigPoly2(0.0, ((1, 0, 0.0, 1.0),))


def test_family_validation():
    with pytest.raises(ValueError, match="hyperbolic|det"):
        an.TorusMapFamily(np.array([[1, 1], [0, 1]]))
    with pytest.raises(ValueError):
        an.TorusMapFamily(np.array([[2, 0], [0, 1]]))


def test_smith_normal_form():
    for n in range(1, 9):
        B = np.linalg.matrix_power(np.array(CAT, dtype=object), n) - np.eye(2, dtype=int).astype(object)
        D, U, V = an.smith_normal_form(B)
        assert np.array_equal(U.dot(B).dot(V), D)
        assert D[0, 1] == D[1, 0] == 0 and D[1, 1] % D[0, 0] == 0
        assert abs(U[0, 0] * U[1, 1] - U[0, 1] * U[1, 0]) == 1


def test_small_counts():
    assert np.array_equal(an.lattice_fixed_points(CAT, 1).x, [[0.0, 0.0]])
    fps = an.lattice_fixed_points(CAT, 2)
    assert len(fps) == 5 and abs(fps.det_shift[0]) == 5


@pytest.mark.parametrize("n", range(1, 11))
def test_count_equals_trace_minus_two(n):
    An = np.linalg.matrix_power(CAT, n)
    fps = an.lattice_fixed_points(CAT, n)
    assert len(fps) == An.trace() - 2
    x = fps.x
    y = x @ np.asarray(An, float).T
    assert np.max(np.abs(an.wrap(y - x))) < 1e-9


def test_other_hyperbolic_matrix():
    A = np.array([[3, 2], [1, 1]])
    for n in range(1, 6):
        An = np.linalg.matrix_power(A, n)
        det = round(np.linalg.det(An - np.eye(2)))
        assert len(an.lattice_fixed_points(A, n)) == abs(det)


@pytest.mark.parametrize("n", range(1, 9))
def test_unperturbed_traces_are_one(n):
    fps = an.lattice_fixed_points(CAT, n)
    assert abs(an.trace_b_anosov(fps, COS_X1, 0.0) - 1) < 1e-12


def test_zero_observable_independent_of_v():
    fps = an.lattice_fixed_points(CAT, 4)
    assert an.trace_b_anosov(fps, an.TrigPoly2(), 0.7) == an.trace_b_anosov(fps, an.TrigPoly2(), 0.0)


def test_unperturbed_determinant_is_one_minus_z():
    fam = an.cat_map()
    c = an.anosov_coefficients(fam, COS_X1, 8)
    assert np.max(np.abs(c.a - np.r_[1, -1, np.zeros(7)])) < 1e-12
    assert smallest_zero(c) == pytest.approx(1, abs=1e-12)
    assert not c.da_dt.any() and not c.d2a_dudt.any()


def test_continuation_unperturbed_keeps_points():
    fps = an.lattice_fixed_points(CAT, 4)
    moved = an.continue_orbits(an.cat_map(), fps, 0.03)
    assert np.array_equal(moved.x, fps.x)


@pytest.mark.parametrize("n", range(1, 7))
def test_continued_points_are_fixed(n):
    fam = cat_perturbed()
    fps = an.continue_orbits(fam, an.lattice_fixed_points(fam, n), 0.01)
    y, _, _, _ = an._orbit_and_derivatives(fam, fps.x, n, 0.01)
    assert np.max(np.abs(an.wrap(y - fps.x))) < 1e-12
    assert len(fps) == len(an.lattice_fixed_points(fam, n))


def test_continuation_reversible():
    fam = cat_perturbed()
    for n in (3, 6):
        fps0 = an.lattice_fixed_points(fam, n)
        back = an.continue_orbits(fam, an.continue_orbits(fam, fps0, 0.01), 0.0)
        assert np.max(np.abs(an.wrap(back.x - fps0.x))) < 1e-10


def test_breakdown_raises():
    big = (an.TrigPoly2(0.0, ((1, 0, 0.0, 5.0), (0, 1, 3.0, 0.0))), an.TrigPoly2(0.0, ((1, 1, 4.0, 0.0),)))
    fam = an.cat_map(big, t_max=1.0)
    with pytest.raises(an.HyperbolicityLost, match="hyperbolicity margin lost at t ="):
        an.continue_orbits(fam, an.lattice_fixed_points(fam, 3), 0.5)


def test_time_derivative_is_step_consistent():
    fam = cat_perturbed()
    g = an.TrigPoly2(0.0, ((1, -1, 1.0, 0.0),))
    coarse = an.anosov_traces(fam, g, 5, h=2e-3)
    fine = an.anosov_traces(fam, g, 5, h=1e-3)
    # b_n(0, t) is stationary in t here, so only the mixed column carries signal
    assert np.max(np.abs(fine.db_dt)) < 1e-8
    a, b = coarse.d2b_dudt[2:], fine.d2b_dudt[2:]
    assert np.all(np.abs(b) > 1)
    assert np.max(np.abs(a - b) / np.abs(b)) < 1e-4


def test_response_matches_differenced_mean():
    fam = cat_perturbed()
    rep, _ = an.anosov_response(fam, COS_X1, 8)
    h = 1e-3
    m = {k: an.anosov_mean(fam, COS_X1, 8, k * h) for k in (-2, -1, 1, 2)}
    fd = (8 * (m[1] - m[-1]) - (m[2] - m[-2])) / (12 * h)
    assert abs(rep.response - fd) < 1e-3


def test_diagonal_observable_response_is_minus_pi():
    # (sin 2πx1, 0) pushed through A^{-1} has divergence 2π cos 2π(x1 - x2): only the n = 0 term pairs with g
    g = an.TrigPoly2(0.0, ((1, -1, 1.0, 0.0),))
    rep, _ = an.anosov_response(cat_perturbed(), g, 8)
    assert rep.response == pytest.approx(-math.pi, abs=1e-6)
    h = 1e-3
    m = {k: an.anosov_mean(cat_perturbed(), g, 8, k * h) for k in (-2, -1, 1, 2)}
    fd = (8 * (m[1] - m[-1]) - (m[2] - m[-2])) / (12 * h)
    assert abs(rep.response - fd) < 1e-3


def test_torus_decay_fit():
    fam = cat_perturbed()
    c = an.coefficients_at(fam, COS_X1, 10, fam.t_max)
    fit = decay_fit(c, "torus")
    assert fit.beta > 0 and fit.r2 > 0.8


def test_birkhoff_lebesgue_cases():
    r = an.birkhoff_oracle(cat_perturbed(), COS_X1, 0.0, 2 * 10**6, seed=1)
    assert abs(r.mean) < 3 * r.stderr
    g = an.TrigPoly2(0.25, ((2, 1, 0.5, -0.3),))
    r = an.birkhoff_oracle(an.cat_map(), g, 0.0, 2 * 10**6, seed=2)
    assert abs(r.mean - 0.25) < 3 * r.stderr


def test_birkhoff_seed_stability():
    fam = cat_perturbed()
    a = an.birkhoff_oracle(fam, COS_X1, 0.03, 2 * 10**6, seed=3)
    b = an.birkhoff_oracle(fam, COS_X1, 0.03, 2 * 10**6, seed=4)
    assert abs(a.mean - b.mean) < 3 * math.hypot(a.stderr, b.stderr)


def test_birkhoff_thread_count_does_not_change_result():
    fam = cat_perturbed()
    runs = [an.birkhoff_oracle(fam, COS_X1, 0.01, 10**5, seed=5, threads=k) for k in (1, 3, 8)]
    assert runs[0] == runs[1] == runs[2]
