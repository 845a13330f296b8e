import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from orbitresponse import oracle
from orbitresponse.model import CircleMapFamily, TrigPoly, cos_poly, doubling, sin_poly
from orbitresponse.orbits import enumerate_fixed_points
from orbitresponse.traces import (
    HyperbolicityError,
    compute_traces,
    trace_b,
    trace_d2b_dudt,
    trace_db_dt,
    trace_db_du,
)
from orbitresponse.validation import derivative_errors


def test_doubling_traces_are_one():
    assert trace_b(enumerate_fixed_points(doubling(), 3)) == 1.0
    tr = compute_traces(doubling(), cos_poly(), 12)
    assert np.max(np.abs(tr.b[1:] - 1)) < 1e-12


def test_db_du_doubling(g):
    assert trace_db_du(enumerate_fixed_points(doubling(), 1, g)) == pytest.approx(-1.0, abs=1e-15)
    for n in range(2, 11):
        assert abs(trace_db_du(enumerate_fixed_points(doubling(), n, g))) < 1e-12


def test_zero_observable_and_direction_give_zero(nonlinear):
    fam0 = CircleMapFamily(2, sin_poly(0.05), TrigPoly())
    fps = enumerate_fixed_points(nonlinear, 4, TrigPoly())
    assert trace_db_du(fps) == 0.0
    assert trace_d2b_dudt(fps) == 0.0
    fps0 = enumerate_fixed_points(fam0, 4, cos_poly())
    assert trace_db_dt(fps0) == 0.0
    assert trace_d2b_dudt(fps0) == 0.0


def test_db_dt_single_point(doubling_sin):
    assert trace_db_dt(enumerate_fixed_points(doubling_sin, 1)) == pytest.approx(-2 * np.pi, rel=1e-15)


def test_db_dt_matches_continued_orbits(nonlinear):
    h = 1e-4
    fps = enumerate_fixed_points(nonlinear, 4)
    fd = (trace_b(enumerate_fixed_points(nonlinear, 4, t=h)) - trace_b(enumerate_fixed_points(nonlinear, 4, t=-h))) / (2 * h)
    assert abs(trace_db_dt(fps) - fd) / abs(fd) < 1e-5


def test_mixed_derivative_matches_finite_difference(doubling_sin, g):
    h = 1e-4
    fp = enumerate_fixed_points(doubling_sin, 2, g, t=h)
    fm = enumerate_fixed_points(doubling_sin, 2, g, t=-h)
    fd = (trace_b(fp, h) - trace_b(fp, -h) - trace_b(fm, h) + trace_b(fm, -h)) / (4 * h * h)
    exact = trace_d2b_dudt(enumerate_fixed_points(doubling_sin, 2, g))
    assert abs(exact - fd) / abs(exact) < 1e-4


def test_trace_matches_galerkin_matrix_powers(nonlinear, g):
    op = oracle.assemble(nonlinear, g, 0.0, 0.0)
    assert abs(trace_b(enumerate_fixed_points(nonlinear, 5, g)) - oracle.matrix_trace_power(op, 5)) < 1e-9
    for n in range(1, 9):
        assert abs(trace_b(enumerate_fixed_points(nonlinear, n, g)) - oracle.matrix_trace_power(op, n)) < 1e-8


def test_all_derivatives_match_finite_differences(nonlinear, g):
    worst = derivative_errors(nonlinear, g, 6, 1e-5)
    assert max(worst.values()) < 1e-5, worst


@settings(max_examples=20, deadline=None)
@given(alpha=st.floats(-2, 2), beta=st.floats(-2, 2))
def test_db_du_linear_in_observable(alpha, beta):
    fam = CircleMapFamily(2, sin_poly(0.05), sin_poly(1.0), 0.1)
    g1, g2 = cos_poly(), TrigPoly(0.2, [0.0, 0.3], [0.1])
    combo = alpha * g1 + beta * g2
    for n in (1, 3, 5):
        lhs = trace_db_du(enumerate_fixed_points(fam, n, combo))
        rhs = alpha * trace_db_du(enumerate_fixed_points(fam, n, g1)) + beta * trace_db_du(
            enumerate_fixed_points(fam, n, g2)
        )
        assert lhs == pytest.approx(rhs, abs=1e-13)


def test_guard_trips_on_corrupted_multiplier(nonlinear):
    fps = enumerate_fixed_points(nonlinear, 2)
    fps.multiplier[0] = 1.0
    with pytest.raises(HyperbolicityError):
        trace_b(fps)


def test_traceset_positive_and_finite(nonlinear, g):
    tr = compute_traces(nonlinear, g, 10)
    for col in (tr.b, tr.db_du, tr.db_dt, tr.d2b_dudt):
        assert np.all(np.isfinite(col))
    assert np.all(tr.b[1:] > 0)
