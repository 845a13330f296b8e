import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from orbitresponse import oracle
from orbitresponse.determinant import coefficients
from orbitresponse.model import CircleMapFamily, TrigPoly, cos_poly, doubling, sin_poly
from orbitresponse.response import (
    DegenerateZeroError,
    NotCenteredError,
    abel_diagnostic,
    center,
    circle_response,
    linear_response,
    linear_response_alt,
    mean_observable,
)
from orbitresponse.traces import TraceSet, compute_traces


def _coeffs(fam, g, n_max=12):
    return coefficients(compute_traces(fam, g, n_max))


def test_mean_doubling_and_zero_observable(nonlinear, g):
    assert abs(mean_observable(_coeffs(doubling(), g))) < 1e-14
    assert mean_observable(_coeffs(nonlinear, TrigPoly())) == 0.0


def test_mean_matches_galerkin_density(nonlinear, g):
    assert abs(mean_observable(_coeffs(nonlinear, g)) - oracle.mean_at(nonlinear, g, 0.0)) < 1e-9


def test_response_zero_without_direction(g):
    fam = CircleMapFamily(2, sin_poly(0.05), TrigPoly())
    assert linear_response(_coeffs(fam, g)) == 0.0


def test_response_of_additive_sine_perturbation_vanishes(doubling_sin, g):
    # 2x + t sin 2πx: L[sin 2π·] = 0 so the invariant density stays Lebesgue to first order
    assert abs(linear_response(_coeffs(doubling_sin, g, 10))) < 1e-12


def test_response_of_composed_perturbation_is_minus_pi(composed, g):
    # 2x + t sin 4πx = (Id + t sin 2π·) ∘ 2x: only the n = 0 susceptibility term survives
    assert linear_response(_coeffs(composed, g, 10)) == pytest.approx(-math.pi, abs=1e-6)


def test_response_matches_finite_difference_oracle(nonlinear, g):
    fd = oracle.finite_difference_response(nonlinear, g, h=1e-3)
    assert abs(linear_response(_coeffs(nonlinear, g)) - fd) < 1e-5


def test_alternative_form_agrees(nonlinear, composed, g):
    for fam in (nonlinear, composed):
        c = _coeffs(fam, g)
        assert abs(linear_response(c) - linear_response_alt(c)) < 1e-10


@settings(max_examples=15, deadline=None)
@given(alpha=st.floats(-3, 3), beta=st.floats(-3, 3))
def test_mean_affine_in_observable(alpha, beta):
    fam = CircleMapFamily(2, sin_poly(0.05), sin_poly(1.0), 0.1)
    g1, g2 = cos_poly(), TrigPoly(0.5, [0.0, 0.2], [0.3])
    lhs = mean_observable(_coeffs(fam, alpha * g1 + beta * g2, 10))
    rhs = alpha * mean_observable(_coeffs(fam, g1, 10)) + beta * mean_observable(_coeffs(fam, g2, 10))
    assert abs(lhs - rhs) < 1e-10


def test_degenerate_denominator_refused():
    with pytest.raises(DegenerateZeroError, match="not simple"):
        mean_observable(coefficients(TraceSet.from_b(np.zeros(5))))


def test_abel_zero_direction(g):
    fam = CircleMapFamily(2, sin_poly(0.05), TrigPoly())
    gc = center(fam, g, 12)
    tr = compute_traces(fam, gc, 10)
    assert abel_diagnostic(tr, coefficients(tr)).limit == 0.0


def test_abel_additive_sine_tends_to_zero(doubling_sin, g):
    tr = compute_traces(doubling_sin, g, 10)
    est = abel_diagnostic(tr, coefficients(tr))
    # terms are 2π, π, then 0: the limit is the true response 0
    assert est.terms[0] == pytest.approx(2 * math.pi)
    assert est.terms[1] == pytest.approx(math.pi)
    assert abs(est.response) < 1e-3


def test_abel_composed_is_minus_pi(composed, g):
    tr = compute_traces(composed, g, 10)
    assert abel_diagnostic(tr, coefficients(tr)).response == pytest.approx(-math.pi, abs=1e-3)


def test_abel_refuses_uncentered(nonlinear):
    g = cos_poly() + TrigPoly(0.3)
    tr = compute_traces(nonlinear, g, 10)
    with pytest.raises(NotCenteredError, match="not centered"):
        abel_diagnostic(tr, coefficients(tr))


def test_report_json_is_deterministic(nonlinear, g):
    a = circle_response(nonlinear, g, 12, abel=True).to_json()
    b = circle_response(nonlinear, g, 12, abel=True).to_json()
    assert a == b
    rep = json.loads(a)
    assert rep["abel_estimate"] == pytest.approx(rep["response"], abs=1e-6)
    assert abs(rep["denominator"]) > 1e-6
