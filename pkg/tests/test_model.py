import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from orbitresponse.model import (
    CircleMapFamily,
    DomainError,
    ExpansionError,
    TrigPoly,
    certify_expansion,
    doubling,
    eval_bundle,
    sin_poly,
)
from orbitresponse.numerics import extended

coeffs = st.lists(st.floats(-1, 1, allow_nan=False), min_size=0, max_size=4)


def test_eval_bundle_doubling():
    b = eval_bundle(doubling(), 0.0, 0.25)
    assert (b.F, b.dF, b.d2F, b.dtF) == (0.5, 2.0, 0.0, 0.0)


def test_eval_bundle_direction_derivatives():
    b = eval_bundle(doubling(sin_poly()), 0.0, 0.0)
    assert b.dtF == 0.0
    assert b.dtdxF == pytest.approx(2 * math.pi, rel=1e-15)


def test_eval_bundle_derivative_matches_central_difference():
    fam = CircleMapFamily(2, sin_poly(0.05), TrigPoly())
    h = 1e-6
    fd = (fam.lift(0.5 + h) - fam.lift(0.5 - h)) / (2 * h)
    assert abs(eval_bundle(fam, 0.0, 0.5).dF - fd) / abs(fd) < 1e-8


def test_eval_bundle_rejects_t_outside_range():
    with pytest.raises(DomainError):
        eval_bundle(doubling(sin_poly(), t_max=0.1), 0.2, 0.0)


def test_certify_expansion_examples():
    assert certify_expansion(doubling()) == 2.0
    fam = CircleMapFamily(2, sin_poly(0.05), TrigPoly())
    assert fam.expansion == pytest.approx(2 - 0.1 * math.pi, abs=1e-15)
    assert fam.expansion == pytest.approx(1.68584, abs=1e-5)
    with pytest.raises(ExpansionError, match="not uniformly expanding"):
        CircleMapFamily(2, sin_poly(1.0), TrigPoly())


def test_lift_degree_shift():
    fam = CircleMapFamily(3, TrigPoly(0.1, [0.02], [0.03]), TrigPoly(0, [0.1], [0.2, 0.05]), 0.1)
    x = np.linspace(-2, 2, 41)
    for t in (-0.1, 0.0, 0.07):
        assert np.all(fam.lift(x + 1, t) - fam.lift(x, t) == pytest.approx(3.0, abs=1e-14))


def test_derivative_keeps_order():
    p = TrigPoly(1.0, [0.5, 0.0, 0.2], [0.1])
    assert p.derivative().order == p.order == p.derivative().derivative().order


@settings(max_examples=40, deadline=None)
@given(c0=st.floats(-1, 1), a=coeffs, b=coeffs, x=st.floats(0, 1))
def test_central_difference_converges_to_derivative(c0, a, b, x):
    p = TrigPoly(c0, a, b)
    exact = p.deriv(x)
    errs = [abs((p(x + h) - p(x - h)) / (2 * h) - exact) for h in (1e-2, 5e-3)]
    # second order: halving h quarters the error, up to rounding
    assert errs[1] <= errs[0] / 3 + 1e-9


@settings(max_examples=40, deadline=None)
@given(a=st.lists(st.floats(-0.05, 0.05), min_size=1, max_size=3), scale=st.floats(1.0, 1.5))
def test_certify_expansion_is_monotone_in_coefficients(a, scale):
    small = CircleMapFamily(3, TrigPoly(0.0, a, []), TrigPoly())
    try:
        big = CircleMapFamily(3, TrigPoly(0.0, [scale * v for v in a], []), TrigPoly())
    except ExpansionError:
        return
    assert big.expansion <= small.expansion


def test_extended_precision_evaluation_agrees_with_binary64():
    p = TrigPoly(0.3, [0.2, -0.1], [0.05, 0.4])
    s = extended(113)
    with s.context():
        xs = s.asarray([0.1, 0.37])
        ext = p.deriv(xs, 2, s)
    assert np.allclose(np.asarray(ext, dtype=float), p.deriv(np.array([0.1, 0.37]), 2), rtol=1e-14)


def test_fourier_coefficients_reproduce_values():
    p = TrigPoly(0.3, [0.2], [0.5, -0.1])
    x = 0.123
    val = sum(c * np.exp(2j * np.pi * k * x) for k, c in p.fourier().items())
    assert val.real == pytest.approx(p(x), abs=1e-15)
