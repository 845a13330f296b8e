"""Mean of an observable and its linear response, assembled from determinant coefficients.

At the leading zero ``z = 1`` of ``d(., 0, t)``:

    ∫ g dμ_t = -∂_u d / ∂_z d

and differentiating once more in ``t`` gives the response.  All four series
are cut at the same ``n_max``.
"""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass
from typing import Optional

import numpy as np

from .determinant import DetCoeffs, coefficients, smallest_zero
from .model import CircleMapFamily, TrigPoly
from .numerics import BINARY64, Scalar
from .traces import TraceSet, compute_traces

#: Smallest admissible |∂_z d(1)|.
DENOM_TOL = 1e-6
CENTERED_TOL = 1e-8


class DegenerateZeroError(ArithmeticError):
    """``Σ n a_n`` vanishes: the leading zero is not simple at this truncation."""


class NotCenteredError(ValueError):
    pass


@dataclass(frozen=True)
class ResponseReport:
    mean: float
    response: float
    abel_estimate: Optional[float]
    truncation_n: int
    tail_indicator: float
    leading_zero: float
    denominator: float

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2, sort_keys=True)


def _sums(coeffs: DetCoeffs):
    s = coeffs.scalar
    n = np.arange(coeffs.n_max + 1)
    with s.context():
        dz = s.fsum(n[1:] * coeffs.a[1:])
        if abs(dz) < DENOM_TOL:
            raise DegenerateZeroError(f"leading zero not simple at truncation order: |Σ n a_n| = {float(abs(dz)):.3g}")
        du = s.fsum(coeffs.da_du[1:])
        dzt = s.fsum(n[1:] * coeffs.da_dt[1:])
        dudt = s.fsum(coeffs.d2a_dudt[1:])
    return dz, du, dzt, dudt


def mean_observable(coeffs: DetCoeffs) -> float:
    """``∫ g dμ_0 = -(Σ ∂_u a_n) / (Σ n a_n)``."""
    dz, du, _, _ = _sums(coeffs)
    with coeffs.scalar.context():
        return -du / dz


def linear_response(coeffs: DetCoeffs) -> float:
    """``∂_t ∫ g dμ_t`` at ``t = 0`` from the quotient-rule form."""
    dz, du, dzt, dudt = _sums(coeffs)
    with coeffs.scalar.context():
        return -dudt / dz + dzt * du / dz**2


def linear_response_alt(coeffs: DetCoeffs) -> float:
    """Same derivative written as ``-∂²_{ut}d/∂_z d - mean · ∂²_{zt}d/∂_z d``."""
    dz, du, dzt, dudt = _sums(coeffs)
    with coeffs.scalar.context():
        mean = -du / dz
        return -dudt / dz - mean * dzt / dz


def tail_indicator(coeffs: DetCoeffs) -> float:
    """Largest last term among the four truncated series."""
    n = coeffs.n_max
    return float(max(abs(n * coeffs.a[n]), abs(coeffs.da_du[n]), abs(n * coeffs.da_dt[n]), abs(coeffs.d2a_dudt[n])))


@dataclass(frozen=True)
class AbelEstimate:
    limit: float
    response: float
    cauchy_tail: float
    terms: np.ndarray


def abel_diagnostic(traces: TraceSet, coeffs: DetCoeffs) -> AbelEstimate:
    """Response as ``-lim (1/n) ∂²_{ut} b_n``, valid for a centered observable.

    ``cauchy_tail`` is the largest of the last three increments of
    ``(1/n) ∂²_{ut} b_n``.
    """
    mean = float(mean_observable(coeffs))
    if abs(mean) >= CENTERED_TOL:
        raise NotCenteredError(f"observable not centered: ∫g dμ = {mean:.3g}")
    n = np.arange(1, traces.n_max + 1)
    terms = np.array([float(v) for v in traces.d2b_dudt[1:]]) / n
    incr = np.abs(np.diff(terms))[-3:]
    A = float(terms[-1])
    return AbelEstimate(A, -A, float(incr.max()) if incr.size else float("inf"), terms)


def center(fam: CircleMapFamily, g: TrigPoly, n_max: int, scalar: Scalar = BINARY64) -> TrigPoly:
    """``g - ∫g dμ_0`` using the determinant mean."""
    mean = float(mean_observable(coefficients(compute_traces(fam, g, n_max, scalar))))
    return g - TrigPoly(mean)


def circle_response(
    fam: CircleMapFamily,
    g: TrigPoly,
    n_max: int = 12,
    scalar: Scalar = BINARY64,
    abel: bool = False,
) -> ResponseReport:
    """Full periodic-orbit pipeline for a circle family."""
    traces = compute_traces(fam, g, n_max, scalar)
    coeffs = coefficients(traces)
    report = report_from_coefficients(coeffs)
    if abel:
        gc = center(fam, g, n_max, scalar)
        ctraces = compute_traces(fam, gc, n_max, scalar)
        est = abel_diagnostic(ctraces, coefficients(ctraces))
        report = ResponseReport(**{**asdict(report), "abel_estimate": est.response})
    return report


def report_from_coefficients(coeffs: DetCoeffs, abel_estimate: float | None = None) -> ResponseReport:
    zero = float(smallest_zero(coeffs))
    dz, _, _, _ = _sums(coeffs)
    return ResponseReport(
        mean=float(mean_observable(coeffs)),
        response=float(linear_response(coeffs)),
        abel_estimate=abel_estimate,
        truncation_n=coeffs.n_max,
        tail_indicator=tail_indicator(coeffs),
        leading_zero=zero,
        denominator=float(dz),
    )
