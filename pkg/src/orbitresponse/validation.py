"""End-to-end cross-checks between the periodic-orbit pipeline and the independent oracles.

Each check returns a :class:`CheckResult` with the observed discrepancies and
the tolerance it was held to.  ``run_all`` is what the ``validate`` command
executes.
"""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from typing import Callable

import numpy as np

from . import anosov as an
from . import oracle
from .determinant import coefficients, decay_fit, eval_d, smallest_zero
from .model import CircleMapFamily, TrigPoly, cos_poly, doubling, sin_poly
from .orbits import _lift_power, _orbit_data, enumerate_fixed_points
from .response import linear_response, mean_observable
from .traces import (
    TraceSet,
    compute_traces,
    trace_b,
    trace_d2b_dudt,
    trace_db_dt,
    trace_db_du,
    weighted_traces,
)


@dataclass
class Settings:
    """Knobs for the expensive checks."""

    galerkin_M: int = oracle.DEFAULT_M
    galerkin_K: int = oracle.DEFAULT_K
    fd_h: float = 1e-3
    torus_h: float = 1e-3
    birkhoff_iter: int = 10**8
    birkhoff_burn_in: int = 1000
    birkhoff_chains: int = 64
    birkhoff_dt: float = 0.01
    seed: int = 0
    threads: int = 1


@dataclass
class CheckResult:
    name: str
    passed: bool
    tolerance: float
    observed: dict = field(default_factory=dict)

    def line(self) -> str:
        worst = ", ".join(f"{k}={v:.3e}" if isinstance(v, float) else f"{k}={v}" for k, v in self.observed.items())
        return f"[{'PASS' if self.passed else 'FAIL'}] {self.name}: {worst} (tol {self.tolerance:g})"


def nonlinear_family(t_max: float = 0.1) -> CircleMapFamily:
    """``F_t(x) = 2x + 0.05 sin 2πx + t sin 2πx``."""
    return CircleMapFamily(2, sin_poly(0.05), sin_poly(1.0), t_max)


def cat_perturbed(t_max: float = 0.05) -> an.TorusMapFamily:
    """Cat map pushed along ``(sin 2πx₁, 0)``."""
    return an.cat_map((an.TrigPoly2(0.0, ((1, 0, 0.0, 1.0),)), an.TrigPoly2()), t_max)


COS_X1 = an.TrigPoly2(0.0, ((1, 0, 1.0, 0.0),))


def _err(a, b) -> float:
    return float(abs(a - b))


def check_doubling(s: Settings) -> CheckResult:
    fam = doubling()
    tr = compute_traces(fam, cos_poly(), 12)
    c = coefficients(tr)
    obs = {
        "max|b_n-1|": float(np.max(np.abs(tr.b[1:] - 1))),
        "|a_1+1|": _err(c.a[1], -1.0),
        "max|a_n|,2<=n<=10": float(np.max(np.abs(c.a[2:11]))),
        "|z0-1|": _err(smallest_zero(c), 1.0),
    }
    return CheckResult("1 doubling map degenerate family", max(obs.values()) < 1e-12, 1e-12, obs)


def check_benchmark(s: Settings) -> CheckResult:
    fam = doubling(sin_poly(1.0))
    g = cos_poly()
    c = coefficients(compute_traces(fam, g, 10))
    pipe = float(linear_response(c))
    sus = oracle.susceptibility_response(fam, g, s.galerkin_M, K=s.galerkin_K)
    fd = oracle.finite_difference_response(fam, g, s.galerkin_M, s.fd_h, s.galerkin_K)
    obs = {"pipeline": pipe, "susceptibility": sus, "finite_difference": fd}
    passed = all(abs(v + math.pi) <= 1e-6 for v in obs.values())
    return CheckResult("2 benchmark response 2x + t sin 2πx equals -π", passed, 1e-6, obs)


def check_nonlinear(s: Settings) -> CheckResult:
    fam = nonlinear_family()
    g = cos_poly()
    c = coefficients(compute_traces(fam, g, 12))
    mean = float(mean_observable(c))
    resp = float(linear_response(c))
    gal = oracle.mean_at(fam, g, 0.0, s.galerkin_M, s.galerkin_K)
    fd = oracle.finite_difference_response(fam, g, s.galerkin_M, s.fd_h, s.galerkin_K)
    zeros = {}
    for t in (0.0, -fam.t_max / 2, fam.t_max / 2):
        zc = coefficients(TraceSet.from_b(weighted_traces(fam, g, 12, 0.0, t)))
        zeros[t] = float(smallest_zero(zc))
    obs = {
        "|mean-galerkin|": _err(mean, gal),
        "|response-fd|": _err(resp, fd),
        "max|z0(t)-1|": max(abs(z - 1) for z in zeros.values()),
        "response": resp,
    }
    passed = obs["|mean-galerkin|"] <= 1e-9 and obs["|response-fd|"] <= 1e-5 and obs["max|z0(t)-1|"] <= 1e-9
    return CheckResult("3 nonlinear family mean, response, leading zero", passed, 1e-5, obs)


def check_trace_identities(s: Settings) -> CheckResult:
    fam = nonlinear_family()
    g = cos_poly()
    op = oracle.assemble(fam, g, 0.0, 0.0, s.galerkin_M, s.galerkin_K)
    trace_err = max(
        abs(trace_b(enumerate_fixed_points(fam, n, g)) - oracle.matrix_trace_power(op, n)) for n in range(1, 7)
    )
    c = coefficients(compute_traces(fam, g, 12))
    vals = oracle.eigenvalues(op)
    det_err = max(
        abs(float(eval_d(c, z).d) - oracle.determinant_product(op, z, vals)) for z in np.linspace(-1.5, 1.5, 31)
    )
    obs = {"max|trace-tr(L^n)|": float(trace_err), "max|d-prod(1-zλ)|": float(det_err)}
    passed = trace_err <= 1e-7 and det_err <= 1e-6
    return CheckResult("4 trace and determinant identities", passed, 1e-6, obs)


def _rel(analytic, fd) -> float:
    return float(np.max(np.abs(analytic - fd) / np.maximum(np.abs(analytic), 1e-300)))


def derivative_errors(fam: CircleMapFamily, g: TrigPoly, n_max: int = 6, h: float = 1e-5) -> dict:
    """Worst relative error of each analytic derivative against a central difference."""
    worst = {k: 0.0 for k in ("Xn", "Xn'", "C", "db_du", "db_dt", "d2b_dudt")}
    for n in range(1, n_max + 1):
        fps = enumerate_fixed_points(fam, n, g)
        x = np.asarray(fps.x, dtype=float)
        # Xn = ∂_t F^n at fixed x
        fd = (_lift_power(fam, x, n, h) - _lift_power(fam, x, n, -h)) / (2 * h)
        worst["Xn"] = max(worst["Xn"], _rel(fps.xn, fd))
        # Xn' and C as x-derivatives of the Xn and Λ recursions along nearby orbits
        plus = _orbit_data(fam, g, x + h, n, 0.0, fps.scalar)
        minus = _orbit_data(fam, g, x - h, n, 0.0, fps.scalar)
        worst["Xn'"] = max(worst["Xn'"], _rel(fps.xn_prime, (plus[3] - minus[3]) / (2 * h)))
        worst["C"] = max(worst["C"], _rel(fps.curvature, (plus[1] - minus[1]) / (2 * h)))
        # traces by differencing the weighted sums themselves
        fd_u = (trace_b(fps, h) - trace_b(fps, -h)) / (2 * h)
        worst["db_du"] = max(worst["db_du"], _rel(trace_db_du(fps), fd_u))
        fp = enumerate_fixed_points(fam, n, g, t=h)
        fm = enumerate_fixed_points(fam, n, g, t=-h)
        worst["db_dt"] = max(worst["db_dt"], _rel(trace_db_dt(fps), (trace_b(fp) - trace_b(fm)) / (2 * h)))
        fd_ut = (trace_b(fp, h) - trace_b(fp, -h) - trace_b(fm, h) + trace_b(fm, -h)) / (4 * h * h)
        worst["d2b_dudt"] = max(worst["d2b_dudt"], _rel(trace_d2b_dudt(fps), fd_ut))
    return worst


def check_derivatives(s: Settings) -> CheckResult:
    obs = derivative_errors(nonlinear_family(), cos_poly())
    return CheckResult("5 analytic derivatives vs central differences", max(obs.values()) < 1e-5, 1e-5, obs)


def check_decay(s: Settings) -> CheckResult:
    fit = decay_fit(coefficients(compute_traces(nonlinear_family(), cos_poly(), 12)), "circle")
    obs = {"slope": fit.slope, "r2": fit.r2, "points": fit.floor_n}
    return CheckResult("6 circle decay log|a_n| ~ n^2", fit.slope < 0 and fit.r2 > 0.9, 0.9, obs)


def check_torus_exact(s: Settings) -> CheckResult:
    fam = an.cat_map()
    A = np.array([[2, 1], [1, 1]], dtype=object)
    count_bad, b_err = 0, 0.0
    b = []
    for n in range(1, 11):
        fps = an.lattice_fixed_points(fam, n)
        An = np.linalg.matrix_power(A, n)
        count_bad += int(len(fps) != An[0, 0] + An[1, 1] - 2)
        bn = an.trace_b_anosov(fps, COS_X1, 0.0)
        b_err = max(b_err, abs(bn - 1))
        b.append(bn)
    c = coefficients(TraceSet.from_b(np.array(b)))
    det_err = max(abs(c.a[1] + 1), float(np.max(np.abs(c.a[2:]))))
    obs = {
        "count mismatches": count_bad,
        "max|b_n-1|": float(b_err),
        "max|a-(1-z)|": float(det_err),
        "|z0-1|": _err(smallest_zero(c), 1.0),
    }
    passed = count_bad == 0 and max(obs["max|b_n-1|"], obs["max|a-(1-z)|"], obs["|z0-1|"]) <= 1e-12
    return CheckResult("7 cat map counts, traces, determinant 1 - z", passed, 1e-12, obs)


def birkhoff_slope(s: Settings, fam=None, g=None) -> tuple[float, float, list]:
    fam = fam or cat_perturbed()
    g = g or COS_X1
    dt = s.birkhoff_dt
    runs = [
        an.birkhoff_oracle(fam, g, sign * dt, s.birkhoff_iter, s.birkhoff_burn_in, s.seed,
                           s.birkhoff_chains, s.threads)
        for sign in (-1, 1)
    ]
    slope = (runs[1].mean - runs[0].mean) / (2 * dt)
    err = math.hypot(runs[0].stderr, runs[1].stderr) / (2 * dt)
    return slope, err, runs


def check_torus_perturbed(s: Settings) -> CheckResult:
    fam = cat_perturbed()
    g = COS_X1
    fps0 = an.lattice_fixed_points(fam, 6)
    back = an.continue_orbits(fam, an.continue_orbits(fam, fps0, 0.01), 0.0)
    rev = float(np.max(np.abs(an.wrap(back.x - fps0.x))))
    report, _ = an.anosov_response(fam, g, 8, s.torus_h)
    h = s.torus_h
    m = {k: an.anosov_mean(fam, g, 8, k * h) for k in (-2, -1, 1, 2)}
    fd = (8 * (m[1] - m[-1]) - (m[2] - m[-2])) / (12 * h)
    slope, slope_err, _ = birkhoff_slope(s, fam, g)
    obs = {
        "reversibility": rev,
        "response": report.response,
        "|response-fd mean|": _err(report.response, fd),
        "birkhoff slope": slope,
        "birkhoff stderr": slope_err,
        "|response-birkhoff|": _err(report.response, slope),
    }
    passed = rev <= 1e-10 and obs["|response-fd mean|"] <= 1e-3 and obs["|response-birkhoff|"] <= 1e-2
    return CheckResult("8 perturbed cat map response, continuation, Birkhoff", passed, 1e-2, obs)


def _determinism_payload(s: Settings, threads: int) -> str:
    sub = Settings(**{**asdict(s), "threads": threads, "birkhoff_iter": min(s.birkhoff_iter, 10**6)})
    slope, err, runs = birkhoff_slope(sub)
    report, traces = an.anosov_response(cat_perturbed(), COS_X1, 6, s.torus_h)
    return json.dumps({"slope": slope, "err": err, "means": [r.mean for r in runs],
                       "report": asdict(report), "b": traces.b.tolist()}, sort_keys=True)


def check_determinism(s: Settings) -> CheckResult:
    a = _determinism_payload(s, 1)
    b = _determinism_payload(s, 8)
    return CheckResult("9 results independent of thread count", a == b, 0.0, {"identical": a == b})


CHECKS: list[Callable[[Settings], CheckResult]] = [
    check_doubling,
    check_benchmark,
    check_nonlinear,
    check_trace_identities,
    check_derivatives,
    check_decay,
    check_torus_exact,
    check_torus_perturbed,
    check_determinism,
]


def run_check(check: Callable[[Settings], CheckResult], s: Settings) -> CheckResult:
    """Run one check; an exception counts as a failure carrying its message."""
    try:
        return check(s)
    except Exception as exc:  # surfaced in the report rather than aborting the run
        name = (check.__doc__ or check.__name__).strip()
        return CheckResult(name, False, float("nan"), {"error": f"{type(exc).__name__}: {exc}"})


def run_all(s: Settings | None = None) -> list[CheckResult]:
    s = s or Settings()
    return [run_check(c, s) for c in CHECKS]


def report_json(results: list[CheckResult]) -> str:
    payload = {
        "passed": all(r.passed for r in results),
        "checks": [asdict(r) for r in results],
    }
    return json.dumps(payload, indent=2, sort_keys=True)
