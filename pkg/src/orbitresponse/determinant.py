"""Power-series coefficients of the dynamical determinant ``d(z, u, t)``.

``d(z) = exp(-sum_n b_n z^n / n) = sum_n a_n z^n`` gives the recursion
``n a_n = -sum_{j<n} a_j b_{n-j}``; differentiating it by Leibniz' rule gives
the recursions for the u-, t- and mixed partials.  The arithmetic only uses
``+``, ``*`` and ``/`` so it runs on any scalar backend.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .numerics import BINARY64, Scalar
from .traces import TraceSet

DEFAULT_NMAX = 12
ZERO_TOL = 1e-12
SIMPLE_ZERO_TOL = 1e-6
NEWTON_MAX_ITER = 100


class ZeroNotFound(ArithmeticError):
    """Newton failed to localise a simple leading zero."""


class InsufficientDecayData(ValueError):
    pass


@dataclass(frozen=True)
class DetCoeffs:
    """``a_n`` and partials for ``n = 0..n_max``."""

    a: np.ndarray
    da_du: np.ndarray
    da_dt: np.ndarray
    d2a_dudt: np.ndarray
    scalar: Scalar = BINARY64

    @property
    def n_max(self) -> int:
        return len(self.a) - 1

    def truncation_error(self) -> float:
        """``|a_{n_max}|`` plus the largest last-kept derivative coefficient."""
        n = self.n_max
        return float(abs(self.a[n]) + max(abs(self.da_du[n]), abs(self.da_dt[n]), abs(self.d2a_dudt[n])))

    def rows(self):
        for n in range(self.n_max + 1):
            yield n, self.a[n], self.da_du[n], self.da_dt[n], self.d2a_dudt[n]


class DetValue(NamedTuple):
    d: float
    dz: float
    du: float
    dt: float
    dudt: float
    dzt: float


def coefficients(traces: TraceSet) -> DetCoeffs:
    """Run the four convolution recursions up to ``traces.n_max``."""
    s = traces.scalar
    b, bu, bt, but = traces.b, traces.db_du, traces.db_dt, traces.d2b_dudt
    N = traces.n_max
    with s.context():
        a = [s.one()]
        au = [s.zero()]
        at = [s.zero()]
        aut = [s.zero()]
        for n in range(1, N + 1):
            acc, acc_u, acc_t, acc_ut = s.zero(), s.zero(), s.zero(), s.zero()
            for j in range(n):
                k = n - j
                acc += a[j] * b[k]
                acc_u += au[j] * b[k] + a[j] * bu[k]
                acc_t += at[j] * b[k] + a[j] * bt[k]
                acc_ut += aut[j] * b[k] + au[j] * bt[k] + at[j] * bu[k] + a[j] * but[k]
            a.append(-acc / n)
            au.append(-acc_u / n)
            at.append(-acc_t / n)
            aut.append(-acc_ut / n)
    dtype = float if s.is_binary64 else object
    return DetCoeffs(*(np.array(v, dtype=dtype) for v in (a, au, at, aut)), scalar=s)


def eval_d(coeffs: DetCoeffs, z) -> DetValue:
    """Truncated series and its partials at real ``z``."""
    s = coeffs.scalar
    with s.context():
        n = np.arange(coeffs.n_max + 1)
        zp = np.array([z**k for k in n], dtype=object if not s.is_binary64 else float)
        zp1 = np.array([k * z ** (k - 1) if k else 0 * z for k in n], dtype=zp.dtype)
        return DetValue(
            d=s.fsum(coeffs.a * zp),
            dz=s.fsum(coeffs.a * zp1),
            du=s.fsum(coeffs.da_du * zp),
            dt=s.fsum(coeffs.da_dt * zp),
            dudt=s.fsum(coeffs.d2a_dudt * zp),
            dzt=s.fsum(coeffs.da_dt * zp1),
        )


def smallest_zero(coeffs: DetCoeffs, seed: float = 1.0, tol: float | None = None) -> float:
    """Leading zero of ``z -> d(z)`` by damped Newton from ``seed``."""
    s = coeffs.scalar
    if tol is None:
        tol = ZERO_TOL if s.is_binary64 else 100 * s.precision_floor
    with s.context():
        z = s.one() * seed
        val = eval_d(coeffs, z)
        for _ in range(NEWTON_MAX_ITER):
            if abs(val.d) < tol:
                break
            if abs(val.dz) <= SIMPLE_ZERO_TOL:
                raise ZeroNotFound(f"zero not localized / not simple: |d'(z)| = {float(abs(val.dz)):.3g} at z = {float(z):.17g}")
            step = val.d / val.dz
            new = eval_d(coeffs, z - step)
            # halve on overshoot
            halvings = 0
            while abs(new.d) > abs(val.d) and halvings < 30:
                step = step / 2
                new = eval_d(coeffs, z - step)
                halvings += 1
            if abs(new.d) >= abs(val.d):
                # no further progress possible at this precision
                break
            z, val = z - step, new
        if not abs(val.d) < tol:
            raise ZeroNotFound(f"zero not localized / not simple: |d(z)| = {float(abs(val.d)):.3g} at z = {float(z):.17g}")
        if abs(val.dz) <= SIMPLE_ZERO_TOL:
            raise ZeroNotFound(f"zero not localized / not simple: |d'(z)| = {float(abs(val.dz)):.3g}")
        return z


@dataclass(frozen=True)
class DecayFit:
    slope: float
    theta: float
    beta: float
    r2: float
    floor_n: int
    mode: str


def decay_fit(coeffs: DetCoeffs, mode: str = "circle", floor: float | None = None) -> DecayFit:
    """Least-squares fit of ``log|a_n|`` against ``n^2`` (circle) or ``n^{3/2}`` (torus).

    The fit uses ``n = 1..floor_n`` where ``floor_n`` is the last index before
    ``|a_n|`` first drops below the precision floor.  ``theta = exp(slope)``
    is meaningful in circle mode, ``beta = -slope`` in torus mode.
    """
    if mode not in ("circle", "torus"):
        raise ValueError(f"mode must be 'circle' or 'torus', got {mode!r}")
    floor = coeffs.scalar.precision_floor if floor is None else floor
    mags = [float(abs(a)) for a in coeffs.a[1:]]
    floor_n = 0
    for m in mags:
        if m <= floor:
            break
        floor_n += 1
    if floor_n < 4:
        raise InsufficientDecayData(f"insufficient decay data: {floor_n} coefficients above {floor:g}")
    n = np.arange(1, floor_n + 1, dtype=float)
    x = n**2 if mode == "circle" else n**1.5
    y = np.log(mags[:floor_n])
    slope, icpt = np.polyfit(x, y, 1)
    resid = y - (slope * x + icpt)
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 - float(np.sum(resid**2)) / ss_tot if ss_tot > 0 else 0.0
    return DecayFit(float(slope), float(np.exp(slope)), float(-slope), r2, floor_n, mode)
