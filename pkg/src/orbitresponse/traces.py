"""Periodic-orbit traces ``b_n(u, t)`` and their partial derivatives at the origin.

With the weight ``e^{-u g}`` the traces are

    b_n(u, t) = sum over Fix(f_t^n) of exp(-u g_{t,n}(x)) / ((f_t^n)'(x) - 1)

and the t-derivatives follow from implicit differentiation of the moving
fixed points, using ``X_n`` (the t-derivative of ``f_t^n``) and the return
map curvature.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import CircleMapFamily, TrigPoly
from .numerics import BINARY64, Scalar
from .orbits import FixedPointSet, enumerate_fixed_points

#: Minimum admissible ``Λ - 1``; the certified bound is far larger.
EPS_GUARD = 1e-9


class HyperbolicityError(ArithmeticError):
    """A multiplier came too close to 1."""


@dataclass(frozen=True)
class TraceSet:
    """``b_n`` and its partials at ``(u, t) = (0, 0)`` for ``n = 1..n_max``.

    Index 0 of each array is unused and set to zero so that ``b[n]`` reads
    naturally.
    """

    b: np.ndarray
    db_du: np.ndarray
    db_dt: np.ndarray
    d2b_dudt: np.ndarray
    scalar: Scalar = BINARY64

    @property
    def n_max(self) -> int:
        return len(self.b) - 1

    @classmethod
    def from_b(cls, b, scalar: Scalar = BINARY64) -> "TraceSet":
        """Traces with no parameter dependence (all partials zero)."""
        b = np.concatenate([[scalar.zero()], scalar.asarray(b)])
        zeros = np.full_like(b, scalar.zero())
        return cls(b, zeros, zeros.copy(), zeros.copy(), scalar)

    def rows(self):
        for n in range(1, self.n_max + 1):
            yield n, self.b[n], self.db_du[n], self.db_dt[n], self.d2b_dudt[n]


def _denominator(fps: FixedPointSet):
    lam_m1 = fps.multiplier - 1
    if len(fps) and np.min(np.asarray(lam_m1, dtype=float)) <= EPS_GUARD:
        raise HyperbolicityError(f"multiplier within {EPS_GUARD:g} of 1 at period {fps.n}")
    return lam_m1


def _rate(fps: FixedPointSet):
    """d/dt of the multiplier along the moving fixed point."""
    return fps.xn_prime + fps.curvature * fps.xn / (1 - fps.multiplier)


def trace_b(fps: FixedPointSet, u: float = 0.0):
    """``b_n(u, t)`` at the set's own ``t``; ``u`` enters only through the weight."""
    lam_m1 = _denominator(fps)
    if u == 0:
        return fps.scalar.fsum(1 / lam_m1)
    return fps.scalar.fsum(fps.scalar.exp(-u * fps.gsum) / lam_m1)


def trace_db_du(fps: FixedPointSet):
    return -fps.scalar.fsum(fps.gsum / _denominator(fps))


def trace_db_dt(fps: FixedPointSet):
    lam_m1 = _denominator(fps)
    return -fps.scalar.fsum(_rate(fps) / lam_m1**2)


def trace_d2b_dudt(fps: FixedPointSet):
    lam_m1 = _denominator(fps)
    lam_at_m1 = fps.multiplier_at - 1
    # multiplier is an orbit invariant; the orbits module already enforces it
    inner = (fps.xn_at * fps.gprime_at / lam_at_m1).sum(axis=1)
    terms = _rate(fps) / lam_m1**2 * fps.gsum + inner / lam_m1
    return fps.scalar.fsum(terms)


def compute_traces(
    fam: CircleMapFamily,
    g: TrigPoly,
    n_max: int,
    scalar: Scalar = BINARY64,
) -> TraceSet:
    """Traces and partials at the origin for ``n = 1..n_max``."""
    if n_max < 1:
        raise ValueError("n_max must be >= 1")
    with scalar.context():
        b, du, dt, dudt = ([scalar.zero()] for _ in range(4))
        for n in range(1, n_max + 1):
            fps = enumerate_fixed_points(fam, n, g, scalar=scalar)
            b.append(trace_b(fps))
            du.append(trace_db_du(fps))
            dt.append(trace_db_dt(fps))
            dudt.append(trace_d2b_dudt(fps))
        dtype = float if scalar.is_binary64 else object
        return TraceSet(*(np.array(v, dtype=dtype) for v in (b, du, dt, dudt)), scalar=scalar)


def weighted_traces(fam: CircleMapFamily, g: TrigPoly, n_max: int, u: float = 0.0, t: float = 0.0) -> np.ndarray:
    """``b_n(u, t)`` for ``n = 1..n_max`` by direct enumeration at ``t``."""
    return np.array([trace_b(enumerate_fixed_points(fam, n, g, t=t), u) for n in range(1, n_max + 1)])
